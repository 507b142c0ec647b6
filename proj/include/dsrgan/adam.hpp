#ifndef DSRGAN_ADAM_HPP_
#define DSRGAN_ADAM_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "dsrgan/error.hpp"
#include "dsrgan/tensor.hpp"

namespace dsrgan {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment estimates, one pair per parameter slot (frozen
/// buffers keep zero moments), plus the number of updates applied.
template <class T>
struct AdamState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  std::int64_t step = 0;

  static AdamState for_params(const ParamSet<T>& ps) {
    AdamState s;
    for (const auto& p : ps) {
      s.m.emplace_back(p.value.shape());
      s.v.emplace_back(p.value.shape());
    }
    return s;
  }

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update over every trainable parameter, using the
/// gradients stored in `ps`.
template <class T>
void adam_step(ParamSet<T>& ps, AdamState<T>& state, double lr, const AdamHyper& h = {}) {
  if (state.m.size() != ps.size() || state.v.size() != ps.size()) {
    throw ShapeError("adam_step: optimizer state does not match the parameter set");
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (state.m[i].shape() != ps[i].value.shape() || state.v[i].shape() != ps[i].value.shape()) {
      throw ShapeError("adam_step: state shape mismatch for '" + ps[i].name + "'");
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(h.beta1, t);
  const double bc2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto& p = ps[i];
    if (!p.trainable) continue;
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      const double mj = h.beta1 * m[j] + (1.0 - h.beta1) * g;
      const double vj = h.beta2 * v[j] + (1.0 - h.beta2) * g * g;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double m_hat = mj / bc1;
      const double v_hat = vj / bc2;
      p.value[j] = static_cast<T>(p.value[j] - lr * m_hat / (std::sqrt(v_hat) + h.eps));
    }
  }
}

}  // namespace dsrgan

#endif  // DSRGAN_ADAM_HPP_

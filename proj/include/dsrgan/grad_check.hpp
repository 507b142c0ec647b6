#ifndef DSRGAN_GRAD_CHECK_HPP_
#define DSRGAN_GRAD_CHECK_HPP_

#include <algorithm>
#include <cmath>
#include <string>

#include "dsrgan/error.hpp"
#include "dsrgan/tensor.hpp"

namespace dsrgan {

struct GradCheckOptions {
  double step = 1e-6;
  // Denominator floor for the relative error, so coordinates whose true
  // gradient is ~0 are judged by absolute error instead.
  double floor = 1e-6;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

/// Compares analytic gradients against central differences on every
/// trainable coordinate of `ps`.
///
/// `loss` is called as loss(ps, with_grad) and returns the scalar value;
/// when with_grad is true it must leave d(loss)/d(param) in each grad slot.
template <class Loss>
GradCheckResult grad_check(ParamSet<double>& ps, Loss&& loss, GradCheckOptions opt = {}) {
  auto eval = [&](bool with_grad) {
    const double v = loss(ps, with_grad);
    if (!std::isfinite(v)) throw PreconditionError("grad_check: loss is not finite");
    return v;
  };

  ps.zero_grad();
  eval(true);
  std::vector<Tensor<double>> analytic;
  for (const auto& p : ps) analytic.push_back(p.grad);

  GradCheckResult res;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (!ps[i].trainable) continue;
    for (std::size_t j = 0; j < ps[i].value.size(); ++j) {
      const double saved = ps[i].value[j];
      ps[i].value[j] = saved + opt.step;
      const double up = eval(false);
      ps[i].value[j] = saved - opt.step;
      const double down = eval(false);
      ps[i].value[j] = saved;

      const double numeric = (up - down) / (2.0 * opt.step);
      const double a = analytic[i][j];
      const double denom = std::max({std::abs(a), std::abs(numeric), opt.floor});
      const double rel = std::abs(a - numeric) / denom;
      ++res.coordinates;
      if (rel > res.max_rel_error || res.coordinates == 1) {
        res.max_rel_error = rel;
        res.worst_param = ps[i].name;
        res.worst_index = j;
        res.analytic = a;
        res.numeric = numeric;
      }
    }
  }
  return res;
}

}  // namespace dsrgan

#endif  // DSRGAN_GRAD_CHECK_HPP_

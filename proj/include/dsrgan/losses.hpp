#ifndef DSRGAN_LOSSES_HPP_
#define DSRGAN_LOSSES_HPP_

// Adversarial and content losses. The adversarial pair comes in two forms:
// the absolute-difference losses (default) and the cross-entropy losses of
// the classic minimax objective.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dsrgan/error.hpp"
#include "dsrgan/tensor.hpp"

namespace dsrgan {

enum class AdversarialForm { absolute, log };

namespace detail {

inline void check_probabilities(std::span<const double> p, const char* what) {
  if (p.empty()) throw PreconditionError(std::string(what) + ": empty probability list");
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw PreconditionError(std::string(what) + ": probability outside [0, 1]");
    }
  }
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Keeps log() finite when a probability saturates.
inline constexpr double kLogClamp = 1e-7;
inline double safe_log(double p) { return std::log(std::clamp(p, kLogClamp, 1.0)); }

}  // namespace detail

/// (1/2m) * sum(|1 - D(y_i)| + |D(G(x_i))|)
inline double adversarial_loss_d(std::span<const double> d_real, std::span<const double> d_fake) {
  detail::check_probabilities(d_real, "adversarial_loss_d");
  detail::check_probabilities(d_fake, "adversarial_loss_d");
  if (d_real.size() != d_fake.size()) {
    throw PreconditionError("adversarial_loss_d: real and fake batches differ in size");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < d_real.size(); ++i) s += std::abs(1.0 - d_real[i]) + std::abs(d_fake[i]);
  return s / (2.0 * static_cast<double>(d_real.size()));
}

/// (1/m) * sum |1 - D(G(x_i))|
inline double adversarial_loss_g(std::span<const double> d_fake) {
  detail::check_probabilities(d_fake, "adversarial_loss_g");
  double s = 0.0;
  for (double f : d_fake) s += std::abs(1.0 - f);
  return s / static_cast<double>(d_fake.size());
}

/// -(1/2) * [mean log D(y) + mean log(1 - D(G(x)))]
inline double adversarial_loss_d_log(std::span<const double> d_real,
                                     std::span<const double> d_fake) {
  detail::check_probabilities(d_real, "adversarial_loss_d_log");
  detail::check_probabilities(d_fake, "adversarial_loss_d_log");
  double s = 0.0;
  for (double r : d_real) s -= detail::safe_log(r);
  double t = 0.0;
  for (double f : d_fake) t -= detail::safe_log(1.0 - f);
  return 0.5 * (s / static_cast<double>(d_real.size()) + t / static_cast<double>(d_fake.size()));
}

/// -mean log D(G(x)) (non-saturating generator objective)
inline double adversarial_loss_g_log(std::span<const double> d_fake) {
  detail::check_probabilities(d_fake, "adversarial_loss_g_log");
  double s = 0.0;
  for (double f : d_fake) s -= detail::safe_log(f);
  return s / static_cast<double>(d_fake.size());
}

/// Mean squared difference over every element.
template <class T>
double content_loss(const Tensor<T>& generated, const Tensor<T>& truth) {
  if (generated.shape() != truth.shape()) {
    throw ShapeError("content_loss: shape " + generated.shape().str() + " vs " +
                     truth.shape().str());
  }
  detail::require<ShapeError>(generated.size() > 0, "content_loss: empty tensors");
  double s = 0.0;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const double d = static_cast<double>(generated[i]) - static_cast<double>(truth[i]);
    s += d * d;
  }
  return s / static_cast<double>(generated.size());
}

/// d(content_loss)/d(generated)
template <class T>
Tensor<T> content_loss_grad(const Tensor<T>& generated, const Tensor<T>& truth) {
  Tensor<T> g(generated.shape());
  const double k = 2.0 / static_cast<double>(generated.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = static_cast<T>(k * (static_cast<double>(generated[i]) - static_cast<double>(truth[i])));
  }
  return g;
}

inline double generator_loss(double content, double adv_g, double alpha) {
  detail::require<PreconditionError>(alpha >= 0.0, "generator_loss: alpha must be >= 0");
  return content + alpha * adv_g;
}

// Gradients with respect to the probabilities, for either form. Inputs lie
// in [0, 1], so |1 - p| has slope -1 and |p| slope +1 everywhere.

inline double adversarial_d(AdversarialForm form, std::span<const double> real,
                            std::span<const double> fake) {
  return form == AdversarialForm::absolute ? adversarial_loss_d(real, fake)
                                           : adversarial_loss_d_log(real, fake);
}

inline double adversarial_g(AdversarialForm form, std::span<const double> fake) {
  return form == AdversarialForm::absolute ? adversarial_loss_g(fake) : adversarial_loss_g_log(fake);
}

inline std::vector<double> adversarial_d_grad_real(AdversarialForm form,
                                                   std::span<const double> real) {
  const double m = static_cast<double>(real.size());
  std::vector<double> g(real.size());
  for (std::size_t i = 0; i < real.size(); ++i) {
    g[i] = form == AdversarialForm::absolute ? -1.0 / (2.0 * m)
                                             : -0.5 / (m * std::max(real[i], detail::kLogClamp));
  }
  return g;
}

inline std::vector<double> adversarial_d_grad_fake(AdversarialForm form,
                                                   std::span<const double> fake) {
  const double m = static_cast<double>(fake.size());
  std::vector<double> g(fake.size());
  for (std::size_t i = 0; i < fake.size(); ++i) {
    g[i] = form == AdversarialForm::absolute
               ? 1.0 / (2.0 * m)
               : 0.5 / (m * std::max(1.0 - fake[i], detail::kLogClamp));
  }
  return g;
}

inline std::vector<double> adversarial_g_grad(AdversarialForm form, std::span<const double> fake) {
  const double m = static_cast<double>(fake.size());
  std::vector<double> g(fake.size());
  for (std::size_t i = 0; i < fake.size(); ++i) {
    g[i] = form == AdversarialForm::absolute ? -1.0 / m
                                             : -1.0 / (m * std::max(fake[i], detail::kLogClamp));
  }
  return g;
}

}  // namespace dsrgan

#endif  // DSRGAN_LOSSES_HPP_

#ifndef DSRGAN_LAYERS_HPP_
#define DSRGAN_LAYERS_HPP_

// Layers that bind ops to entries of a ParamSet and cache what their
// backward pass needs. A layer refers to its parameters by index, so a
// network (ParamSet + layers) can be copied as a value.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "dsrgan/ops.hpp"
#include "dsrgan/tensor.hpp"

namespace dsrgan {

enum class Mode { train, inference };

/// Seeded initializer. Draw order equals registration order, so a network
/// built twice from the same seed is bitwise identical.
class ParamInit {
 public:
  explicit ParamInit(std::uint64_t seed) : rng_(seed) {}

  /// Normal with std = sqrt(2 / fan_in).
  template <class T>
  Tensor<T> he_normal(Shape s, std::size_t fan_in) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    Tensor<T> t(s);
    for (auto& v : t.vec()) v = static_cast<T>(dist(rng_));
    return t;
  }

 private:
  std::mt19937_64 rng_;
};

inline constexpr double kPreluInitSlope = 0.25;

template <class T>
struct Conv2dLayer {
  std::size_t weight = 0, bias = 0;
  int stride = 1, pad = 0;
  Tensor<T> input;

  static void declare(ParamSet<T>& ps, ParamInit& init, const std::string& name,
                      std::size_t c_in, std::size_t c_out, std::size_t k) {
    ps.add(name + ".weight", init.he_normal<T>(Shape{c_out, c_in, k, k}, c_in * k * k));
    ps.add(name + ".bias", Tensor<T>(Shape{c_out, 1, 1, 1}));
  }

  static Conv2dLayer bind(const ParamSet<T>& ps, const std::string& name, int stride, int pad,
                          std::size_t c_in, std::size_t c_out, std::size_t k) {
    Conv2dLayer l;
    l.weight = ps.index_of(name + ".weight");
    l.bias = ps.index_of(name + ".bias");
    l.stride = stride;
    l.pad = pad;
    detail::require<ConfigError>(ps[l.weight].value.shape() == (Shape{c_out, c_in, k, k}) &&
                                     ps[l.bias].value.size() == c_out,
                                 "parameter '" + name + "' has an unexpected shape");
    return l;
  }

  Tensor<T> forward(const ParamSet<T>& ps, const Tensor<T>& x) {
    input = x;
    return ops::conv2d(x, ps[weight].value, ps[bias].value, stride, pad);
  }

  Tensor<T> backward(ParamSet<T>& ps, const Tensor<T>& gy, bool need_input_grad = true) {
    Tensor<T> gx;
    ops::conv2d_backward(input, ps[weight].value, gy, stride, pad, need_input_grad ? &gx : nullptr,
                         ps[weight].grad, ps[bias].grad);
    return gx;
  }
};

template <class T>
struct BatchNormLayer {
  std::size_t gamma = 0, beta = 0, running_mean = 0, running_var = 0;
  ops::BatchNormCache<T> cache;

  static void declare(ParamSet<T>& ps, const std::string& name, std::size_t channels) {
    const Shape s{channels, 1, 1, 1};
    ps.add(name + ".gamma", Tensor<T>(s, T(1)));
    ps.add(name + ".beta", Tensor<T>(s, T(0)));
    ps.add(name + ".running_mean", Tensor<T>(s, T(0)), false);
    ps.add(name + ".running_var", Tensor<T>(s, T(1)), false);
  }

  static BatchNormLayer bind(const ParamSet<T>& ps, const std::string& name, std::size_t channels) {
    BatchNormLayer l;
    l.gamma = ps.index_of(name + ".gamma");
    l.beta = ps.index_of(name + ".beta");
    l.running_mean = ps.index_of(name + ".running_mean");
    l.running_var = ps.index_of(name + ".running_var");
    for (auto i : {l.gamma, l.beta, l.running_mean, l.running_var}) {
      detail::require<ConfigError>(ps[i].value.size() == channels,
                                   "parameter '" + ps[i].name + "' has an unexpected shape");
    }
    return l;
  }

  Tensor<T> forward(ParamSet<T>& ps, const Tensor<T>& x, Mode mode) {
    if (mode == Mode::train) {
      return ops::batch_norm_train(x, ps[gamma].value, ps[beta].value, ps[running_mean].value,
                                   ps[running_var].value, cache);
    }
    return ops::batch_norm_inference(x, ps[gamma].value, ps[beta].value, ps[running_mean].value,
                                     ps[running_var].value);
  }

  /// Valid only after a training-mode forward.
  Tensor<T> backward(ParamSet<T>& ps, const Tensor<T>& gy) {
    return ops::batch_norm_backward(gy, ps[gamma].value, cache, ps[gamma].grad, ps[beta].grad);
  }
};

template <class T>
struct PReluLayer {
  std::size_t slopes = 0;
  Tensor<T> input;

  static void declare(ParamSet<T>& ps, const std::string& name, std::size_t channels) {
    ps.add(name + ".slope", Tensor<T>(Shape{channels, 1, 1, 1}, static_cast<T>(kPreluInitSlope)));
  }

  static PReluLayer bind(const ParamSet<T>& ps, const std::string& name, std::size_t channels) {
    PReluLayer l;
    l.slopes = ps.index_of(name + ".slope");
    detail::require<ConfigError>(ps[l.slopes].value.size() == channels,
                                 "parameter '" + name + ".slope' has an unexpected shape");
    return l;
  }

  Tensor<T> forward(const ParamSet<T>& ps, const Tensor<T>& x) {
    input = x;
    return ops::prelu(x, ps[slopes].value);
  }

  Tensor<T> backward(ParamSet<T>& ps, const Tensor<T>& gy) {
    return ops::prelu_backward(input, ps[slopes].value, gy, ps[slopes].grad);
  }
};

template <class T>
struct LeakyReluLayer {
  T alpha = T(0.2);
  Tensor<T> input;

  Tensor<T> forward(const Tensor<T>& x) {
    input = x;
    return ops::leaky_relu(x, alpha);
  }
  Tensor<T> backward(const Tensor<T>& gy) const { return ops::leaky_relu_backward(input, alpha, gy); }
};

template <class T>
struct DenseLayer {
  std::size_t weight = 0, bias = 0;
  Tensor<T> input;

  static void declare(ParamSet<T>& ps, ParamInit& init, const std::string& name,
                      std::size_t in_features, std::size_t out_features) {
    ps.add(name + ".weight", init.he_normal<T>(Shape{out_features, in_features, 1, 1}, in_features));
    ps.add(name + ".bias", Tensor<T>(Shape{out_features, 1, 1, 1}));
  }

  static DenseLayer bind(const ParamSet<T>& ps, const std::string& name, std::size_t in_features,
                         std::size_t out_features) {
    DenseLayer l;
    l.weight = ps.index_of(name + ".weight");
    l.bias = ps.index_of(name + ".bias");
    detail::require<ConfigError>(
        ps[l.weight].value.shape() == (Shape{out_features, in_features, 1, 1}) &&
            ps[l.bias].value.size() == out_features,
        "parameter '" + name + "' has an unexpected shape");
    return l;
  }

  Tensor<T> forward(const ParamSet<T>& ps, const Tensor<T>& x) {
    input = x;
    return ops::dense(x, ps[weight].value, ps[bias].value);
  }

  Tensor<T> backward(ParamSet<T>& ps, const Tensor<T>& gy) {
    return ops::dense_backward(input, ps[weight].value, gy, ps[weight].grad, ps[bias].grad);
  }
};

}  // namespace dsrgan

#endif  // DSRGAN_LAYERS_HPP_

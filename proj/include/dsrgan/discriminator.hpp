#ifndef DSRGAN_DISCRIMINATOR_HPP_
#define DSRGAN_DISCRIMINATOR_HPP_

// Real/fabricated classifier for HR tiles: a schedule of 3x3 convolutions
// with LeakyReLU, adaptive average pooling, a dense head and a sigmoid.

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dsrgan/error.hpp"
#include "dsrgan/layers.hpp"
#include "dsrgan/tensor.hpp"

namespace dsrgan {

struct ConvSpec {
  int features = 0;
  int stride = 1;
  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

struct DiscriminatorConfig {
  std::vector<ConvSpec> convs = {{128, 1}, {128, 2}, {256, 1},  {256, 2}, {512, 1},
                                 {512, 2}, {1024, 1}, {1024, 2}, {1024, 1}};
  double leaky_alpha = 0.2;
  int pool_h = 1;
  int pool_w = 1;
  std::vector<int> dense_widths = {1024, 1};

  static constexpr std::size_t kConvLayers = 9;

  /// The default layout with every width divided by `divisor`, for
  /// desk-scale runs.
  static DiscriminatorConfig narrow(int divisor) {
    DiscriminatorConfig c;
    for (auto& s : c.convs) s.features = std::max(1, s.features / divisor);
    c.dense_widths.front() = std::max(1, c.dense_widths.front() / divisor);
    return c;
  }

  int stride2_layers() const {
    int n = 0;
    for (const auto& s : convs) n += s.stride == 2;
    return n;
  }

  /// Smallest accepted input side.
  std::size_t min_input() const { return std::size_t{1} << stride2_layers(); }

  void validate() const {
    detail::require<ConfigError>(convs.size() == kConvLayers,
                                 "discriminator: conv schedule must have 9 layers");
    int prev = 1;
    for (const auto& s : convs) {
      detail::require<ConfigError>(s.features >= prev,
                                   "discriminator: feature widths must be non-decreasing");
      detail::require<ConfigError>(s.stride == 1 || s.stride == 2,
                                   "discriminator: strides must be 1 or 2");
      prev = s.features;
    }
    detail::require<ConfigError>(pool_h >= 1 && pool_w >= 1, "discriminator: pool size must be >= 1");
    detail::require<ConfigError>(!dense_widths.empty() && dense_widths.back() == 1,
                                 "discriminator: dense head must end in one unit");
    for (int w : dense_widths) detail::require<ConfigError>(w >= 1, "discriminator: dense width < 1");
    detail::require<ConfigError>(leaky_alpha >= 0.0, "discriminator: leaky_alpha must be >= 0");
  }

  friend bool operator==(const DiscriminatorConfig&, const DiscriminatorConfig&) = default;
};

template <class T>
ParamSet<T> build_discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParamSet<T> ps;
  ParamInit init(seed);
  std::size_t channels = 1;
  for (std::size_t i = 0; i < cfg.convs.size(); ++i) {
    const auto f = static_cast<std::size_t>(cfg.convs[i].features);
    Conv2dLayer<T>::declare(ps, init, "conv" + std::to_string(i), channels, f, 3);
    channels = f;
  }
  std::size_t features = channels * static_cast<std::size_t>(cfg.pool_h * cfg.pool_w);
  for (std::size_t i = 0; i < cfg.dense_widths.size(); ++i) {
    const auto out = static_cast<std::size_t>(cfg.dense_widths[i]);
    DenseLayer<T>::declare(ps, init, "dense" + std::to_string(i), features, out);
    features = out;
  }
  return ps;
}

template <class T>
class Discriminator {
 public:
  Discriminator(DiscriminatorConfig cfg, std::uint64_t seed)
      : Discriminator(cfg, build_discriminator<T>(cfg, seed)) {}

  Discriminator(DiscriminatorConfig cfg, ParamSet<T> params)
      : cfg_(std::move(cfg)), params_(std::move(params)) {
    cfg_.validate();
    bind();
  }

  const DiscriminatorConfig& config() const { return cfg_; }
  ParamSet<T>& params() { return params_; }
  const ParamSet<T>& params() const { return params_; }

  /// (N, 1, H, W) -> (N, 1, 1, 1) probabilities of "real".
  Tensor<T> forward(const Tensor<T>& x) {
    const Shape s = x.shape();
    if (s.c != 1) throw ShapeError("discriminator expects 1 input channel");
    if (s.h < cfg_.min_input() || s.w < cfg_.min_input()) {
      throw ShapeError("discriminator input " + s.str() + " below minimum side " +
                       std::to_string(cfg_.min_input()));
    }
    Tensor<T> h = x;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      h = conv_acts_[i].forward(convs_[i].forward(params_, h));
    }
    pooled_shape_ = h.shape();
    h = ops::adaptive_avg_pool(h, static_cast<std::size_t>(cfg_.pool_h),
                               static_cast<std::size_t>(cfg_.pool_w));
    h = h.reshaped(Shape{s.n, h.size() / s.n, 1, 1});
    for (std::size_t i = 0; i < dense_.size(); ++i) {
      h = dense_[i].forward(params_, h);
      if (i + 1 < dense_.size()) h = dense_acts_[i].forward(h);
    }
    output_ = ops::sigmoid(h);
    return output_;
  }

  /// Backpropagates d(loss)/d(probability) from the latest forward;
  /// accumulates parameter gradients and returns the input gradient.
  Tensor<T> backward(const Tensor<T>& grad_prob) {
    Tensor<T> g = ops::sigmoid_backward(output_, grad_prob);
    for (std::size_t i = dense_.size(); i-- > 0;) {
      if (i + 1 < dense_.size()) g = dense_acts_[i].backward(g);
      g = dense_[i].backward(params_, g);
    }
    const Shape ps{pooled_shape_.n, pooled_shape_.c, static_cast<std::size_t>(cfg_.pool_h),
                   static_cast<std::size_t>(cfg_.pool_w)};
    g = ops::adaptive_avg_pool_backward(pooled_shape_, g.reshaped(ps));
    for (std::size_t i = convs_.size(); i-- > 0;) {
      g = convs_[i].backward(params_, conv_acts_[i].backward(g));
    }
    return g;
  }

 private:
  void bind() {
    convs_.clear();
    conv_acts_.clear();
    dense_.clear();
    dense_acts_.clear();
    const T alpha = static_cast<T>(cfg_.leaky_alpha);
    std::size_t channels = 1;
    for (std::size_t i = 0; i < cfg_.convs.size(); ++i) {
      const auto f = static_cast<std::size_t>(cfg_.convs[i].features);
      convs_.push_back(
          Conv2dLayer<T>::bind(params_, "conv" + std::to_string(i), cfg_.convs[i].stride, 1, channels, f, 3));
      conv_acts_.push_back(LeakyReluLayer<T>{alpha, {}});
      channels = f;
    }
    std::size_t features = channels * static_cast<std::size_t>(cfg_.pool_h * cfg_.pool_w);
    for (std::size_t i = 0; i < cfg_.dense_widths.size(); ++i) {
      const auto out = static_cast<std::size_t>(cfg_.dense_widths[i]);
      dense_.push_back(DenseLayer<T>::bind(params_, "dense" + std::to_string(i), features, out));
      dense_acts_.push_back(LeakyReluLayer<T>{alpha, {}});
      features = out;
    }
    detail::require<ConfigError>(params_.size() == 2 * (convs_.size() + dense_.size()),
                                 "discriminator parameter set has unexpected extra entries");
  }

  DiscriminatorConfig cfg_;
  ParamSet<T> params_;
  std::vector<Conv2dLayer<T>> convs_;
  std::vector<LeakyReluLayer<T>> conv_acts_;
  std::vector<DenseLayer<T>> dense_;
  std::vector<LeakyReluLayer<T>> dense_acts_;
  Shape pooled_shape_{};
  Tensor<T> output_;
};

}  // namespace dsrgan

#endif  // DSRGAN_DISCRIMINATOR_HPP_

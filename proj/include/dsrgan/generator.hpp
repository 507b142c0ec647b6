#ifndef DSRGAN_GENERATOR_HPP_
#define DSRGAN_GENERATOR_HPP_

// Super-resolution generator:
//
//   conv(first_kernel) -> PReLU                              = h0
//   n_res_blocks x [conv3 -> BN -> PReLU -> conv3 -> BN -> PReLU, + skip]
//   + h0 (global skip)
//   log2(scale) x [conv3 -> pixel_shuffle(2) -> PReLU]
//   conv(last_kernel) -> tanh

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "dsrgan/error.hpp"
#include "dsrgan/layers.hpp"
#include "dsrgan/tensor.hpp"

namespace dsrgan {

struct GeneratorConfig {
  int n_res_blocks = 8;
  int base_features = 128;
  int upsample_features = 512;
  int scale = 4;
  int first_kernel = 9;
  int last_kernel = 9;
  int res_kernel = 3;

  int upsample_stages() const { return std::countr_zero(static_cast<unsigned>(scale)); }
  int shuffled_features() const { return upsample_features / 4; }

  void validate() const {
    detail::require<ConfigError>(n_res_blocks >= 0, "generator: n_res_blocks must be >= 0");
    detail::require<ConfigError>(base_features >= 1, "generator: base_features must be >= 1");
    detail::require<ConfigError>(upsample_features >= 4 && upsample_features % 4 == 0,
                                 "generator: upsample_features must be a positive multiple of 4");
    detail::require<ConfigError>(scale >= 2 && std::has_single_bit(static_cast<unsigned>(scale)),
                                 "generator: scale must be a power of two >= 2");
    for (int k : {first_kernel, last_kernel, res_kernel}) {
      detail::require<ConfigError>(k >= 1 && k % 2 == 1, "generator: kernel sizes must be odd");
    }
  }

  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

/// Fresh generator parameters. Identical (cfg, seed) give bitwise
/// identical sets.
template <class T>
ParamSet<T> build_generator(const GeneratorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParamSet<T> ps;
  ParamInit init(seed);
  const auto base = static_cast<std::size_t>(cfg.base_features);
  const auto rk = static_cast<std::size_t>(cfg.res_kernel);

  Conv2dLayer<T>::declare(ps, init, "input.conv", 1, base, static_cast<std::size_t>(cfg.first_kernel));
  PReluLayer<T>::declare(ps, "input.prelu", base);
  for (int b = 0; b < cfg.n_res_blocks; ++b) {
    const std::string p = "res" + std::to_string(b);
    Conv2dLayer<T>::declare(ps, init, p + ".conv1", base, base, rk);
    BatchNormLayer<T>::declare(ps, p + ".bn1", base);
    PReluLayer<T>::declare(ps, p + ".prelu1", base);
    Conv2dLayer<T>::declare(ps, init, p + ".conv2", base, base, rk);
    BatchNormLayer<T>::declare(ps, p + ".bn2", base);
    PReluLayer<T>::declare(ps, p + ".prelu2", base);
  }
  std::size_t channels = base;
  for (int u = 0; u < cfg.upsample_stages(); ++u) {
    const std::string p = "up" + std::to_string(u);
    Conv2dLayer<T>::declare(ps, init, p + ".conv", channels,
                            static_cast<std::size_t>(cfg.upsample_features), 3);
    channels = static_cast<std::size_t>(cfg.shuffled_features());
    PReluLayer<T>::declare(ps, p + ".prelu", channels);
  }
  Conv2dLayer<T>::declare(ps, init, "output.conv", channels, 1,
                          static_cast<std::size_t>(cfg.last_kernel));
  return ps;
}

template <class T>
class Generator {
 public:
  Generator(GeneratorConfig cfg, std::uint64_t seed)
      : Generator(cfg, build_generator<T>(cfg, seed)) {}

  Generator(GeneratorConfig cfg, ParamSet<T> params) : cfg_(cfg), params_(std::move(params)) {
    cfg_.validate();
    bind();
  }

  const GeneratorConfig& config() const { return cfg_; }
  ParamSet<T>& params() { return params_; }
  const ParamSet<T>& params() const { return params_; }

  /// (N, 1, h, w) in [-1, 1] -> (N, 1, scale*h, scale*w) in [-1, 1].
  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (x.shape().c != 1) {
      throw ShapeError("generator expects 1 input channel, got " + std::to_string(x.shape().c));
    }
    Tensor<T> h0 = in_act_.forward(params_, in_conv_.forward(params_, x));
    Tensor<T> r = h0;
    for (auto& b : blocks_) r = block_forward(b, r, mode);
    r += h0;
    for (auto& u : ups_) {
      r = u.act.forward(params_, ops::pixel_shuffle(u.conv.forward(params_, r), 2));
    }
    output_ = ops::tanh(out_conv_.forward(params_, r));
    return output_;
  }

  /// Backpropagates d(loss)/d(output) from the most recent training-mode
  /// forward. Accumulates parameter gradients; the input gradient is
  /// returned only when requested.
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = false) {
    Tensor<T> g = out_conv_.backward(params_, ops::tanh_backward(output_, grad_out));
    for (auto it = ups_.rbegin(); it != ups_.rend(); ++it) {
      g = it->conv.backward(params_, ops::pixel_unshuffle(it->act.backward(params_, g), 2));
    }
    Tensor<T> g_h0 = g;
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
      Tensor<T> through = block_backward(*it, g);
      g += through;
    }
    g_h0 += g;
    return in_conv_.backward(params_, in_act_.backward(params_, g_h0), need_input_grad);
  }

  /// Output of residual block `i` (skip included) for input x.
  Tensor<T> forward_residual_block(std::size_t i, const Tensor<T>& x, Mode mode) {
    return block_forward(blocks_.at(i), x, mode);
  }

 private:
  struct ResBlock {
    Conv2dLayer<T> conv1;
    BatchNormLayer<T> bn1;
    PReluLayer<T> act1;
    Conv2dLayer<T> conv2;
    BatchNormLayer<T> bn2;
    PReluLayer<T> act2;
  };
  struct UpStage {
    Conv2dLayer<T> conv;
    PReluLayer<T> act;
  };

  void bind() {
    const auto base = static_cast<std::size_t>(cfg_.base_features);
    const auto rk = static_cast<std::size_t>(cfg_.res_kernel);
    const int rpad = cfg_.res_kernel / 2;
    in_conv_ = Conv2dLayer<T>::bind(params_, "input.conv", 1, cfg_.first_kernel / 2, 1, base,
                                    static_cast<std::size_t>(cfg_.first_kernel));
    in_act_ = PReluLayer<T>::bind(params_, "input.prelu", base);
    blocks_.clear();
    for (int b = 0; b < cfg_.n_res_blocks; ++b) {
      const std::string p = "res" + std::to_string(b);
      blocks_.push_back({Conv2dLayer<T>::bind(params_, p + ".conv1", 1, rpad, base, base, rk),
                         BatchNormLayer<T>::bind(params_, p + ".bn1", base),
                         PReluLayer<T>::bind(params_, p + ".prelu1", base),
                         Conv2dLayer<T>::bind(params_, p + ".conv2", 1, rpad, base, base, rk),
                         BatchNormLayer<T>::bind(params_, p + ".bn2", base),
                         PReluLayer<T>::bind(params_, p + ".prelu2", base)});
    }
    ups_.clear();
    std::size_t channels = base;
    for (int u = 0; u < cfg_.upsample_stages(); ++u) {
      const std::string p = "up" + std::to_string(u);
      const auto shuffled = static_cast<std::size_t>(cfg_.shuffled_features());
      ups_.push_back({Conv2dLayer<T>::bind(params_, p + ".conv", 1, 1, channels,
                                           static_cast<std::size_t>(cfg_.upsample_features), 3),
                      PReluLayer<T>::bind(params_, p + ".prelu", shuffled)});
      channels = shuffled;
    }
    out_conv_ = Conv2dLayer<T>::bind(params_, "output.conv", 1, cfg_.last_kernel / 2, channels, 1,
                                     static_cast<std::size_t>(cfg_.last_kernel));
    detail::require<ConfigError>(params_.size() == expected_param_entries(),
                                 "generator parameter set has unexpected extra entries");
  }

  std::size_t expected_param_entries() const {
    return 3 + 14 * static_cast<std::size_t>(cfg_.n_res_blocks) +
           3 * static_cast<std::size_t>(cfg_.upsample_stages()) + 2;
  }

  Tensor<T> block_forward(ResBlock& b, const Tensor<T>& x, Mode mode) {
    Tensor<T> y = b.act1.forward(params_, b.bn1.forward(params_, b.conv1.forward(params_, x), mode));
    y = b.act2.forward(params_, b.bn2.forward(params_, b.conv2.forward(params_, y), mode));
    y += x;
    return y;
  }

  // Gradient w.r.t. the block input along the convolutional path only; the
  // caller adds the skip path.
  Tensor<T> block_backward(ResBlock& b, const Tensor<T>& gy) {
    Tensor<T> g = b.conv2.backward(params_, b.bn2.backward(params_, b.act2.backward(params_, gy)));
    return b.conv1.backward(params_, b.bn1.backward(params_, b.act1.backward(params_, g)));
  }

  GeneratorConfig cfg_;
  ParamSet<T> params_;
  Conv2dLayer<T> in_conv_;
  PReluLayer<T> in_act_;
  std::vector<ResBlock> blocks_;
  std::vector<UpStage> ups_;
  Conv2dLayer<T> out_conv_;
  Tensor<T> output_;
};

}  // namespace dsrgan

#endif  // DSRGAN_GENERATOR_HPP_

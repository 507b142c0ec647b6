#ifndef DSRGAN_OPS_HPP_
#define DSRGAN_OPS_HPP_

// Forward and backward passes of the network primitives. Backward
// functions accumulate (+=) into parameter gradients and overwrite input
// gradients. Every reduction runs in a fixed order, so results do not
// depend on scheduling.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "dsrgan/error.hpp"
#include "dsrgan/tensor.hpp"

namespace dsrgan::ops {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// ---------------------------------------------------------------------------
// Convolution (cross-correlation, zero padding)

struct ConvGeometry {
  std::size_t c_in, h, w, c_out, k, stride, pad, h_out, w_out;

  static ConvGeometry make(const Shape& in, const Shape& weight, int stride, int pad) {
    dsrgan::detail::require<ShapeError>(stride >= 1 && pad >= 0, "conv2d: stride >= 1 and padding >= 0");
    dsrgan::detail::require<ShapeError>(weight.h == weight.w, "conv2d: kernel must be square");
    if (in.c != weight.c) {
      throw ShapeError("conv2d: input has " + std::to_string(in.c) + " channels, kernel expects " +
                       std::to_string(weight.c));
    }
    const std::size_t k = weight.h;
    const auto s = static_cast<std::size_t>(stride);
    const auto p = static_cast<std::size_t>(pad);
    dsrgan::detail::require<ShapeError>(in.h + 2 * p >= k && in.w + 2 * p >= k,
                                "conv2d: input " + in.str() + " smaller than kernel");
    return {in.c, in.h, in.w, weight.n, k, s, p, (in.h + 2 * p - k) / s + 1,
            (in.w + 2 * p - k) / s + 1};
  }
  std::size_t patch() const { return c_in * k * k; }
  std::size_t out_plane() const { return h_out * w_out; }
};

namespace detail {

// Column buffers are built for bands of output rows so that large planes
// (a 9x9 kernel over 128 channels at 400^2 is ~1.7e9 entries) stay bounded.
inline constexpr std::size_t kColsBudget = std::size_t{1} << 23;

inline std::size_t band_rows(const ConvGeometry& g) {
  return std::clamp<std::size_t>(kColsBudget / std::max<std::size_t>(1, g.patch() * g.w_out), 1, g.h_out);
}

// cols is (C_in*k*k) x ((oh1-oh0)*w_out), row-major, for output rows [oh0, oh1).
template <class T>
void im2col(const T* img, const ConvGeometry& g, std::size_t oh0, std::size_t oh1, T* cols) {
  const auto P = static_cast<std::ptrdiff_t>(g.pad);
  const std::size_t band = (oh1 - oh0) * g.w_out;
  for (std::size_t c = 0; c < g.c_in; ++c) {
    const T* src = img + c * g.h * g.w;
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        T* dst = cols + ((c * g.k + ki) * g.k + kj) * band;
        for (std::size_t oh = oh0; oh < oh1; ++oh) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.stride + ki) - P;
          T* row = dst + (oh - oh0) * g.w_out;
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill(row, row + g.w_out, T(0));
            continue;
          }
          const T* srow = src + static_cast<std::size_t>(ih) * g.w;
          for (std::size_t ow = 0; ow < g.w_out; ++ow) {
            const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * g.stride + kj) - P;
            row[ow] = (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.w)) ? T(0) : srow[iw];
          }
        }
      }
    }
  }
}

// Accumulates a band of columns back into img (which the caller zeroes).
template <class T>
void col2im(const T* cols, const ConvGeometry& g, std::size_t oh0, std::size_t oh1, T* img) {
  const auto P = static_cast<std::ptrdiff_t>(g.pad);
  const std::size_t band = (oh1 - oh0) * g.w_out;
  for (std::size_t c = 0; c < g.c_in; ++c) {
    T* dst = img + c * g.h * g.w;
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        const T* src = cols + ((c * g.k + ki) * g.k + kj) * band;
        for (std::size_t oh = oh0; oh < oh1; ++oh) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.stride + ki) - P;
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.h)) continue;
          T* drow = dst + static_cast<std::size_t>(ih) * g.w;
          const T* srow = src + (oh - oh0) * g.w_out;
          for (std::size_t ow = 0; ow < g.w_out; ++ow) {
            const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * g.stride + kj) - P;
            if (iw >= 0 && iw < static_cast<std::ptrdiff_t>(g.w)) drow[iw] += srow[ow];
          }
        }
      }
    }
  }
}

}  // namespace detail

template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, int stride,
                 int pad) {
  const auto g = ConvGeometry::make(x.shape(), weight.shape(), stride, pad);
  dsrgan::detail::require<ShapeError>(bias.size() == g.c_out, "conv2d: bias length mismatch");
  const std::size_t N = x.shape().n;
  Tensor<T> y(Shape{N, g.c_out, g.h_out, g.w_out});
  const std::size_t rows = detail::band_rows(g);
  std::vector<T> cols(g.patch() * rows * g.w_out);
  const auto pk = static_cast<Eigen::Index>(g.patch());
  ConstMatMap<T> W(weight.data(), static_cast<Eigen::Index>(g.c_out), pk);
  for (std::size_t n = 0; n < N; ++n) {
    MatMap<T> Y(y.plane(n, 0), static_cast<Eigen::Index>(g.c_out),
                static_cast<Eigen::Index>(g.out_plane()));
    for (std::size_t oh0 = 0; oh0 < g.h_out; oh0 += rows) {
      const std::size_t oh1 = std::min(g.h_out, oh0 + rows);
      const auto band = static_cast<Eigen::Index>((oh1 - oh0) * g.w_out);
      detail::im2col(x.plane(n, 0), g, oh0, oh1, cols.data());
      ConstMatMap<T> C(cols.data(), pk, band);
      Y.middleCols(static_cast<Eigen::Index>(oh0 * g.w_out), band).noalias() = W * C;
    }
    for (std::size_t co = 0; co < g.c_out; ++co) {
      T* p = y.plane(n, co);
      const T b = bias[co];
      for (std::size_t i = 0; i < g.out_plane(); ++i) p[i] += b;
    }
  }
  return y;
}

/// grad_x may be null when the input gradient is not needed.
template <class T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& grad_y,
                     int stride, int pad, Tensor<T>* grad_x, Tensor<T>& grad_w,
                     Tensor<T>& grad_b) {
  const auto g = ConvGeometry::make(x.shape(), weight.shape(), stride, pad);
  const std::size_t N = x.shape().n;
  dsrgan::detail::require<ShapeError>(grad_y.shape() == (Shape{N, g.c_out, g.h_out, g.w_out}),
                              "conv2d_backward: grad shape mismatch");
  if (grad_x) *grad_x = Tensor<T>(x.shape());
  const std::size_t rows = detail::band_rows(g);
  std::vector<T> cols(g.patch() * rows * g.w_out);
  std::vector<T> grad_cols(grad_x ? cols.size() : 0);
  const auto co = static_cast<Eigen::Index>(g.c_out);
  const auto pk = static_cast<Eigen::Index>(g.patch());
  const auto op = static_cast<Eigen::Index>(g.out_plane());
  ConstMatMap<T> W(weight.data(), co, pk);
  MatMap<T> GW(grad_w.data(), co, pk);
  for (std::size_t n = 0; n < N; ++n) {
    ConstMatMap<T> GY(grad_y.plane(n, 0), co, op);
    for (std::size_t oh0 = 0; oh0 < g.h_out; oh0 += rows) {
      const std::size_t oh1 = std::min(g.h_out, oh0 + rows);
      const auto band = static_cast<Eigen::Index>((oh1 - oh0) * g.w_out);
      const auto GYb = GY.middleCols(static_cast<Eigen::Index>(oh0 * g.w_out), band);
      detail::im2col(x.plane(n, 0), g, oh0, oh1, cols.data());
      ConstMatMap<T> C(cols.data(), pk, band);
      GW.noalias() += GYb * C.transpose();
      if (grad_x) {
        MatMap<T> GC(grad_cols.data(), pk, band);
        GC.noalias() = W.transpose() * GYb;
        detail::col2im(grad_cols.data(), g, oh0, oh1, grad_x->plane(n, 0));
      }
    }
    for (std::size_t c = 0; c < g.c_out; ++c) {
      const T* p = grad_y.plane(n, c);
      T acc = T(0);
      for (std::size_t i = 0; i < g.out_plane(); ++i) acc += p[i];
      grad_b[c] += acc;
    }
  }
}

// ---------------------------------------------------------------------------
// Batch normalization

struct BatchNormOptions {
  double eps = 1e-5;
  double momentum = 0.1;
};

template <class T>
struct BatchNormCache {
  Tensor<T> x_hat;
  std::vector<double> inv_std;
};

/// Training mode: batch statistics, running statistics updated in place.
template <class T>
Tensor<T> batch_norm_train(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                           Tensor<T>& running_mean, Tensor<T>& running_var,
                           BatchNormCache<T>& cache, BatchNormOptions opt = {}) {
  const Shape s = x.shape();
  const std::size_t count = s.n * s.plane();
  if (count < 2) {
    throw PreconditionError("batch_norm: training mode needs at least 2 values per channel");
  }
  dsrgan::detail::require<ShapeError>(gamma.size() == s.c && beta.size() == s.c,
                              "batch_norm: parameter length mismatch");
  Tensor<T> y(s);
  cache.x_hat = Tensor<T>(s);
  cache.inv_std.assign(s.c, 0.0);
  for (std::size_t c = 0; c < s.c; ++c) {
    double sum = 0.0;
    for (std::size_t n = 0; n < s.n; ++n) {
      const T* p = x.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) sum += p[i];
    }
    const double mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (std::size_t n = 0; n < s.n; ++n) {
      const T* p = x.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) {
        const double d = p[i] - mean;
        sq += d * d;
      }
    }
    const double var = sq / static_cast<double>(count);
    const double inv_std = 1.0 / std::sqrt(var + opt.eps);
    cache.inv_std[c] = inv_std;
    for (std::size_t n = 0; n < s.n; ++n) {
      const T* p = x.plane(n, c);
      T* xh = cache.x_hat.plane(n, c);
      T* q = y.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) {
        xh[i] = static_cast<T>((p[i] - mean) * inv_std);
        q[i] = gamma[c] * xh[i] + beta[c];
      }
    }
    const double unbiased = sq / static_cast<double>(count - 1);
    running_mean[c] =
        static_cast<T>((1.0 - opt.momentum) * running_mean[c] + opt.momentum * mean);
    running_var[c] =
        static_cast<T>((1.0 - opt.momentum) * running_var[c] + opt.momentum * unbiased);
  }
  return y;
}

template <class T>
Tensor<T> batch_norm_inference(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                               const Tensor<T>& running_mean, const Tensor<T>& running_var,
                               BatchNormOptions opt = {}) {
  const Shape s = x.shape();
  dsrgan::detail::require<ShapeError>(gamma.size() == s.c, "batch_norm: parameter length mismatch");
  Tensor<T> y(s);
  for (std::size_t c = 0; c < s.c; ++c) {
    const double inv_std = 1.0 / std::sqrt(static_cast<double>(running_var[c]) + opt.eps);
    const double scale = gamma[c] * inv_std;
    const double shift = beta[c] - running_mean[c] * scale;
    for (std::size_t n = 0; n < s.n; ++n) {
      const T* p = x.plane(n, c);
      T* q = y.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) q[i] = static_cast<T>(p[i] * scale + shift);
    }
  }
  return y;
}

template <class T>
Tensor<T> batch_norm_backward(const Tensor<T>& grad_y, const Tensor<T>& gamma,
                              const BatchNormCache<T>& cache, Tensor<T>& grad_gamma,
                              Tensor<T>& grad_beta) {
  const Shape s = grad_y.shape();
  const double count = static_cast<double>(s.n * s.plane());
  Tensor<T> grad_x(s);
  for (std::size_t c = 0; c < s.c; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t n = 0; n < s.n; ++n) {
      const T* g = grad_y.plane(n, c);
      const T* xh = cache.x_hat.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) {
        sum_g += g[i];
        sum_gx += static_cast<double>(g[i]) * xh[i];
      }
    }
    grad_gamma[c] += static_cast<T>(sum_gx);
    grad_beta[c] += static_cast<T>(sum_g);
    const double k = gamma[c] * cache.inv_std[c];
    const double mean_g = sum_g / count;
    const double mean_gx = sum_gx / count;
    for (std::size_t n = 0; n < s.n; ++n) {
      const T* g = grad_y.plane(n, c);
      const T* xh = cache.x_hat.plane(n, c);
      T* gx = grad_x.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) {
        gx[i] = static_cast<T>(k * (g[i] - mean_g - xh[i] * mean_gx));
      }
    }
  }
  return grad_x;
}

// ---------------------------------------------------------------------------
// Activations

template <class T>
Tensor<T> prelu(const Tensor<T>& x, const Tensor<T>& slopes) {
  const Shape s = x.shape();
  dsrgan::detail::require<ShapeError>(slopes.size() == s.c, "prelu: one slope per channel required");
  Tensor<T> y(s);
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const T a = slopes[c];
      const T* p = x.plane(n, c);
      T* q = y.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) q[i] = p[i] >= T(0) ? p[i] : a * p[i];
    }
  }
  return y;
}

template <class T>
Tensor<T> prelu_backward(const Tensor<T>& x, const Tensor<T>& slopes, const Tensor<T>& grad_y,
                         Tensor<T>& grad_slopes) {
  const Shape s = x.shape();
  Tensor<T> gx(s);
  for (std::size_t c = 0; c < s.c; ++c) {
    const T a = slopes[c];
    T acc = T(0);
    for (std::size_t n = 0; n < s.n; ++n) {
      const T* p = x.plane(n, c);
      const T* g = grad_y.plane(n, c);
      T* q = gx.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) {
        if (p[i] >= T(0)) {
          q[i] = g[i];
        } else {
          q[i] = a * g[i];
          acc += g[i] * p[i];
        }
      }
    }
    grad_slopes[c] += acc;
  }
  return gx;
}

template <class T>
Tensor<T> leaky_relu(const Tensor<T>& x, T alpha) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] >= T(0) ? x[i] : alpha * x[i];
  return y;
}

template <class T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, T alpha, const Tensor<T>& grad_y) {
  Tensor<T> gx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) gx[i] = x[i] >= T(0) ? grad_y[i] : alpha * grad_y[i];
  return gx;
}

template <class T>
T sigmoid_scalar(T v) {
  // Split by sign so exp never overflows.
  if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
  const T e = std::exp(v);
  return e / (T(1) + e);
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = sigmoid_scalar(x[i]);
  return y;
}

/// Uses the forward output y.
template <class T>
Tensor<T> sigmoid_backward(const Tensor<T>& y, const Tensor<T>& grad_y) {
  Tensor<T> gx(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) gx[i] = grad_y[i] * y[i] * (T(1) - y[i]);
  return gx;
}

template <class T>
Tensor<T> tanh(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  return y;
}

template <class T>
Tensor<T> tanh_backward(const Tensor<T>& y, const Tensor<T>& grad_y) {
  Tensor<T> gx(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) gx[i] = grad_y[i] * (T(1) - y[i] * y[i]);
  return gx;
}

// ---------------------------------------------------------------------------
// Sub-pixel rearrangement
//
// Input channel c*r*r + dy*r + dx at (h, w) lands in output channel c at
// (r*h + dy, r*w + dx).

template <class T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, int r) {
  const Shape s = x.shape();
  const auto R = static_cast<std::size_t>(r);
  if (r < 1 || s.c % (R * R) != 0) {
    throw ShapeError("pixel_shuffle: " + std::to_string(s.c) + " channels not divisible by r^2=" +
                     std::to_string(R * R));
  }
  const std::size_t co = s.c / (R * R);
  Tensor<T> y(Shape{s.n, co, s.h * R, s.w * R});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < co; ++c)
      for (std::size_t dy = 0; dy < R; ++dy)
        for (std::size_t dx = 0; dx < R; ++dx) {
          const T* src = x.plane(n, c * R * R + dy * R + dx);
          T* dst = y.plane(n, c);
          for (std::size_t h = 0; h < s.h; ++h)
            for (std::size_t w = 0; w < s.w; ++w)
              dst[(h * R + dy) * (s.w * R) + w * R + dx] = src[h * s.w + w];
        }
  return y;
}

/// Inverse of pixel_shuffle; also its backward pass.
template <class T>
Tensor<T> pixel_unshuffle(const Tensor<T>& y, int r) {
  const Shape s = y.shape();
  const auto R = static_cast<std::size_t>(r);
  if (r < 1 || s.h % R != 0 || s.w % R != 0) {
    throw ShapeError("pixel_unshuffle: spatial dims not divisible by r");
  }
  const std::size_t h_in = s.h / R, w_in = s.w / R;
  Tensor<T> x(Shape{s.n, s.c * R * R, h_in, w_in});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t dy = 0; dy < R; ++dy)
        for (std::size_t dx = 0; dx < R; ++dx) {
          T* dst = x.plane(n, c * R * R + dy * R + dx);
          const T* src = y.plane(n, c);
          for (std::size_t h = 0; h < h_in; ++h)
            for (std::size_t w = 0; w < w_in; ++w)
              dst[h * w_in + w] = src[(h * R + dy) * s.w + w * R + dx];
        }
  return x;
}

// ---------------------------------------------------------------------------
// Adaptive average pooling
//
// Output cell (i, j) averages rows [floor(i*H/oh), ceil((i+1)*H/oh)) and
// the analogous column window.

namespace detail {
inline std::size_t window_begin(std::size_t i, std::size_t in, std::size_t out) {
  return (i * in) / out;
}
inline std::size_t window_end(std::size_t i, std::size_t in, std::size_t out) {
  return ((i + 1) * in + out - 1) / out;
}
}  // namespace detail

template <class T>
Tensor<T> adaptive_avg_pool(const Tensor<T>& x, std::size_t out_h, std::size_t out_w) {
  const Shape s = x.shape();
  dsrgan::detail::require<ShapeError>(out_h >= 1 && out_w >= 1, "adaptive_avg_pool: zero output size");
  dsrgan::detail::require<ShapeError>(out_h <= s.h && out_w <= s.w,
                              "adaptive_avg_pool: output larger than input " + s.str());
  Tensor<T> y(Shape{s.n, s.c, out_h, out_w});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* p = x.plane(n, c);
      T* q = y.plane(n, c);
      for (std::size_t i = 0; i < out_h; ++i) {
        const std::size_t h0 = detail::window_begin(i, s.h, out_h);
        const std::size_t h1 = detail::window_end(i, s.h, out_h);
        for (std::size_t j = 0; j < out_w; ++j) {
          const std::size_t w0 = detail::window_begin(j, s.w, out_w);
          const std::size_t w1 = detail::window_end(j, s.w, out_w);
          double acc = 0.0;
          for (std::size_t h = h0; h < h1; ++h)
            for (std::size_t w = w0; w < w1; ++w) acc += p[h * s.w + w];
          q[i * out_w + j] = static_cast<T>(acc / static_cast<double>((h1 - h0) * (w1 - w0)));
        }
      }
    }
  return y;
}

template <class T>
Tensor<T> adaptive_avg_pool_backward(const Shape& in_shape, const Tensor<T>& grad_y) {
  const Shape s = in_shape;
  const std::size_t out_h = grad_y.shape().h, out_w = grad_y.shape().w;
  Tensor<T> gx(s);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* g = grad_y.plane(n, c);
      T* q = gx.plane(n, c);
      for (std::size_t i = 0; i < out_h; ++i) {
        const std::size_t h0 = detail::window_begin(i, s.h, out_h);
        const std::size_t h1 = detail::window_end(i, s.h, out_h);
        for (std::size_t j = 0; j < out_w; ++j) {
          const std::size_t w0 = detail::window_begin(j, s.w, out_w);
          const std::size_t w1 = detail::window_end(j, s.w, out_w);
          const T share = g[i * out_w + j] / static_cast<T>((h1 - h0) * (w1 - w0));
          for (std::size_t h = h0; h < h1; ++h)
            for (std::size_t w = w0; w < w1; ++w) q[h * s.w + w] += share;
        }
      }
    }
  return gx;
}

// ---------------------------------------------------------------------------
// Dense: x is (N, F, 1, 1) or any shape whose trailing dims flatten to F.

template <class T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  const std::size_t N = x.shape().n;
  const std::size_t F = N ? x.size() / N : 0;
  const std::size_t O = weight.shape().n;
  if (weight.shape().c != F || bias.size() != O) {
    throw ShapeError("dense: input features " + std::to_string(F) + " vs weight " +
                     weight.shape().str());
  }
  Tensor<T> y(Shape{N, O, 1, 1});
  ConstMatMap<T> X(x.data(), static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(F));
  ConstMatMap<T> W(weight.data(), static_cast<Eigen::Index>(O), static_cast<Eigen::Index>(F));
  MatMap<T> Y(y.data(), static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(O));
  Y.noalias() = X * W.transpose();
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < O; ++o) y[n * O + o] += bias[o];
  return y;
}

template <class T>
Tensor<T> dense_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& grad_y,
                         Tensor<T>& grad_w, Tensor<T>& grad_b) {
  const std::size_t N = x.shape().n;
  const std::size_t F = x.size() / N;
  const std::size_t O = weight.shape().n;
  ConstMatMap<T> X(x.data(), static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(F));
  ConstMatMap<T> W(weight.data(), static_cast<Eigen::Index>(O), static_cast<Eigen::Index>(F));
  ConstMatMap<T> GY(grad_y.data(), static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(O));
  MatMap<T> GW(grad_w.data(), static_cast<Eigen::Index>(O), static_cast<Eigen::Index>(F));
  GW.noalias() += GY.transpose() * X;
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < O; ++o) grad_b[o] += grad_y[n * O + o];
  Tensor<T> gx(x.shape());
  MatMap<T> GX(gx.data(), static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(F));
  GX.noalias() = GY * W;
  return gx;
}

}  // namespace dsrgan::ops

#endif  // DSRGAN_OPS_HPP_

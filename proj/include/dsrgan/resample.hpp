#ifndef DSRGAN_RESAMPLE_HPP_
#define DSRGAN_RESAMPLE_HPP_

// Interpolation baselines and the block-mean decimator.
//
// Both upsamplers use half-pixel centers: output index o maps to source
// coordinate (o + 0.5) / scale - 0.5. Neighbors outside the grid are
// replaced by the nearest edge cell.

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "dsrgan/error.hpp"
#include "dsrgan/raster.hpp"

namespace dsrgan {

/// Keys cubic convolution kernel. a = -0.5 gives Catmull-Rom.
inline double keys_kernel(double x, double a = -0.5) {
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

namespace detail {

inline std::ptrdiff_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return 0;
  if (i >= static_cast<std::ptrdiff_t>(n)) return static_cast<std::ptrdiff_t>(n) - 1;
  return i;
}

inline double source_coord(std::size_t out_index, int scale) {
  return (static_cast<double>(out_index) + 0.5) / scale - 0.5;
}

// Taps and weights for one output position along one axis.
template <std::size_t K>
struct Taps {
  std::array<std::ptrdiff_t, K> index{};
  std::array<double, K> weight{};
};

inline std::vector<Taps<2>> linear_taps(std::size_t n_in, int scale) {
  std::vector<Taps<2>> taps(n_in * static_cast<std::size_t>(scale));
  for (std::size_t o = 0; o < taps.size(); ++o) {
    double x = source_coord(o, scale);
    double x0 = std::floor(x);
    double t = x - x0;
    auto i0 = static_cast<std::ptrdiff_t>(x0);
    taps[o].index = {clamp_index(i0, n_in), clamp_index(i0 + 1, n_in)};
    taps[o].weight = {1.0 - t, t};
  }
  return taps;
}

inline std::vector<Taps<4>> cubic_taps(std::size_t n_in, int scale, double a) {
  std::vector<Taps<4>> taps(n_in * static_cast<std::size_t>(scale));
  for (std::size_t o = 0; o < taps.size(); ++o) {
    double x = source_coord(o, scale);
    double x0 = std::floor(x);
    double t = x - x0;
    auto i0 = static_cast<std::ptrdiff_t>(x0);
    for (int k = 0; k < 4; ++k) {
      taps[o].index[k] = clamp_index(i0 - 1 + k, n_in);
      taps[o].weight[k] = keys_kernel(t - (k - 1), a);
    }
  }
  return taps;
}

// Separable resampling: rows first, then columns.
template <std::size_t K>
DemGrid separable_upsample(const DemGrid& g, int scale, const std::vector<Taps<K>>& row_taps,
                           const std::vector<Taps<K>>& col_taps) {
  const std::size_t out_rows = g.rows * static_cast<std::size_t>(scale);
  const std::size_t out_cols = g.cols * static_cast<std::size_t>(scale);

  std::vector<double> horiz(g.rows * out_cols);
  for (std::size_t r = 0; r < g.rows; ++r) {
    const double* src = g.values.data() + r * g.cols;
    for (std::size_t c = 0; c < out_cols; ++c) {
      const auto& tp = col_taps[c];
      double acc = 0.0;
      for (std::size_t k = 0; k < K; ++k) acc += tp.weight[k] * src[tp.index[k]];
      horiz[r * out_cols + c] = acc;
    }
  }

  DemGrid out = g;
  out.rows = out_rows;
  out.cols = out_cols;
  out.cellsize = g.cellsize / scale;
  out.values.assign(out_rows * out_cols, 0.0);
  for (std::size_t r = 0; r < out_rows; ++r) {
    const auto& tp = row_taps[r];
    double* dst = out.values.data() + r * out_cols;
    for (std::size_t k = 0; k < K; ++k) {
      const double w = tp.weight[k];
      const double* src = horiz.data() + static_cast<std::size_t>(tp.index[k]) * out_cols;
      for (std::size_t c = 0; c < out_cols; ++c) dst[c] += w * src[c];
    }
  }
  return out;
}

inline void check_upsample_args(const DemGrid& g, int scale, const char* name) {
  if (scale < 2) throw PreconditionError(std::string(name) + ": scale must be >= 2");
  validate(g);
  require_no_nodata(g, name);
}

}  // namespace detail

inline DemGrid bilinear_upsample(const DemGrid& g, int scale) {
  detail::check_upsample_args(g, scale, "bilinear_upsample");
  return detail::separable_upsample<2>(g, scale, detail::linear_taps(g.rows, scale),
                                       detail::linear_taps(g.cols, scale));
}

inline DemGrid bicubic_upsample(const DemGrid& g, int scale, double a = -0.5) {
  detail::check_upsample_args(g, scale, "bicubic_upsample");
  return detail::separable_upsample<4>(g, scale, detail::cubic_taps(g.rows, scale, a),
                                       detail::cubic_taps(g.cols, scale, a));
}

/// Each output cell is the mean of a factor x factor block.
inline DemGrid downsample_mean(const DemGrid& g, int factor) {
  detail::require<PreconditionError>(factor >= 2, "downsample_mean: factor must be >= 2");
  validate(g);
  require_no_nodata(g, "downsample_mean");
  const auto f = static_cast<std::size_t>(factor);
  if (g.rows % f != 0 || g.cols % f != 0) {
    throw ShapeError("downsample_mean: grid " + std::to_string(g.rows) + "x" +
                     std::to_string(g.cols) + " not divisible by " + std::to_string(f));
  }
  DemGrid out = g;
  out.rows = g.rows / f;
  out.cols = g.cols / f;
  out.cellsize = g.cellsize * factor;
  out.values.assign(out.rows * out.cols, 0.0);
  const double inv = 1.0 / static_cast<double>(f * f);
  for (std::size_t r = 0; r < out.rows; ++r) {
    for (std::size_t c = 0; c < out.cols; ++c) {
      double acc = 0.0;
      for (std::size_t dr = 0; dr < f; ++dr) {
        for (std::size_t dc = 0; dc < f; ++dc) acc += g.at(r * f + dr, c * f + dc);
      }
      out.at(r, c) = acc * inv;
    }
  }
  return out;
}

}  // namespace dsrgan

#endif  // DSRGAN_RESAMPLE_HPP_

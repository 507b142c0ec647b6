#ifndef DSRGAN_SLOPE_HPP_
#define DSRGAN_SLOPE_HPP_

// Slope by the 3x3 weighted-difference (Horn) stencil and slope-binned
// error analysis.
//
//   a b c
//   d e f     dz/dx = ((c + 2f + i) - (a + 2d + g)) / (8 * cellsize)
//   g h i     dz/dy = ((g + 2h + i) - (a + 2b + c)) / (8 * cellsize)

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "dsrgan/error.hpp"
#include "dsrgan/raster.hpp"

namespace dsrgan {

/// Rise-over-run slope magnitude on interior cells. The result is a
/// (rows-2) x (cols-2) grid whose corner is shifted one cell inward.
inline DemGrid horn_slope(const DemGrid& g) {
  validate(g);
  detail::require<PreconditionError>(g.rows >= 3 && g.cols >= 3, "horn_slope: grid smaller than 3x3");
  require_no_nodata(g, "horn_slope");
  DemGrid s = g;
  s.rows = g.rows - 2;
  s.cols = g.cols - 2;
  s.xllcorner = g.xllcorner + g.cellsize;
  s.yllcorner = g.yllcorner + g.cellsize;
  s.values.assign(s.rows * s.cols, 0.0);
  const double denom = 8.0 * g.cellsize;
  for (std::size_t r = 1; r + 1 < g.rows; ++r) {
    for (std::size_t c = 1; c + 1 < g.cols; ++c) {
      const double a = g.at(r - 1, c - 1), b = g.at(r - 1, c), cc = g.at(r - 1, c + 1);
      const double d = g.at(r, c - 1), f = g.at(r, c + 1);
      const double gg = g.at(r + 1, c - 1), h = g.at(r + 1, c), i = g.at(r + 1, c + 1);
      const double dzdx = ((cc + 2 * f + i) - (a + 2 * d + gg)) / denom;
      const double dzdy = ((gg + 2 * h + i) - (a + 2 * b + cc)) / denom;
      s.at(r - 1, c - 1) = std::sqrt(dzdx * dzdx + dzdy * dzdy);
    }
  }
  return s;
}

struct SlopeBin {
  double lo = 0.0;
  double hi = 0.0;
  double mean_abs_err = 0.0;  // 0 for empty bins
  std::size_t count = 0;
};

/// Bins interior cells by truth slope normalized by the maximum slope over
/// every truth grid, and reports mean |pred - truth| per bin.
inline std::vector<SlopeBin> slope_binned_error(std::span<const DemGrid> truths,
                                                std::span<const DemGrid> preds, std::size_t n_bins) {
  detail::require<PreconditionError>(n_bins >= 1, "slope_binned_error: n_bins must be >= 1");
  detail::require<PreconditionError>(!truths.empty() && truths.size() == preds.size(),
                                     "slope_binned_error: need matching non-empty grid lists");
  std::vector<DemGrid> slopes;
  slopes.reserve(truths.size());
  double max_slope = 0.0;
  for (std::size_t k = 0; k < truths.size(); ++k) {
    if (truths[k].rows != preds[k].rows || truths[k].cols != preds[k].cols) {
      throw ShapeError("slope_binned_error: prediction and truth shapes differ");
    }
    slopes.push_back(horn_slope(truths[k]));
    for (double v : slopes.back().values) max_slope = std::max(max_slope, v);
  }

  std::vector<SlopeBin> bins(n_bins);
  std::vector<double> sums(n_bins, 0.0);
  for (std::size_t b = 0; b < n_bins; ++b) {
    bins[b].lo = static_cast<double>(b) / static_cast<double>(n_bins);
    bins[b].hi = static_cast<double>(b + 1) / static_cast<double>(n_bins);
  }
  for (std::size_t k = 0; k < truths.size(); ++k) {
    const DemGrid& s = slopes[k];
    for (std::size_t r = 0; r < s.rows; ++r) {
      for (std::size_t c = 0; c < s.cols; ++c) {
        const double norm = max_slope > 0.0 ? s.at(r, c) / max_slope : 0.0;
        const auto b = std::min(static_cast<std::size_t>(norm * static_cast<double>(n_bins)), n_bins - 1);
        sums[b] += std::abs(preds[k].at(r + 1, c + 1) - truths[k].at(r + 1, c + 1));
        bins[b].count++;
      }
    }
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (bins[b].count) bins[b].mean_abs_err = sums[b] / static_cast<double>(bins[b].count);
  }
  return bins;
}

inline std::vector<SlopeBin> slope_binned_error(const DemGrid& truth, const DemGrid& pred,
                                                std::size_t n_bins) {
  return slope_binned_error(std::span<const DemGrid>(&truth, 1), std::span<const DemGrid>(&pred, 1),
                            n_bins);
}

}  // namespace dsrgan

#endif  // DSRGAN_SLOPE_HPP_

#ifndef DSRGAN_EVALUATION_HPP_
#define DSRGAN_EVALUATION_HPP_

// Meter-domain evaluation: error metrics, pooled error distribution, the
// method comparison report and its CSV / PGM outputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dsrgan/error.hpp"
#include "dsrgan/generator.hpp"
#include "dsrgan/raster.hpp"
#include "dsrgan/resample.hpp"
#include "dsrgan/slope.hpp"
#include "dsrgan/terrain.hpp"

namespace dsrgan {

/// normalize -> generator (inference mode) -> denormalize.
inline DemGrid super_resolve(Generator<float>& gen, const DemGrid& lr, const NormParams& norm) {
  validate(lr);
  const DemGrid n = normalize(lr, norm);
  Tensor<float> x(Shape{1, 1, lr.rows, lr.cols});
  for (std::size_t i = 0; i < n.values.size(); ++i) x[i] = static_cast<float>(n.values[i]);
  const Tensor<float> y = gen.forward(x, Mode::inference);
  const int s = gen.config().scale;
  DemGrid out = lr;
  out.rows = y.shape().h;
  out.cols = y.shape().w;
  out.cellsize = lr.cellsize / s;
  out.values.assign(y.vec().begin(), y.vec().end());
  return denormalize(out, norm);
}

struct ErrorMetrics {
  double mse = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
};

namespace detail {

inline void check_same_shape(const DemGrid& a, const DemGrid& b, const char* what) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw ShapeError(std::string(what) + ": " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                     " vs " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
  }
}

}  // namespace detail

/// Pooled over every cell of every grid pair.
inline ErrorMetrics error_metrics(std::span<const DemGrid> preds, std::span<const DemGrid> truths) {
  detail::require<PreconditionError>(!preds.empty() && preds.size() == truths.size(),
                                     "error_metrics: need matching non-empty grid lists");
  double sq = 0.0, ab = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    detail::check_same_shape(preds[k], truths[k], "error_metrics");
    require_no_nodata(preds[k], "error_metrics");
    require_no_nodata(truths[k], "error_metrics");
    for (std::size_t i = 0; i < preds[k].values.size(); ++i) {
      const double d = preds[k].values[i] - truths[k].values[i];
      sq += d * d;
      ab += std::abs(d);
    }
    n += preds[k].values.size();
  }
  ErrorMetrics m;
  m.mse = sq / static_cast<double>(n);
  m.rmse = std::sqrt(m.mse);
  m.mae = ab / static_cast<double>(n);
  return m;
}

inline ErrorMetrics error_metrics(const DemGrid& pred, const DemGrid& truth) {
  return error_metrics(std::span<const DemGrid>(&pred, 1), std::span<const DemGrid>(&truth, 1));
}

struct ErrorDistribution {
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;  // population
  double within_1sigma = 0.0;
  std::size_t count = 0;
};

/// Statistics of a list of absolute errors.
inline ErrorDistribution distribution_of(std::vector<double> abs_errors) {
  detail::require<PreconditionError>(!abs_errors.empty(), "error_distribution: no errors");
  ErrorDistribution d;
  d.count = abs_errors.size();
  double sum = 0.0;
  for (double e : abs_errors) sum += e;
  d.mean = sum / static_cast<double>(d.count);
  double sq = 0.0;
  for (double e : abs_errors) sq += (e - d.mean) * (e - d.mean);
  d.std = std::sqrt(sq / static_cast<double>(d.count));
  std::size_t inside = 0;
  for (double e : abs_errors) inside += (e >= d.mean - d.std && e <= d.mean + d.std);
  d.within_1sigma = static_cast<double>(inside) / static_cast<double>(d.count);

  const std::size_t mid = d.count / 2;
  std::nth_element(abs_errors.begin(), abs_errors.begin() + static_cast<std::ptrdiff_t>(mid),
                   abs_errors.end());
  d.median = abs_errors[mid];
  if (d.count % 2 == 0) {
    const double lower = *std::max_element(abs_errors.begin(),
                                           abs_errors.begin() + static_cast<std::ptrdiff_t>(mid));
    d.median = 0.5 * (d.median + lower);
  }
  return d;
}

/// Distribution of per-cell |pred - truth| pooled over all grids.
inline ErrorDistribution error_distribution(std::span<const DemGrid> preds,
                                            std::span<const DemGrid> truths) {
  detail::require<PreconditionError>(!preds.empty() && preds.size() == truths.size(),
                                     "error_distribution: need matching non-empty grid lists");
  std::vector<double> errs;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    detail::check_same_shape(preds[k], truths[k], "error_distribution");
    for (std::size_t i = 0; i < preds[k].values.size(); ++i) {
      errs.push_back(std::abs(preds[k].values[i] - truths[k].values[i]));
    }
  }
  return distribution_of(std::move(errs));
}

// ---------------------------------------------------------------------------
// Method comparison

struct MethodRow {
  std::string method;
  std::string split;
  ErrorMetrics metrics;
};

struct EvalReport {
  std::vector<MethodRow> methods;
  ErrorDistribution distribution;  // D-SRGAN on the test split
  std::vector<SlopeBin> slope_bins;
};

using Predictor = std::function<DemGrid(const TilePair&)>;

struct CompareOptions {
  std::size_t slope_bins = 10;
  /// Adds a "truth" row that predicts the HR tile itself (MSE 0).
  bool oracle_row = false;
};

namespace detail {

inline std::vector<DemGrid> predict_all(std::span<const TilePair> pairs, const Predictor& f) {
  std::vector<DemGrid> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    DemGrid g = f(p);
    check_same_shape(g, p.hr, "prediction");
    out.push_back(std::move(g));
  }
  return out;
}

inline std::vector<DemGrid> truths_of(std::span<const TilePair> pairs) {
  std::vector<DemGrid> out;
  for (const auto& p : pairs) out.push_back(p.hr);
  return out;
}

}  // namespace detail

/// Runs D-SRGAN, bicubic and bilinear on every LR tile of each split.
/// `splits` holds (name, pairs) with the test split last; the distribution
/// and slope sections describe D-SRGAN on that last split.
inline EvalReport compare_methods(
    const std::vector<std::pair<std::string, std::span<const TilePair>>>& splits,
    Generator<float>& gen, const NormParams& norm, const CompareOptions& opt = {}) {
  detail::require<PreconditionError>(!splits.empty(), "compare_methods: no splits");
  const int scale = gen.config().scale;
  for (const auto& [name, pairs] : splits) {
    detail::require<PreconditionError>(!pairs.empty(), "compare_methods: split '" + name + "' is empty");
    for (const auto& p : pairs) {
      p.validate();
      if (p.scale() != scale) {
        throw ShapeError("compare_methods: pair '" + p.id + "' has scale " + std::to_string(p.scale()) +
                         ", generator upsamples by " + std::to_string(scale));
      }
    }
  }

  std::vector<std::pair<std::string, Predictor>> methods = {
      {"dsrgan", [&](const TilePair& p) { return super_resolve(gen, p.lr, norm); }},
      {"bicubic", [&](const TilePair& p) { return bicubic_upsample(p.lr, scale); }},
      {"bilinear", [&](const TilePair& p) { return bilinear_upsample(p.lr, scale); }},
  };
  if (opt.oracle_row) methods.push_back({"truth", [](const TilePair& p) { return p.hr; }});

  EvalReport report;
  for (const auto& [method, predict] : methods) {
    for (std::size_t k = 0; k < splits.size(); ++k) {
      const auto& [split, pairs] = splits[k];
      const auto preds = detail::predict_all(pairs, predict);
      const auto truths = detail::truths_of(pairs);
      report.methods.push_back({method, split, error_metrics(preds, truths)});
      if (method == "dsrgan" && k + 1 == splits.size()) {
        report.distribution = error_distribution(preds, truths);
        report.slope_bins = slope_binned_error(truths, preds, opt.slope_bins);
      }
    }
  }
  return report;
}

inline void write_report_csv(const EvalReport& r, const std::filesystem::path& dir) {
  using detail::exact_number;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::trunc);
    if (!f) throw IoError("cannot write '" + (dir / name).string() + "'");
    return f;
  };
  {
    auto f = open("methods.csv");
    f << "method,split,mse,rmse,mae\n";
    for (const auto& m : r.methods) {
      f << m.method << ',' << m.split << ',' << exact_number(m.metrics.mse) << ','
        << exact_number(m.metrics.rmse) << ',' << exact_number(m.metrics.mae) << '\n';
    }
  }
  {
    auto f = open("errdist.csv");
    const auto& d = r.distribution;
    f << "mean,median,std,within_1sigma\n"
      << exact_number(d.mean) << ',' << exact_number(d.median) << ',' << exact_number(d.std) << ','
      << exact_number(d.within_1sigma) << '\n';
  }
  {
    auto f = open("slopebins.csv");
    f << "bin_lo,bin_hi,mean_abs_err,count\n";
    for (const auto& b : r.slope_bins) {
      f << exact_number(b.lo) << ',' << exact_number(b.hi) << ',' << exact_number(b.mean_abs_err)
        << ',' << b.count << '\n';
    }
  }
}

/// 16-bit binary PGM, linearly scaled from the grid's min..max to 0..65535.
/// Nodata cells are written as 0.
inline void write_pgm16(const DemGrid& g, const std::string& path) {
  validate(g);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : g.values) {
    if (g.is_nodata(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << "P5\n" << g.cols << ' ' << g.rows << "\n65535\n";
  const double span = hi > lo ? hi - lo : 1.0;
  for (double v : g.values) {
    std::uint16_t q = 0;
    if (!g.is_nodata(v)) q = static_cast<std::uint16_t>(std::lround((v - lo) / span * 65535.0));
    const char be[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xFF)};
    f.write(be, 2);
  }
  if (!f) throw IoError("failed writing '" + path + "'");
}

}  // namespace dsrgan

#endif  // DSRGAN_EVALUATION_HPP_

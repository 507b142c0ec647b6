#ifndef DSRGAN_RASTER_HPP_
#define DSRGAN_RASTER_HPP_

// Elevation rasters: the DemGrid type, Esri ASCII grid I/O, tiling,
// nodata filtering, min/max normalization and descriptive statistics.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "dsrgan/error.hpp"

namespace dsrgan {

enum class LengthUnit { meter, foot };

/// A north-up elevation raster. Values are row-major, top row first, and
/// the corner is the lower-left corner of the lower-left cell (Esri
/// convention).
struct DemGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double cellsize = 1.0;
  LengthUnit unit = LengthUnit::meter;
  double xllcorner = 0.0;
  double yllcorner = 0.0;
  double nodata = -9999.0;
  std::vector<double> values;

  DemGrid() = default;
  DemGrid(std::size_t r, std::size_t c, double fill = 0.0, double cell = 1.0)
      : rows(r), cols(c), cellsize(cell), values(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  bool is_nodata(double v) const { return v == nodata; }

  std::size_t nodata_count() const {
    return static_cast<std::size_t>(
        std::count(values.begin(), values.end(), nodata));
  }

  /// Same georeferencing, different payload.
  DemGrid with_values(std::vector<double> v) const {
    DemGrid g = *this;
    g.values = std::move(v);
    return g;
  }
};

/// Throws PreconditionError when a grid breaks the DemGrid invariants.
inline void validate(const DemGrid& g) {
  detail::require<PreconditionError>(g.rows >= 1 && g.cols >= 1,
                                     "grid must have at least one row and column");
  detail::require<PreconditionError>(g.values.size() == g.rows * g.cols,
                                     "grid value count does not match rows x cols");
  detail::require<PreconditionError>(std::isfinite(g.cellsize) && g.cellsize > 0.0,
                                     "grid cellsize must be positive");
  for (double v : g.values) {
    detail::require<PreconditionError>(std::isfinite(v) || v == g.nodata,
                                       "grid contains a non-finite elevation");
  }
}

inline void require_no_nodata(const DemGrid& g, std::string_view what) {
  if (g.nodata_count() != 0) {
    throw PreconditionError(std::string(what) + ": grid contains nodata cells");
  }
}

// ---------------------------------------------------------------------------
// Esri ASCII grid

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

inline bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> toks;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) toks.push_back(line.substr(i, j - i));
    i = j;
  }
  return toks;
}

// Shortest representation that parses back to the same double.
inline std::string exact_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void append_fixed6(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
  out.append(buf, res.ptr);
}

}  // namespace detail

/// Parses an Esri ASCII grid from a string. `source` names the input in
/// error messages.
inline DemGrid parse_asc(std::string_view text, std::string_view source = "<memory>") {
  static constexpr const char* kKeys[6] = {"ncols",     "nrows",    "xllcorner",
                                           "yllcorner", "cellsize", "nodata_value"};
  auto fail = [&](std::size_t line, const std::string& msg) -> FormatError {
    return FormatError(std::string(source) + ":" + std::to_string(line) + ": " + msg);
  };

  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos <= text.size();) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view l = text.substr(pos, nl - pos);
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    lines.push_back(l);
    pos = nl + 1;
  }

  double header[6] = {};
  std::size_t ln = 0;
  for (int k = 0; k < 6; ++k) {
    if (ln >= lines.size()) throw fail(ln + 1, "truncated header");
    auto toks = detail::split_ws(lines[ln]);
    if (toks.size() != 2) throw fail(ln + 1, "expected '<keyword> <value>'");
    if (detail::lower(toks[0]) != kKeys[k]) {
      throw fail(ln + 1, "expected header keyword '" + std::string(kKeys[k]) + "', got '" +
                             std::string(toks[0]) + "'");
    }
    if (!detail::parse_double(toks[1], header[k]) || !std::isfinite(header[k])) {
      throw fail(ln + 1, "non-numeric header value '" + std::string(toks[1]) + "'");
    }
    ++ln;
  }

  auto as_count = [&](double v, std::size_t line) {
    if (v < 1 || v != std::floor(v)) throw fail(line, "dimension must be a positive integer");
    return static_cast<std::size_t>(v);
  };
  DemGrid g;
  g.cols = as_count(header[0], 1);
  g.rows = as_count(header[1], 2);
  g.xllcorner = header[2];
  g.yllcorner = header[3];
  g.cellsize = header[4];
  g.nodata = header[5];
  if (!(g.cellsize > 0)) throw fail(5, "cellsize must be positive");

  const std::size_t expected = g.rows * g.cols;
  g.values.reserve(expected);
  std::size_t last_line = ln;
  for (; ln < lines.size(); ++ln) {
    for (auto tok : detail::split_ws(lines[ln])) {
      double v = 0;
      if (!detail::parse_double(tok, v)) {
        throw fail(ln + 1, "non-numeric value '" + std::string(tok) + "'");
      }
      if (!std::isfinite(v) && v != g.nodata) throw fail(ln + 1, "non-finite elevation");
      if (g.values.size() == expected) {
        throw fail(ln + 1, "more values than the declared " + std::to_string(g.rows) + "x" +
                               std::to_string(g.cols));
      }
      g.values.push_back(v);
      last_line = ln + 1;
    }
  }
  if (g.values.size() != expected) {
    throw fail(last_line, "found " + std::to_string(g.values.size()) + " values, expected " +
                              std::to_string(expected));
  }
  return g;
}

inline DemGrid read_asc(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_asc(ss.str(), path);
}

/// Serializes with exact header numbers and six fractional digits per
/// elevation; nodata cells carry the sentinel verbatim.
inline std::string format_asc(const DemGrid& g) {
  validate(g);
  std::string out;
  out.reserve(64 * 6 + g.values.size() * 12);
  out += "ncols " + std::to_string(g.cols) + "\n";
  out += "nrows " + std::to_string(g.rows) + "\n";
  out += "xllcorner " + detail::exact_number(g.xllcorner) + "\n";
  out += "yllcorner " + detail::exact_number(g.yllcorner) + "\n";
  out += "cellsize " + detail::exact_number(g.cellsize) + "\n";
  out += "NODATA_value " + detail::exact_number(g.nodata) + "\n";
  const std::string nodata_text = detail::exact_number(g.nodata);
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < g.cols; ++c) {
      if (c) out += ' ';
      double v = g.at(r, c);
      if (g.is_nodata(v)) {
        out += nodata_text;
      } else {
        detail::append_fixed6(out, v);
      }
    }
    out += '\n';
  }
  return out;
}

inline void write_asc(const DemGrid& g, const std::string& path) {
  std::string text = format_asc(g);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Tiling and filtering

/// Sub-grid [row0, row0+nrows) x [col0, col0+ncols) with its corner moved
/// to match.
inline DemGrid crop(const DemGrid& g, std::size_t row0, std::size_t col0, std::size_t nrows,
                    std::size_t ncols) {
  detail::require<ShapeError>(nrows >= 1 && ncols >= 1 && row0 + nrows <= g.rows &&
                                  col0 + ncols <= g.cols,
                              "crop window exceeds the grid");
  DemGrid t = g;
  t.rows = nrows;
  t.cols = ncols;
  t.xllcorner = g.xllcorner + static_cast<double>(col0) * g.cellsize;
  t.yllcorner = g.yllcorner + static_cast<double>(g.rows - row0 - nrows) * g.cellsize;
  t.values.assign(nrows * ncols, 0.0);
  for (std::size_t r = 0; r < nrows; ++r) {
    std::copy_n(g.values.begin() + static_cast<std::ptrdiff_t>((row0 + r) * g.cols + col0),
                ncols, t.values.begin() + static_cast<std::ptrdiff_t>(r * ncols));
  }
  return t;
}

/// Splits a grid into square tiles, row-major tile order starting at the
/// top-left tile.
inline std::vector<DemGrid> tile_grid(const DemGrid& g, std::size_t tile_size) {
  detail::require<PreconditionError>(tile_size >= 1, "tile size must be positive");
  if (g.rows % tile_size != 0 || g.cols % tile_size != 0) {
    throw ShapeError("grid " + std::to_string(g.rows) + "x" + std::to_string(g.cols) +
                     " is not divisible by tile size " + std::to_string(tile_size) +
                     " (remainder " + std::to_string(g.rows % tile_size) + "x" +
                     std::to_string(g.cols % tile_size) + ")");
  }
  std::vector<DemGrid> tiles;
  tiles.reserve((g.rows / tile_size) * (g.cols / tile_size));
  for (std::size_t tr = 0; tr < g.rows; tr += tile_size) {
    for (std::size_t tc = 0; tc < g.cols; tc += tile_size) {
      tiles.push_back(crop(g, tr, tc, tile_size, tile_size));
    }
  }
  return tiles;
}

/// Drops every tile with at least one nodata cell. No infilling.
inline std::vector<DemGrid> filter_nodata(std::span<const DemGrid> tiles) {
  std::vector<DemGrid> kept;
  for (const auto& t : tiles) {
    if (t.nodata_count() == 0) kept.push_back(t);
  }
  return kept;
}

// ---------------------------------------------------------------------------
// Normalization to the generator's tanh range

struct NormParams {
  double min_elev = 0.0;
  double max_elev = 1.0;

  void validate() const {
    detail::require<PreconditionError>(
        std::isfinite(min_elev) && std::isfinite(max_elev) && max_elev > min_elev,
        "normalization requires finite min < max");
  }

  double forward(double v) const {
    double n = 2.0 * (v - min_elev) / (max_elev - min_elev) - 1.0;
    return std::clamp(n, -1.0, 1.0);
  }
  double inverse(double n) const {
    return (n + 1.0) * 0.5 * (max_elev - min_elev) + min_elev;
  }

  friend bool operator==(const NormParams&, const NormParams&) = default;
};

/// Maps meters to [-1, 1]; out-of-range elevations clamp to the ends.
inline DemGrid normalize(const DemGrid& g, const NormParams& p) {
  p.validate();
  require_no_nodata(g, "normalize");
  std::vector<double> out(g.values.size());
  std::transform(g.values.begin(), g.values.end(), out.begin(),
                 [&](double v) { return p.forward(v); });
  return g.with_values(std::move(out));
}

inline DemGrid denormalize(const DemGrid& g, const NormParams& p) {
  p.validate();
  std::vector<double> out(g.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double n = g.values[i];
    if (!(n >= -1.0 && n <= 1.0)) {
      throw PreconditionError("denormalize: value outside [-1, 1] at index " + std::to_string(i));
    }
    out[i] = p.inverse(n);
  }
  return g.with_values(std::move(out));
}

// ---------------------------------------------------------------------------
// Statistics

struct HistogramBin {
  double lower = 0.0;
  std::size_t count = 0;
};

struct ElevationStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t cells = 0;
  std::vector<HistogramBin> histogram;
};

/// Pooled mean/min/max over every non-nodata cell, plus a histogram with
/// bins of `bin_width` starting at the minimum.
inline ElevationStats grid_stats(std::span<const DemGrid> grids, double bin_width) {
  detail::require<PreconditionError>(bin_width > 0 && std::isfinite(bin_width),
                                     "histogram bin width must be positive");
  ElevationStats s;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const auto& g : grids) {
    for (double v : g.values) {
      if (g.is_nodata(v)) continue;
      sum += v;
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
      ++s.cells;
    }
  }
  detail::require<PreconditionError>(s.cells > 0, "grid_stats: no valid cells");
  s.mean = sum / static_cast<double>(s.cells);

  const auto nbins = static_cast<std::size_t>(std::floor((s.max - s.min) / bin_width)) + 1;
  s.histogram.resize(nbins);
  for (std::size_t b = 0; b < nbins; ++b) {
    s.histogram[b].lower = s.min + static_cast<double>(b) * bin_width;
  }
  for (const auto& g : grids) {
    for (double v : g.values) {
      if (g.is_nodata(v)) continue;
      auto b = static_cast<std::size_t>(std::floor((v - s.min) / bin_width));
      s.histogram[std::min(b, nbins - 1)].count++;
    }
  }
  return s;
}

}  // namespace dsrgan

#endif  // DSRGAN_RASTER_HPP_

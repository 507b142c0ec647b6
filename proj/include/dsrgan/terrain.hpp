#ifndef DSRGAN_TERRAIN_HPP_
#define DSRGAN_TERRAIN_HPP_

// Synthetic terrain and LR/HR training pairs.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dsrgan/error.hpp"
#include "dsrgan/raster.hpp"
#include "dsrgan/resample.hpp"

namespace dsrgan {

/// Diamond-square midpoint displacement on a (2^k + 1)^2 grid. The
/// perturbation at subdivision level L is uniform in [-r*2^-L, r*2^-L).
/// Corners are set to `corners` (top-left, top-right, bottom-left,
/// bottom-right) and never perturbed.
inline DemGrid diamond_square(int size_exp, double roughness, std::array<double, 4> corners,
                              std::uint64_t seed, double cellsize = 1.0) {
  detail::require<PreconditionError>(size_exp >= 1 && size_exp <= 14,
                                     "diamond_square: size exponent must be in [1, 14]");
  detail::require<PreconditionError>(roughness >= 0.0, "diamond_square: roughness must be >= 0");
  const std::size_t n = (std::size_t{1} << size_exp) + 1;
  DemGrid g(n, n, 0.0, cellsize);
  g.at(0, 0) = corners[0];
  g.at(0, n - 1) = corners[1];
  g.at(n - 1, 0) = corners[2];
  g.at(n - 1, n - 1) = corners[3];

  std::mt19937_64 rng(seed);
  auto jitter = [&](double amp) {
    // 53 random bits -> [0, 1), then to [-1, 1).
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return amp * (2.0 * u - 1.0);
  };
  // Exact for equal inputs: first + mean of differences.
  auto average = [](const double* v, int count) {
    double d = 0.0;
    for (int i = 1; i < count; ++i) d += v[i] - v[0];
    return v[0] + d / count;
  };

  double amp = roughness;
  for (std::size_t step = n - 1; step > 1; step /= 2) {
    const std::size_t half = step / 2;
    for (std::size_t r = half; r < n; r += step) {
      for (std::size_t c = half; c < n; c += step) {
        const double v[4] = {g.at(r - half, c - half), g.at(r - half, c + half),
                             g.at(r + half, c - half), g.at(r + half, c + half)};
        g.at(r, c) = average(v, 4) + jitter(amp);
      }
    }
    for (std::size_t r = 0; r < n; r += half) {
      for (std::size_t c = ((r / half) % 2 == 0) ? half : 0; c < n; c += step) {
        double v[4];
        int k = 0;
        if (r >= half) v[k++] = g.at(r - half, c);
        if (r + half < n) v[k++] = g.at(r + half, c);
        if (c >= half) v[k++] = g.at(r, c - half);
        if (c + half < n) v[k++] = g.at(r, c + half);
        g.at(r, c) = average(v, k) + jitter(amp);
      }
    }
    amp *= 0.5;
  }
  return g;
}

/// Co-registered low/high resolution tiles.
struct TilePair {
  std::string id;
  DemGrid lr;
  DemGrid hr;

  int scale() const { return lr.rows ? static_cast<int>(hr.rows / lr.rows) : 0; }

  void validate() const {
    detail::require<ShapeError>(lr.rows >= 1 && lr.cols >= 1 && hr.rows % lr.rows == 0 &&
                                    hr.cols % lr.cols == 0 &&
                                    hr.rows / lr.rows == hr.cols / lr.cols &&
                                    hr.rows / lr.rows >= 2,
                                "pair '" + id + "': HR must be an integer multiple of LR");
    detail::require<ShapeError>(lr.unit == hr.unit, "pair '" + id + "': unit mismatch");
  }
};

/// Tiles `hr` into tile_hr squares and pairs each with its block-mean
/// reduction by `scale`.
inline std::vector<TilePair> make_pairs(const DemGrid& hr, int scale, std::size_t tile_hr) {
  detail::require<PreconditionError>(scale >= 2, "make_pairs: scale must be >= 2");
  if (tile_hr == 0 || tile_hr % static_cast<std::size_t>(scale) != 0) {
    throw ShapeError("make_pairs: HR tile size " + std::to_string(tile_hr) +
                     " not divisible by scale " + std::to_string(scale));
  }
  require_no_nodata(hr, "make_pairs");
  std::vector<TilePair> pairs;
  auto tiles = tile_grid(hr, tile_hr);
  pairs.reserve(tiles.size());
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "tile_%04zu", i);
    DemGrid lr = downsample_mean(tiles[i], scale);
    pairs.push_back({id, std::move(lr), std::move(tiles[i])});
  }
  return pairs;
}

/// Writes <dir>/lr/<id>.asc and <dir>/hr/<id>.asc.
inline void save_pairs(const std::vector<TilePair>& pairs, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "lr", ec);
  std::filesystem::create_directories(dir / "hr", ec);
  if (ec) throw IoError("cannot create pair directory '" + dir.string() + "'");
  for (const auto& p : pairs) {
    write_asc(p.lr, (dir / "lr" / (p.id + ".asc")).string());
    write_asc(p.hr, (dir / "hr" / (p.id + ".asc")).string());
  }
}

/// Reads a directory written by save_pairs, sorted by id.
inline std::vector<TilePair> load_pairs(const std::filesystem::path& dir) {
  const auto lr_dir = dir / "lr";
  const auto hr_dir = dir / "hr";
  if (!std::filesystem::is_directory(lr_dir) || !std::filesystem::is_directory(hr_dir)) {
    throw IoError("'" + dir.string() + "' must contain lr/ and hr/ subdirectories");
  }
  std::vector<std::string> ids;
  for (const auto& e : std::filesystem::directory_iterator(lr_dir)) {
    if (e.path().extension() == ".asc") ids.push_back(e.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  std::vector<TilePair> pairs;
  for (const auto& id : ids) {
    const auto hr_path = hr_dir / (id + ".asc");
    if (!std::filesystem::exists(hr_path)) throw IoError("missing HR tile for '" + id + "'");
    TilePair p{id, read_asc((lr_dir / (id + ".asc")).string()), read_asc(hr_path.string())};
    p.validate();
    pairs.push_back(std::move(p));
  }
  if (!pairs.empty()) {
    for (const auto& p : pairs) {
      if (p.scale() != pairs.front().scale() || p.lr.rows != pairs.front().lr.rows ||
          p.lr.cols != pairs.front().lr.cols) {
        throw ShapeError("pair '" + p.id + "' geometry differs from '" + pairs.front().id + "'");
      }
    }
  }
  return pairs;
}

}  // namespace dsrgan

#endif  // DSRGAN_TERRAIN_HPP_

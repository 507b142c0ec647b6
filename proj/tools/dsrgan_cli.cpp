// Command-line front end for the DEM super-resolution pipeline.
//
// Exit status: 0 success, 1 usage error, 2 data / format / I/O error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dsrgan/dsrgan.hpp"

namespace fs = std::filesystem;
using namespace dsrgan;

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

struct SynthArgs {
  int size_exp = 0;
  double roughness = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<double> corners{0.0, 0.0, 0.0, 0.0};
  double cellsize = 1.0;
  bool trim = false;
};

int run_synth(const SynthArgs& a) {
  DemGrid g = diamond_square(a.size_exp, a.roughness, {a.corners[0], a.corners[1], a.corners[2], a.corners[3]},
                             a.seed, a.cellsize);
  // 2^k + 1 is odd; trimming the last row and column makes it tileable.
  if (a.trim) g = crop(g, 0, 0, g.rows - 1, g.cols - 1);
  write_asc(g, a.out);
  return 0;
}

struct TileArgs {
  std::string in, out_dir;
  std::size_t tile_size = 0;
  bool drop_nodata = false;
};

int run_tile(const TileArgs& a) {
  std::vector<DemGrid> tiles = tile_grid(read_asc(a.in), a.tile_size);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    if (!a.drop_nodata || tiles[i].nodata_count() == 0) keep.push_back(i);
  }
  fs::create_directories(a.out_dir);
  for (std::size_t i : keep) {
    char name[32];
    std::snprintf(name, sizeof name, "tile_%04zu.asc", i);
    write_asc(tiles[i], (fs::path(a.out_dir) / name).string());
  }
  std::cout << "wrote " << keep.size() << " of " << tiles.size() << " tiles\n";
  return 0;
}

struct PairsArgs {
  std::string in, out_dir;
  int scale = 4;
  std::size_t tile_hr = 0;
};

int run_pairs(const PairsArgs& a) {
  const auto pairs = make_pairs(read_asc(a.in), a.scale, a.tile_hr);
  save_pairs(pairs, a.out_dir);
  std::cout << "wrote " << pairs.size() << " pairs\n";
  return 0;
}

std::vector<fs::path> asc_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".asc") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no .asc files under '" + dir.string() + "'");
  return files;
}

int run_stats(const std::string& dir, double bin_width) {
  std::vector<DemGrid> grids;
  for (const auto& f : asc_files(dir)) grids.push_back(read_asc(f.string()));
  const ElevationStats s = grid_stats(grids, bin_width);
  using detail::exact_number;
  std::cout << "grids,cells,mean,min,max\n"
            << grids.size() << ',' << s.cells << ',' << exact_number(s.mean) << ',' << exact_number(s.min)
            << ',' << exact_number(s.max) << "\n\nbin_lower,count\n";
  for (const auto& b : s.histogram) std::cout << exact_number(b.lower) << ',' << b.count << '\n';
  return 0;
}

struct TrainArgs {
  std::string pairs, config, out_dir, resume;
  std::int64_t epochs = -1;
};

int run_train(const TrainArgs& a) {
  TrainConfig cfg = read_train_config(a.config);
  if (a.epochs >= 0) cfg.epochs = a.epochs;
  const auto pairs = load_pairs(a.pairs);
  if (pairs.empty()) throw IoError("no pairs under '" + a.pairs + "'");
  std::optional<Checkpoint> resume;
  if (!a.resume.empty()) resume = load_checkpoint(a.resume);
  const auto res = train(pairs, cfg, a.out_dir, resume ? &*resume : nullptr);
  if (!res.log.empty()) {
    const auto& last = res.log.back();
    std::cout << "epoch " << last.epoch << " content " << detail::exact_number(last.g_content) << " d_loss "
              << detail::exact_number(last.d_loss) << '\n';
  }
  return 0;
}

Generator<float> generator_from(const Checkpoint& cp) { return Generator<float>(cp.config.generator, cp.generator); }

int run_infer(const std::string& ckpt, const std::string& in, const std::string& out) {
  const Checkpoint cp = load_checkpoint(ckpt);
  Generator<float> gen = generator_from(cp);
  write_asc(super_resolve(gen, read_asc(in), cp.norm), out);
  return 0;
}

int run_upsample(const std::string& method, int scale, const std::string& in, const std::string& out) {
  const DemGrid g = read_asc(in);
  write_asc(method == "bicubic" ? bicubic_upsample(g, scale) : bilinear_upsample(g, scale), out);
  return 0;
}

struct EvalArgs {
  std::string pairs, checkpoint, out_dir, train_pairs;
  bool oracle_row = false;
  std::size_t slope_bins = 10;
};

int run_eval(const EvalArgs& a) {
  const Checkpoint cp = load_checkpoint(a.checkpoint);
  Generator<float> gen = generator_from(cp);
  const auto test = load_pairs(a.pairs);
  std::vector<TilePair> train_set;
  std::vector<std::pair<std::string, std::span<const TilePair>>> splits;
  if (!a.train_pairs.empty()) {
    train_set = load_pairs(a.train_pairs);
    splits.emplace_back("train", train_set);
  }
  splits.emplace_back("test", test);
  const EvalReport r = compare_methods(splits, gen, cp.norm, {a.slope_bins, a.oracle_row});
  write_report_csv(r, a.out_dir);
  for (const auto& m : r.methods) {
    std::cout << m.method << ' ' << m.split << " rmse " << detail::exact_number(m.metrics.rmse) << " mae "
              << detail::exact_number(m.metrics.mae) << '\n';
  }
  return 0;
}

int run_slope(const std::string& in, const std::string& out, const std::string& pgm) {
  const DemGrid s = horn_slope(read_asc(in));
  write_asc(s, out);
  if (!pgm.empty()) write_pgm16(s, pgm);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DEM super-resolution toolkit"};
  app.require_subcommand(1);
  std::function<int()> action;

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a diamond-square DEM");
  synth->add_option("--size-exp", sa.size_exp, "Grid side is 2^K + 1")->required()->check(CLI::Range(1, 14));
  synth->add_option("--roughness", sa.roughness, "Perturbation amplitude at the first level")->required();
  synth->add_option("--seed", sa.seed, "Random seed")->required();
  synth->add_option("--out", sa.out, "Output .asc")->required();
  synth->add_option("--corners", sa.corners, "Corner elevations TL TR BL BR")->expected(4);
  synth->add_option("--cellsize", sa.cellsize, "Cell size in meters")->check(CLI::PositiveNumber);
  synth->add_flag("--trim", sa.trim, "Drop the last row and column (2^K x 2^K output)");
  synth->callback([&] { action = [&] { return run_synth(sa); }; });

  TileArgs ta;
  auto* tile = app.add_subcommand("tile", "Split a DEM into square tiles");
  tile->add_option("--in", ta.in, "Input .asc")->required();
  tile->add_option("--tile-size", ta.tile_size, "Tile side in cells")->required()->check(CLI::PositiveNumber);
  tile->add_option("--out-dir", ta.out_dir, "Output directory")->required();
  tile->add_flag("--drop-nodata", ta.drop_nodata, "Skip tiles containing nodata cells");
  tile->callback([&] { action = [&] { return run_tile(ta); }; });

  PairsArgs pa;
  auto* pairs = app.add_subcommand("pairs", "Build LR/HR training pairs from an HR DEM");
  pairs->add_option("--in", pa.in, "HR .asc")->required();
  pairs->add_option("--scale", pa.scale, "Resolution ratio")->required()->check(CLI::Range(2, 1024));
  pairs->add_option("--tile-hr", pa.tile_hr, "HR tile side in cells")->required()->check(CLI::PositiveNumber);
  pairs->add_option("--out-dir", pa.out_dir, "Output directory (lr/ and hr/)")->required();
  pairs->callback([&] { action = [&] { return run_pairs(pa); }; });

  std::string stats_dir;
  double bin_width = 10.0;
  auto* stats = app.add_subcommand("stats", "Elevation summary and histogram of every .asc under a directory");
  stats->add_option("--in", stats_dir, "Directory")->required();
  stats->add_option("--bin-width", bin_width, "Histogram bin width")->check(CLI::PositiveNumber);
  stats->callback([&] { action = [&] { return run_stats(stats_dir, bin_width); }; });

  TrainArgs tr;
  auto* trn = app.add_subcommand("train", "Train the GAN on a pair directory");
  trn->add_option("--pairs", tr.pairs, "Pair directory")->required();
  trn->add_option("--config", tr.config, "Training config JSON")->required();
  trn->add_option("--out-dir", tr.out_dir, "Checkpoint and metrics directory")->required();
  trn->add_option("--resume", tr.resume, "Continue from this checkpoint");
  trn->add_option("--epochs", tr.epochs, "Override the config's epoch count")->check(CLI::NonNegativeNumber);
  trn->callback([&] { action = [&] { return run_train(tr); }; });

  std::string ick, iin, iout;
  auto* infer = app.add_subcommand("infer", "Super-resolve one LR DEM");
  infer->add_option("--checkpoint", ick, "Checkpoint")->required();
  infer->add_option("--in", iin, "LR .asc")->required();
  infer->add_option("--out", iout, "SR .asc")->required();
  infer->callback([&] { action = [&] { return run_infer(ick, iin, iout); }; });

  std::string method, uin, uout;
  int uscale = 4;
  auto* up = app.add_subcommand("upsample", "Interpolation baseline");
  up->add_option("--method", method, "bilinear or bicubic")->required()->check(CLI::IsMember({"bilinear", "bicubic"}));
  up->add_option("--scale", uscale, "Integer factor")->required()->check(CLI::Range(1, 1024));
  up->add_option("--in", uin, "Input .asc")->required();
  up->add_option("--out", uout, "Output .asc")->required();
  up->callback([&] { action = [&] { return run_upsample(method, uscale, uin, uout); }; });

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Compare the generator with interpolation baselines");
  ev->add_option("--pairs", ea.pairs, "Test pair directory")->required();
  ev->add_option("--checkpoint", ea.checkpoint, "Checkpoint")->required();
  ev->add_option("--out-dir", ea.out_dir, "Report directory")->required();
  ev->add_option("--train-pairs", ea.train_pairs, "Also report on this training split");
  ev->add_flag("--oracle-row", ea.oracle_row, "Add a row predicting the HR tile itself");
  ev->add_option("--slope-bins", ea.slope_bins, "Number of slope bins")->check(CLI::PositiveNumber);
  ev->callback([&] { action = [&] { return run_eval(ea); }; });

  std::string sin, sout, spgm;
  auto* sl = app.add_subcommand("slope", "Horn slope magnitude (rise over run)");
  sl->add_option("--in", sin, "Input .asc")->required();
  sl->add_option("--out", sout, "Output .asc (interior cells)")->required();
  sl->add_option("--pgm", spgm, "Also write a 16-bit PGM preview");
  sl->callback([&] { action = [&] { return run_slope(sin, sout, spgm); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    return action();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
}

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dsrgan/dsrgan.hpp"
#include "../grad_fixtures.hpp"
#include "../oracles.hpp"
#include "../synthetic.hpp"

using namespace dsrgan;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail.clear();
    pass = false;
    detail += (detail.empty() ? "" : "; ") + why;
  }
  void note(const std::string& what) {
    if (pass) detail += (detail.empty() ? "" : ", ") + what;
  }
};

struct Criterion {
  int id;
  std::string title;
  double budget_s;  // 0 = no runtime bound
  std::function<Outcome()> run;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("dsrgan_accept_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

Outcome gradient_suite() {
  Outcome o;
  double worst = 0.0;
  for (const auto& c : fixtures::all_cases()) {
    const GradCheckResult r = c.run();
    worst = std::max(worst, r.max_rel_error);
    if (!(r.max_rel_error <= 1e-4)) o.fail(c.name + " rel err " + fmt(r.max_rel_error));
  }
  o.note(std::to_string(fixtures::all_cases().size()) + " cases, worst rel err " + fmt(worst));
  return o;
}

Outcome interpolation_oracles() {
  Outcome o;
  std::mt19937_64 rng(50);
  std::uniform_int_distribution<int> side(1, 16);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const DemGrid g = oracle::random_grid(rng, side(rng), side(rng));
    for (int s : {2, 4}) {
      const DemGrid a = bilinear_upsample(g, s), ra = oracle::bilinear(g, s);
      const DemGrid b = bicubic_upsample(g, s), rb = oracle::bicubic(g, s);
      for (std::size_t i = 0; i < a.values.size(); ++i) {
        worst = std::max(worst, std::abs(a.values[i] - ra.values[i]));
        worst = std::max(worst, std::abs(b.values[i] - rb.values[i]));
      }
    }
  }
  if (!(worst <= 1e-12)) o.fail("oracle mismatch " + fmt(worst));

  // Affine surfaces: exact wherever the kernel support stays inside the grid.
  std::uniform_real_distribution<double> coef(-5.0, 5.0);
  double worst_affine = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double ar = coef(rng), ac = coef(rng), c0 = 100.0 * coef(rng);
    const std::size_t rows = 6 + static_cast<std::size_t>(side(rng) % 11);
    const std::size_t cols = 6 + static_cast<std::size_t>(side(rng) % 11);
    DemGrid g(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) g.at(r, c) = c0 + ar * r + ac * c;
    for (int s : {2, 4}) {
      const DemGrid bl = bilinear_upsample(g, s), bc = bicubic_upsample(g, s);
      for (std::size_t i = 0; i < bl.rows; ++i) {
        for (std::size_t j = 0; j < bl.cols; ++j) {
          const double y = (i + 0.5) / s - 0.5, x = (j + 0.5) / s - 0.5;
          const double truth = c0 + ar * y + ac * x;
          if (y >= 0.0 && x >= 0.0 && y <= rows - 1.0 && x <= cols - 1.0) {
            worst_affine = std::max(worst_affine, std::abs(bl.at(i, j) - truth));
          }
          if (y >= 1.0 && x >= 1.0 && y <= rows - 2.0 && x <= cols - 2.0) {
            worst_affine = std::max(worst_affine, std::abs(bc.at(i, j) - truth));
          }
        }
      }
    }
  }
  if (!(worst_affine <= 1e-9)) o.fail("affine interior error " + fmt(worst_affine));
  o.note("oracle max diff " + fmt(worst) + ", affine max diff " + fmt(worst_affine));
  return o;
}

Outcome shape_laws() {
  Outcome o;
  std::mt19937_64 rng(3);
  const auto lr = oracle::random_tensor<float>(rng, Shape{1, 1, 25, 25});
  for (int s : {4, 16}) {
    GeneratorConfig c;
    c.scale = s;
    Generator<float> g(c, 11);
    const auto y = g.forward(lr, Mode::inference);
    const Shape want{1, 1, 25u * s, 25u * s};
    if (y.shape() != want) o.fail("scale " + std::to_string(s) + " gave " + y.shape().str());
  }
  Discriminator<float> d(DiscriminatorConfig{}, 12);
  for (std::size_t side : {100u, 400u}) {
    const auto p = d.forward(oracle::random_tensor<float>(rng, Shape{2, 1, side, side}));
    if (p.shape() != (Shape{2, 1, 1, 1})) o.fail("discriminator output " + p.shape().str());
    for (float v : p.vec()) {
      if (!(v > 0.0f && v < 1.0f)) o.fail("probability " + fmt(v) + " outside (0,1)");
    }
  }
  o.note("G 25->100 and 25->400, D on 2x100^2 and 2x400^2 at default widths");
  return o;
}

Outcome residual_identity() {
  Outcome o;
  Generator<float> g(GeneratorConfig{}, 5);
  for (auto& p : g.params()) {
    if (p.name.rfind("res", 0) == 0 && p.name.find(".conv") != std::string::npos) p.value.fill(0.0f);
  }
  std::mt19937_64 rng(4);
  const auto x = oracle::random_tensor<float>(rng, Shape{2, 128, 8, 8});
  double worst = 0.0;
  for (std::size_t b = 0; b < 8; ++b) {
    for (Mode m : {Mode::inference, Mode::train}) {
      const auto y = g.forward_residual_block(b, x, m);
      for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(double(y[i]) - x[i]));
    }
  }
  if (!(worst <= 1e-6)) o.fail("max deviation " + fmt(worst));
  o.note("8 default blocks, both modes, max deviation " + fmt(worst));
  return o;
}

Outcome overfit() {
  Outcome o;
  const auto pairs = synth::pairs(1, 32, 2, 17);
  TrainConfig cfg;
  cfg.generator.n_res_blocks = 2;
  cfg.generator.base_features = 16;
  cfg.generator.upsample_features = 64;
  cfg.generator.scale = 2;
  cfg.discriminator = synth::small_discriminator();
  cfg.batch_size = 1;
  cfg.seed = 5;
  GanTrainer t(cfg, norm_from_pairs(pairs));
  const auto lr = stack_normalized(std::vector<const DemGrid*>{&pairs[0].lr}, t.norm());
  const auto hr = stack_normalized(std::vector<const DemGrid*>{&pairs[0].hr}, t.norm());
  const PhaseParams phase{2e-4, 1e-4, 0.0, true};

  double first = 0.0, loss = 0.0;
  int steps = 0;
  while (steps < 500) {
    loss = t.train_step(lr, hr, phase).g_content;
    if (steps == 0) first = loss;
    ++steps;
    if (loss < 0.01) break;
  }
  // Loss of the updated network, measured the way training measures it.
  const double after = content_loss(t.generator().forward(lr, Mode::train), hr);
  if (!(after < 0.01)) o.fail("content loss " + fmt(after) + " after " + std::to_string(steps) + " steps");
  o.note("content loss " + fmt(first) + " -> " + fmt(after) + " in " + std::to_string(steps) + " steps");
  return o;
}

Outcome gan_smoke() {
  Outcome o;
  const auto pairs = synth::pairs(8, 8, 2, 21);
  const TrainConfig cfg = synth::smoke_config(26, 13);

  auto run = [&](std::vector<std::string>* rows, Outcome* checks) {
    GanTrainer t(cfg, norm_from_pairs(pairs));
    bool changed_when_active = false;
    while (t.epoch() < cfg.epochs) {
      const auto before = t.discriminator().params();
      const EpochMetrics m = t.run_epoch(pairs);
      rows->push_back(format_metrics_row(m));
      const bool same = t.discriminator().params() == before;
      if (m.phase.d_frozen && !same) checks->fail("D changed in frozen epoch " + std::to_string(m.epoch));
      if (!m.phase.d_frozen && !same) changed_when_active = true;
    }
    if (!changed_when_active) checks->fail("D never changed in active epochs");
  };

  std::vector<std::string> a, b;
  Outcome ignored;
  run(&a, &o);
  run(&b, &ignored);
  if (a.size() != 26) o.fail("expected 26 epochs, got " + std::to_string(a.size()));
  if (a != b) o.fail("same seed produced a different log");

  auto field = [&](std::size_t epoch, int col) {
    std::stringstream ss(a.at(epoch));
    std::string f;
    for (int i = 0; i <= col; ++i) std::getline(ss, f, ',');
    return f;
  };
  // Columns: epoch,d_loss,g_content,g_adv,lr_g,lr_d,alpha,d_frozen
  const auto expect = [&](std::size_t epoch, int col, const std::string& v) {
    if (field(epoch, col) != v) o.fail("epoch " + std::to_string(epoch) + " col " + std::to_string(col) +
                                       " = " + field(epoch, col) + ", want " + v);
  };
  expect(3, 7, "0");
  expect(4, 7, "1");
  expect(7, 4, "2e-04");
  expect(8, 4, "1e-04");
  expect(11, 6, "1e-04");
  expect(12, 6, "1e-05");
  expect(12, 7, "0");
  expect(19, 7, "0");
  expect(20, 7, "1");
  expect(25, 7, "1");
  o.note("26 epochs, frozen D bitwise constant, lr_g drop at 8, alpha change at 12, log reproducible");
  return o;
}

Outcome slope_checks() {
  Outcome o;
  double worst = 0.0;
  for (double cell : {1.0, 3.0}) {
    for (double v : horn_slope(oracle::plane(9, 11, 3.0, 0.0, 50.0, cell)).values)
      worst = std::max(worst, std::abs(v - 3.0));
    for (double v : horn_slope(oracle::plane(9, 11, 3.0, 4.0, -7.0, cell)).values)
      worst = std::max(worst, std::abs(v - 5.0));
  }
  if (!(worst <= 1e-9)) o.fail("plane slope error " + fmt(worst));
  for (double v : horn_slope(DemGrid(6, 7, 123.0)).values) {
    if (v != 0.0) o.fail("constant grid slope " + fmt(v));
  }
  std::mt19937_64 rng(7);
  std::vector<DemGrid> truths, preds;
  std::size_t interior = 0;
  for (int k = 0; k < 3; ++k) {
    truths.push_back(oracle::random_grid(rng, 8 + k, 10));
    preds.push_back(oracle::random_grid(rng, 8 + k, 10));
    interior += (truths.back().rows - 2) * (truths.back().cols - 2);
  }
  std::size_t counted = 0;
  for (const auto& bin : slope_binned_error(truths, preds, 10)) counted += bin.count;
  if (counted != interior) o.fail("bins hold " + std::to_string(counted) + " of " + std::to_string(interior));
  o.note("plane error " + fmt(worst) + ", bins hold " + std::to_string(counted) + " interior cells");
  return o;
}

Outcome loss_arithmetic() {
  Outcome o;
  using V = std::vector<double>;
  int n = 0;
  auto near = [&](const std::string& what, double got, double want) {
    ++n;
    if (!(std::abs(got - want) <= 1e-12)) o.fail(what + " = " + fmt(got) + ", want " + fmt(want));
  };
  near("adv_d perfect", adversarial_loss_d(V{1}, V{0}), 0.0);
  near("adv_d 0.7/0.4", adversarial_loss_d(V{0.7}, V{0.4}), (std::abs(1.0 - 0.7) + std::abs(0.4)) / 2.0);
  near("adv_d m=2", adversarial_loss_d(V{1, 0}, V{0, 1}), 0.5);
  near("adv_g win", adversarial_loss_g(V{1}), 0.0);
  near("adv_g 0.25", adversarial_loss_g(V{0.25}), 0.75);
  near("adv_g m=2", adversarial_loss_g(V{0, 1}), 0.5);
  const Tensor<double> a(Shape{1, 1, 1, 2}, V{0, 0}), b(Shape{1, 1, 1, 2}, V{1, 3});
  near("content identical", content_loss(b, b), 0.0);
  near("content [0,0]/[1,3]", content_loss(a, b), 5.0);
  const Tensor<double> c(Shape{1, 1, 4, 4}, 1.5), d(Shape{1, 1, 4, 4}, 1.5 - 0.25);
  near("content offset", content_loss(c, d), 0.0625);
  near("composite alpha 1e-4", generator_loss(0.5, 2.0, 1e-4), 0.5002);
  near("composite alpha 0", generator_loss(0.5, 2.0, 0.0), 0.5);
  near("composite alpha 1e-5", generator_loss(0.0, 1.0, 1e-5), 1e-5);
  o.note(std::to_string(n) + " worked examples");
  return o;
}

Outcome format_roundtrips() {
  Outcome o;
  const auto dir = fresh_dir("formats");

  std::mt19937_64 rng(9);
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    DemGrid g = oracle::random_grid(rng, 13 + k, 7 + 2 * k, -500.0, 4000.0);
    g.cellsize = 0.75;
    const auto path = (dir / "g.asc").string();
    write_asc(g, path);
    const DemGrid back = read_asc(path);
    if (back.values.size() != g.values.size()) {
      o.fail("ASC size changed");
      continue;
    }
    for (std::size_t i = 0; i < g.values.size(); ++i)
      worst = std::max(worst, std::abs(back.values[i] - g.values[i]));
  }
  if (!(worst <= 1e-6)) o.fail("ASC roundtrip error " + fmt(worst));

  TrainConfig big;
  big.discriminator = DiscriminatorConfig::narrow(32);
  const Checkpoint cp = GanTrainer(big, NormParams{205.7, 984.9}).checkpoint();
  const auto cp_path = (dir / "default.dsrgan").string();
  save_checkpoint(cp, cp_path);
  const Checkpoint back = load_checkpoint(cp_path);
  if (!(back == cp)) o.fail("checkpoint load differs");
  if (serialize_checkpoint(back) != slurp(cp_path)) o.fail("checkpoint bytes differ after reload");

  const auto pairs = synth::pairs(6, 4, 2, 31);
  TrainConfig cfg = synth::smoke_config(6, 19);
  cfg.checkpoint_every = 3;
  const auto full_dir = dir / "full", split_dir = dir / "split";
  train(pairs, cfg, full_dir);
  TrainConfig first = cfg;
  first.epochs = 3;
  train(pairs, first, split_dir);
  const Checkpoint mid = load_checkpoint((split_dir / "checkpoint_000003.dsrgan").string());
  train(pairs, cfg, split_dir, &mid);
  if (slurp(full_dir / "metrics.csv") != slurp(split_dir / "metrics.csv")) o.fail("resumed metrics log differs");
  if (slurp(full_dir / "final.dsrgan") != slurp(split_dir / "final.dsrgan")) o.fail("resumed checkpoint differs");
  o.note("ASC max diff " + fmt(worst) + ", checkpoint bitwise, resume log identical");
  return o;
}

#ifdef DSRGAN_CLI_PATH
int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + DSRGAN_CLI_PATH + "\" " + args + " >> \"" + log.string() + "\" 2>&1";
  return std::system(cmd.c_str());
}

Outcome pipeline() {
  Outcome o;
  const auto dir = fresh_dir("pipeline");
  const auto log = dir / "cli.log";
  {
    std::ofstream cfg(dir / "config.json");
    cfg << R"({"generator":{"n_res_blocks":1,"base_features":8,"upsample_features":32,"scale":4,)"
        << R"("first_kernel":3,"last_kernel":3},"discriminator":{"width_divisor":64},)"
        << R"("schedule":{"compress":100},"batch_size":4,"seed":3,"epochs":6})";
  }
  const std::string d = dir.string();
  const std::vector<std::pair<std::string, std::string>> steps = {
      {"synth", "synth --size-exp 7 --roughness 4 --seed 12 --trim --out \"" + d + "/dem.asc\""},
      {"pairs", "pairs --in \"" + d + "/dem.asc\" --scale 4 --tile-hr 32 --out-dir \"" + d + "/pairs\""},
      {"train", "train --pairs \"" + d + "/pairs\" --config \"" + d + "/config.json\" --out-dir \"" + d + "/run\""},
      {"infer", "infer --checkpoint \"" + d + "/run/final.dsrgan\" --in \"" + d +
                    "/pairs/lr/tile_0000.asc\" --out \"" + d + "/sr.asc\""},
      {"eval", "eval --pairs \"" + d + "/pairs\" --checkpoint \"" + d + "/run/final.dsrgan\" --out-dir \"" + d +
                   "/eval\""},
  };
  for (const auto& [name, args] : steps) {
    if (cli(args, log) != 0) {
      o.fail(name + " failed (see " + log.string() + ")");
      return o;
    }
  }
  const DemGrid sr = read_asc(d + "/sr.asc");
  if (sr.rows != 32 || sr.cols != 32) o.fail("infer output " + std::to_string(sr.rows) + "x" + std::to_string(sr.cols));

  std::ifstream csv(dir / "eval" / "methods.csv");
  std::string line;
  std::getline(csv, line);
  double mae[3] = {-1, -1, -1};
  const char* names[3] = {"dsrgan", "bicubic", "bilinear"};
  while (std::getline(csv, line)) {
    std::stringstream ss(line);
    std::string method, split, mse, rmse, m;
    std::getline(ss, method, ',');
    std::getline(ss, split, ',');
    std::getline(ss, mse, ',');
    std::getline(ss, rmse, ',');
    std::getline(ss, m, ',');
    if (split != "test") continue;
    for (int k = 0; k < 3; ++k)
      if (method == names[k]) mae[k] = std::stod(m);
  }
  for (int k = 0; k < 3; ++k)
    if (mae[k] < 0) o.fail(std::string("methods.csv lacks a ") + names[k] + " row");
  if (o.pass && !(mae[1] <= mae[2])) o.fail("bicubic MAE " + fmt(mae[1]) + " > bilinear MAE " + fmt(mae[2]));
  o.note("test MAE dsrgan " + fmt(mae[0]) + " m, bicubic " + fmt(mae[1]) + " m, bilinear " + fmt(mae[2]) + " m");
  return o;
}
#endif

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {1, "gradient suite", 60, gradient_suite},
      {2, "interpolation oracles", 10, interpolation_oracles},
      {3, "shape laws", 120, shape_laws},
      {4, "residual identity", 0, residual_identity},
      {5, "overfit convergence", 300, overfit},
      {6, "GAN smoke with compressed schedule", 0, gan_smoke},
      {7, "slope correctness", 0, slope_checks},
      {8, "loss arithmetic", 0, loss_arithmetic},
      {9, "format roundtrips", 0, format_roundtrips},
#ifdef DSRGAN_CLI_PATH
      {10, "end-to-end pipeline", 0, pipeline},
#endif
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs > c.budget_s) o.fail("took " + fmt(secs) + " s, budget " + fmt(c.budget_s) + " s");
    failed += !o.pass;
    std::printf("%s %2d %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

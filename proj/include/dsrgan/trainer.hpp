#ifndef DSRGAN_TRAINER_HPP_
#define DSRGAN_TRAINER_HPP_

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsrgan/adam.hpp"
#include "dsrgan/checkpoint.hpp"
#include "dsrgan/config.hpp"
#include "dsrgan/discriminator.hpp"
#include "dsrgan/error.hpp"
#include "dsrgan/generator.hpp"
#include "dsrgan/losses.hpp"
#include "dsrgan/raster.hpp"
#include "dsrgan/schedule.hpp"
#include "dsrgan/terrain.hpp"

namespace dsrgan {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ stream);
}

inline constexpr std::uint64_t kGeneratorStream = 1;
inline constexpr std::uint64_t kDiscriminatorStream = 2;
inline constexpr std::uint64_t kShuffleStream = 0x5348554646ull;

inline std::vector<double> to_doubles(const Tensor<float>& t) {
  return std::vector<double>(t.vec().begin(), t.vec().end());
}

inline Tensor<float> probs_tensor(const std::vector<double>& g) {
  return Tensor<float>(Shape{g.size(), 1, 1, 1}, std::vector<float>(g.begin(), g.end()));
}

}  // namespace detail

/// Elevation range over every LR and HR cell of a dataset.
inline NormParams norm_from_pairs(std::span<const TilePair> pairs) {
  detail::require<PreconditionError>(!pairs.empty(), "norm_from_pairs: empty dataset");
  NormParams p{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& tp : pairs) {
    for (const DemGrid* g : {&tp.lr, &tp.hr}) {
      require_no_nodata(*g, "norm_from_pairs");
      for (double v : g->values) {
        p.min_elev = std::min(p.min_elev, v);
        p.max_elev = std::max(p.max_elev, v);
      }
    }
  }
  if (!(p.max_elev > p.min_elev)) {
    throw PreconditionError("norm_from_pairs: dataset has a single elevation value");
  }
  return p;
}

/// Normalized grids stacked into an (N, 1, rows, cols) tensor.
inline Tensor<float> stack_normalized(std::span<const DemGrid* const> grids, const NormParams& norm) {
  detail::require<PreconditionError>(!grids.empty(), "stack_normalized: no grids");
  const std::size_t rows = grids.front()->rows, cols = grids.front()->cols;
  Tensor<float> t(Shape{grids.size(), 1, rows, cols});
  for (std::size_t n = 0; n < grids.size(); ++n) {
    const DemGrid& g = *grids[n];
    detail::require<ShapeError>(g.rows == rows && g.cols == cols, "stack_normalized: mixed tile sizes");
    require_no_nodata(g, "stack_normalized");
    float* dst = t.plane(n, 0);
    for (std::size_t i = 0; i < g.values.size(); ++i) dst[i] = static_cast<float>(norm.forward(g.values[i]));
  }
  return t;
}

struct StepMetrics {
  double d_loss = 0.0;
  double g_content = 0.0;
  double g_adv = 0.0;
};

struct EpochMetrics {
  std::int64_t epoch = 0;
  double d_loss = 0.0;
  double g_content = 0.0;
  double g_adv = 0.0;
  PhaseParams phase;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

/// Generator, discriminator and both optimizers, advanced one batch or
/// one epoch at a time.
class GanTrainer {
 public:
  GanTrainer(TrainConfig cfg, NormParams norm)
      : cfg_(std::move(cfg)),
        norm_(norm),
        gen_(cfg_.generator, detail::derive_seed(cfg_.seed, detail::kGeneratorStream)),
        disc_(cfg_.discriminator, detail::derive_seed(cfg_.seed, detail::kDiscriminatorStream)),
        adam_g_(AdamState<float>::for_params(gen_.params())),
        adam_d_(AdamState<float>::for_params(disc_.params())) {
    cfg_.validate();
    norm_.validate();
  }

  explicit GanTrainer(const Checkpoint& cp)
      : cfg_(cp.config),
        norm_(cp.norm),
        gen_(cp.config.generator, cp.generator),
        disc_(cp.config.discriminator, cp.discriminator),
        adam_g_(cp.adam_g),
        adam_d_(cp.adam_d),
        epoch_(cp.epoch) {
    cfg_.validate();
    norm_.validate();
  }

  const TrainConfig& config() const { return cfg_; }
  const NormParams& norm() const { return norm_; }
  std::int64_t epoch() const { return epoch_; }
  Generator<float>& generator() { return gen_; }
  Discriminator<float>& discriminator() { return disc_; }

  /// One optimization step on normalized (N,1,h,w) / (N,1,H,W) tensors.
  StepMetrics train_step(const Tensor<float>& lr, const Tensor<float>& hr, const PhaseParams& phase) {
    const int s = cfg_.generator.scale;
    const Shape ls = lr.shape(), hs = hr.shape();
    if (ls.n != hs.n || ls.c != 1 || hs.c != 1 || hs.h != ls.h * s || hs.w != ls.w * s) {
      throw ShapeError("train_step: LR " + ls.str() + " and HR " + hs.str() +
                       " do not match scale " + std::to_string(s));
    }
    const AdversarialForm form = cfg_.adversarial;
    StepMetrics m;

    gen_.params().zero_grad();
    const Tensor<float> fake = gen_.forward(lr, Mode::train);
    m.g_content = content_loss(fake, hr);

    // The fake batch is a constant input here; no gradient reaches G.
    disc_.params().zero_grad();
    const auto d_real = detail::to_doubles(disc_.forward(hr));
    if (!phase.d_frozen) {
      // Layers cache one batch, so each backward directly follows its forward.
      disc_.backward(detail::probs_tensor(adversarial_d_grad_real(form, d_real)));
      const auto d_fake_pre = detail::to_doubles(disc_.forward(fake));
      disc_.backward(detail::probs_tensor(adversarial_d_grad_fake(form, d_fake_pre)));
      m.d_loss = adversarial_d(form, d_real, d_fake_pre);
      adam_step(disc_.params(), adam_d_, phase.lr_d);
    }

    // Generator step against the current discriminator.
    const auto d_fake = detail::to_doubles(disc_.forward(fake));
    if (phase.d_frozen) m.d_loss = adversarial_d(form, d_real, d_fake);
    m.g_adv = adversarial_g(form, d_fake);

    Tensor<float> grad = content_loss_grad(fake, hr);
    if (phase.alpha > 0.0) {
      const Tensor<float> g_adv =
          disc_.backward(detail::probs_tensor(adversarial_g_grad(form, d_fake)));
      const auto a = static_cast<float>(phase.alpha);
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += a * g_adv[i];
    }
    gen_.backward(grad);
    adam_step(gen_.params(), adam_g_, phase.lr_g);
    return m;
  }

  /// Runs epoch `epoch()` over the dataset in a seeded order, then advances
  /// the epoch counter.
  EpochMetrics run_epoch(std::span<const TilePair> data) {
    detail::require<PreconditionError>(!data.empty(), "run_epoch: empty dataset");
    const PhaseParams phase = schedule_at(cfg_.schedule, epoch_);
    const auto order = epoch_order(data.size(), epoch_);

    EpochMetrics em;
    em.epoch = epoch_;
    em.phase = phase;
    std::size_t batches = 0;
    const auto bs = static_cast<std::size_t>(cfg_.batch_size);
    for (std::size_t b = 0; b < order.size(); b += bs) {
      std::vector<const DemGrid*> lr, hr;
      for (std::size_t k = b; k < std::min(order.size(), b + bs); ++k) {
        lr.push_back(&data[order[k]].lr);
        hr.push_back(&data[order[k]].hr);
      }
      const StepMetrics sm =
          train_step(stack_normalized(lr, norm_), stack_normalized(hr, norm_), phase);
      em.d_loss += sm.d_loss;
      em.g_content += sm.g_content;
      em.g_adv += sm.g_adv;
      ++batches;
    }
    em.d_loss /= static_cast<double>(batches);
    em.g_content /= static_cast<double>(batches);
    em.g_adv /= static_cast<double>(batches);
    ++epoch_;
    return em;
  }

  Checkpoint checkpoint() const {
    return {epoch_, cfg_, norm_, gen_.params(), disc_.params(), adam_g_, adam_d_};
  }

  /// Dataset permutation for an epoch; depends only on (seed, epoch).
  std::vector<std::size_t> epoch_order(std::size_t n, std::int64_t epoch) const {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::uint64_t state = detail::derive_seed(cfg_.seed, detail::kShuffleStream ^
                                                             static_cast<std::uint64_t>(epoch));
    for (std::size_t i = n; i > 1; --i) {
      state = detail::splitmix64(state);
      std::swap(idx[i - 1], idx[state % i]);
    }
    return idx;
  }

 private:
  TrainConfig cfg_;
  NormParams norm_;
  Generator<float> gen_;
  Discriminator<float> disc_;
  AdamState<float> adam_g_;
  AdamState<float> adam_d_;
  std::int64_t epoch_ = 0;
};

// ---------------------------------------------------------------------------
// Metrics log

inline const char* kMetricsHeader = "epoch,d_loss,g_content,g_adv,lr_g,lr_d,alpha,d_frozen";

inline std::string format_metrics_row(const EpochMetrics& m) {
  using detail::exact_number;
  return std::to_string(m.epoch) + "," + exact_number(m.d_loss) + "," + exact_number(m.g_content) +
         "," + exact_number(m.g_adv) + "," + exact_number(m.phase.lr_g) + "," +
         exact_number(m.phase.lr_d) + "," + exact_number(m.phase.alpha) + "," +
         (m.phase.d_frozen ? "1" : "0");
}

struct TrainResult {
  Checkpoint final_checkpoint;
  std::vector<EpochMetrics> log;
};

/// Trains until `cfg.epochs` epochs are complete. With `resume`, training
/// continues from that checkpoint's state and its configuration (only the
/// epoch target comes from `cfg`). When `checkpoint_dir` is non-empty,
/// writes checkpoint_<epoch>.dsrgan every cfg.checkpoint_every epochs,
/// final.dsrgan at the end, and appends to metrics.csv.
inline TrainResult train(std::span<const TilePair> dataset, const TrainConfig& cfg,
                         const std::filesystem::path& checkpoint_dir = {},
                         const Checkpoint* resume = nullptr) {
  detail::require<PreconditionError>(!dataset.empty(), "train: empty dataset");
  for (const auto& p : dataset) p.validate();
  std::optional<Checkpoint> start;
  if (resume) {
    start = *resume;
    start->config.epochs = cfg.epochs;
  }
  GanTrainer trainer = start ? GanTrainer(*start) : GanTrainer(cfg, norm_from_pairs(dataset));
  if (dataset.front().scale() != trainer.config().generator.scale) {
    throw ShapeError("train: pairs have scale " + std::to_string(dataset.front().scale()) +
                     " but the generator upsamples by " +
                     std::to_string(trainer.config().generator.scale));
  }
  const std::int64_t every = trainer.config().checkpoint_every;

  std::ofstream metrics;
  if (!checkpoint_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(checkpoint_dir, ec);
    if (ec || !std::filesystem::is_directory(checkpoint_dir)) {
      throw IoError("cannot create checkpoint directory '" + checkpoint_dir.string() + "'");
    }
    const auto path = checkpoint_dir / "metrics.csv";
    const bool fresh = !resume || !std::filesystem::exists(path);
    metrics.open(path, fresh ? std::ios::trunc : std::ios::app);
    if (!metrics) throw IoError("cannot write '" + path.string() + "'");
    if (fresh) metrics << kMetricsHeader << '\n';
  }

  TrainResult result;
  while (trainer.epoch() < cfg.epochs) {
    result.log.push_back(trainer.run_epoch(dataset));
    if (metrics.is_open()) metrics << format_metrics_row(result.log.back()) << '\n' << std::flush;
    if (!checkpoint_dir.empty() && every > 0 && trainer.epoch() % every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "checkpoint_%06lld.dsrgan",
                    static_cast<long long>(trainer.epoch()));
      save_checkpoint(trainer.checkpoint(), (checkpoint_dir / name).string());
    }
  }
  result.final_checkpoint = trainer.checkpoint();
  if (!checkpoint_dir.empty()) {
    save_checkpoint(result.final_checkpoint, (checkpoint_dir / "final.dsrgan").string());
  }
  return result;
}

}  // namespace dsrgan

#endif  // DSRGAN_TRAINER_HPP_

#ifndef DSRGAN_SCHEDULE_HPP_
#define DSRGAN_SCHEDULE_HPP_

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dsrgan/error.hpp"

namespace dsrgan {

struct PhaseParams {
  double lr_g = 2e-4;
  double lr_d = 1e-4;
  double alpha = 1e-4;
  bool d_frozen = false;

  friend bool operator==(const PhaseParams&, const PhaseParams&) = default;
};

/// Epoch range [start, end) with fixed hyperparameters.
struct Phase {
  std::int64_t start = 0;
  std::int64_t end = kOpenEnd;
  PhaseParams params;

  static constexpr std::int64_t kOpenEnd = std::numeric_limits<std::int64_t>::max();
  friend bool operator==(const Phase&, const Phase&) = default;
};

/// Piecewise-constant training plan. A phase change applies from the
/// first epoch of the new phase onward.
struct TrainSchedule {
  std::vector<Phase> phases;

  /// 0-399: both networks train (lr_g 2e-4, lr_d 1e-4, alpha 1e-4).
  /// 400-799: discriminator frozen. 800-1199: lr_g drops to 1e-4.
  /// 1200-1999: discriminator resumes, alpha 1e-5. 2000+: frozen again.
  static TrainSchedule default_phases() {
    TrainSchedule s;
    s.phases = {
        {0, 400, {2e-4, 1e-4, 1e-4, false}},
        {400, 800, {2e-4, 1e-4, 1e-4, true}},
        {800, 1200, {1e-4, 1e-4, 1e-4, true}},
        {1200, 2000, {1e-4, 1e-4, 1e-5, false}},
        {2000, Phase::kOpenEnd, {1e-4, 1e-4, 1e-5, true}},
    };
    return s;
  }

  /// Same phases with every finite boundary divided by `divisor`.
  TrainSchedule compressed(std::int64_t divisor) const {
    detail::require<ConfigError>(divisor >= 1, "schedule divisor must be >= 1");
    TrainSchedule s = *this;
    for (auto& p : s.phases) {
      p.start /= divisor;
      if (p.end != Phase::kOpenEnd) p.end /= divisor;
    }
    s.validate();
    return s;
  }

  void validate() const {
    detail::require<ConfigError>(!phases.empty(), "schedule has no phases");
    detail::require<ConfigError>(phases.front().start == 0, "schedule must start at epoch 0");
    detail::require<ConfigError>(phases.back().end == Phase::kOpenEnd,
                                 "schedule must cover every epoch (last phase open-ended)");
    for (std::size_t i = 0; i < phases.size(); ++i) {
      const auto& p = phases[i];
      detail::require<ConfigError>(p.end > p.start, "schedule phase " + std::to_string(i) + " is empty");
      if (i > 0) {
        detail::require<ConfigError>(p.start == phases[i - 1].end,
                                     "schedule phases must be contiguous");
      }
      detail::require<ConfigError>(p.params.lr_g > 0 && p.params.lr_d > 0,
                                   "schedule learning rates must be positive");
      detail::require<ConfigError>(p.params.alpha >= 0, "schedule alpha must be >= 0");
    }
  }

  friend bool operator==(const TrainSchedule&, const TrainSchedule&) = default;
};

inline PhaseParams schedule_at(const TrainSchedule& s, std::int64_t epoch) {
  detail::require<PreconditionError>(epoch >= 0, "schedule_at: epoch must be >= 0");
  for (const auto& p : s.phases) {
    if (epoch >= p.start && epoch < p.end) return p.params;
  }
  throw ConfigError("schedule does not cover epoch " + std::to_string(epoch));
}

}  // namespace dsrgan

#endif  // DSRGAN_SCHEDULE_HPP_

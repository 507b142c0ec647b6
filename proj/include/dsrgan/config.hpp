#ifndef DSRGAN_CONFIG_HPP_
#define DSRGAN_CONFIG_HPP_

// Training configuration and its JSON form. Every key is optional; absent
// keys keep their defaults, unknown keys are rejected.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "dsrgan/discriminator.hpp"
#include "dsrgan/error.hpp"
#include "dsrgan/generator.hpp"
#include "dsrgan/losses.hpp"
#include "dsrgan/schedule.hpp"

namespace dsrgan {

using json = nlohmann::json;

struct TrainConfig {
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  TrainSchedule schedule = TrainSchedule::default_phases();
  AdversarialForm adversarial = AdversarialForm::absolute;
  int batch_size = 8;
  std::uint64_t seed = 0;
  std::int64_t epochs = 2000;
  std::int64_t checkpoint_every = 100;

  void validate() const {
    generator.validate();
    discriminator.validate();
    schedule.validate();
    detail::require<ConfigError>(batch_size >= 1, "batch_size must be >= 1");
    detail::require<ConfigError>(epochs >= 0, "epochs must be >= 0");
    detail::require<ConfigError>(checkpoint_every >= 0, "checkpoint_every must be >= 0");
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

namespace detail {

inline void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                           const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <class V>
void read_opt(const json& j, const char* key, V& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

}  // namespace detail

inline json to_json(const GeneratorConfig& c) {
  return {{"n_res_blocks", c.n_res_blocks}, {"base_features", c.base_features},
          {"upsample_features", c.upsample_features}, {"scale", c.scale},
          {"first_kernel", c.first_kernel}, {"last_kernel", c.last_kernel},
          {"res_kernel", c.res_kernel}};
}

inline GeneratorConfig generator_config_from_json(const json& j) {
  const std::string w = "generator";
  detail::reject_unknown(j, {"n_res_blocks", "base_features", "upsample_features", "scale",
                             "first_kernel", "last_kernel", "res_kernel"}, w);
  GeneratorConfig c;
  detail::read_opt(j, "n_res_blocks", c.n_res_blocks, w);
  detail::read_opt(j, "base_features", c.base_features, w);
  detail::read_opt(j, "upsample_features", c.upsample_features, w);
  detail::read_opt(j, "scale", c.scale, w);
  detail::read_opt(j, "first_kernel", c.first_kernel, w);
  detail::read_opt(j, "last_kernel", c.last_kernel, w);
  detail::read_opt(j, "res_kernel", c.res_kernel, w);
  c.validate();
  return c;
}

inline json to_json(const DiscriminatorConfig& c) {
  json convs = json::array();
  for (const auto& s : c.convs) convs.push_back({{"features", s.features}, {"stride", s.stride}});
  return {{"convs", convs}, {"leaky_alpha", c.leaky_alpha},
          {"pool", {c.pool_h, c.pool_w}}, {"dense_widths", c.dense_widths}};
}

/// "width_divisor" narrows the default layout (see DiscriminatorConfig::narrow)
/// before any explicit keys apply.
inline DiscriminatorConfig discriminator_config_from_json(const json& j) {
  const std::string w = "discriminator";
  detail::reject_unknown(j, {"convs", "leaky_alpha", "pool", "dense_widths", "width_divisor"}, w);
  DiscriminatorConfig c;
  if (j.contains("width_divisor")) {
    int div = 1;
    detail::read_opt(j, "width_divisor", div, w);
    detail::require<ConfigError>(div >= 1, "discriminator.width_divisor must be >= 1");
    c = DiscriminatorConfig::narrow(div);
  }
  if (j.contains("convs")) {
    c.convs.clear();
    for (const auto& e : j.at("convs")) {
      detail::reject_unknown(e, {"features", "stride"}, w + ".convs[]");
      ConvSpec s;
      detail::read_opt(e, "features", s.features, w);
      detail::read_opt(e, "stride", s.stride, w);
      c.convs.push_back(s);
    }
  }
  detail::read_opt(j, "leaky_alpha", c.leaky_alpha, w);
  if (j.contains("pool")) {
    const auto& p = j.at("pool");
    detail::require<ConfigError>(p.is_array() && p.size() == 2, "discriminator.pool must be [h, w]");
    c.pool_h = p[0].get<int>();
    c.pool_w = p[1].get<int>();
  }
  detail::read_opt(j, "dense_widths", c.dense_widths, w);
  c.validate();
  return c;
}

inline json to_json(const TrainSchedule& s) {
  json phases = json::array();
  for (const auto& p : s.phases) {
    phases.push_back({{"start", p.start},
                      {"end", p.end == Phase::kOpenEnd ? json(nullptr) : json(p.end)},
                      {"lr_g", p.params.lr_g},
                      {"lr_d", p.params.lr_d},
                      {"alpha", p.params.alpha},
                      {"d_frozen", p.params.d_frozen}});
  }
  return {{"phases", phases}};
}

/// {"phases": [...]} and/or {"compress": k}; without "phases" the default
/// plan is used.
inline TrainSchedule schedule_from_json(const json& j) {
  const std::string w = "schedule";
  detail::reject_unknown(j, {"phases", "compress"}, w);
  TrainSchedule s = TrainSchedule::default_phases();
  if (j.contains("phases")) {
    s.phases.clear();
    for (const auto& e : j.at("phases")) {
      detail::reject_unknown(e, {"start", "end", "lr_g", "lr_d", "alpha", "d_frozen"}, w + ".phases[]");
      Phase p;
      detail::read_opt(e, "start", p.start, w);
      if (e.contains("end") && !e.at("end").is_null()) detail::read_opt(e, "end", p.end, w);
      detail::read_opt(e, "lr_g", p.params.lr_g, w);
      detail::read_opt(e, "lr_d", p.params.lr_d, w);
      detail::read_opt(e, "alpha", p.params.alpha, w);
      detail::read_opt(e, "d_frozen", p.params.d_frozen, w);
      s.phases.push_back(p);
    }
  }
  s.validate();
  if (j.contains("compress")) {
    std::int64_t k = 1;
    detail::read_opt(j, "compress", k, w);
    s = s.compressed(k);
  }
  return s;
}

inline json to_json(const TrainConfig& c) {
  return {{"generator", to_json(c.generator)},
          {"discriminator", to_json(c.discriminator)},
          {"schedule", to_json(c.schedule)},
          {"adversarial_loss", c.adversarial == AdversarialForm::absolute ? "absolute" : "log"},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"epochs", c.epochs},
          {"checkpoint_every", c.checkpoint_every}};
}

inline TrainConfig train_config_from_json(const json& j) {
  const std::string w = "config";
  detail::reject_unknown(j, {"generator", "discriminator", "schedule", "adversarial_loss",
                             "batch_size", "seed", "epochs", "checkpoint_every"}, w);
  TrainConfig c;
  if (j.contains("generator")) c.generator = generator_config_from_json(j.at("generator"));
  if (j.contains("discriminator")) {
    c.discriminator = discriminator_config_from_json(j.at("discriminator"));
  }
  if (j.contains("schedule")) c.schedule = schedule_from_json(j.at("schedule"));
  if (j.contains("adversarial_loss")) {
    std::string form;
    detail::read_opt(j, "adversarial_loss", form, w);
    if (form == "absolute") {
      c.adversarial = AdversarialForm::absolute;
    } else if (form == "log") {
      c.adversarial = AdversarialForm::log;
    } else {
      throw ConfigError("config.adversarial_loss must be \"absolute\" or \"log\"");
    }
  }
  detail::read_opt(j, "batch_size", c.batch_size, w);
  detail::read_opt(j, "seed", c.seed, w);
  detail::read_opt(j, "epochs", c.epochs, w);
  detail::read_opt(j, "checkpoint_every", c.checkpoint_every, w);
  c.validate();
  return c;
}

inline TrainConfig read_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("config '" + path + "': " + e.what());
  }
  return train_config_from_json(j);
}

}  // namespace dsrgan

#endif  // DSRGAN_CONFIG_HPP_

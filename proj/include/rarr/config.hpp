#pragma once

// Flat key=value run configuration shared by every subcommand. Values come
// from three layers: built-in defaults, then a config file, then command-line
// overrides; later layers win. Unknown keys are an error at every layer.

#include "rarr/signal.hpp"
#include "rarr/synth.hpp"
#include "rarr/train.hpp"

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rarr {

struct RunConfig {
  // corpus synthesis
  std::uint64_t seed = 1;
  std::size_t participants = 4;
  std::size_t near_sources_per_label = 5;
  std::size_t sources_per_label_per_participant = 2;
  double near_duration_s = 120.0;
  double surface_duration_s = 75.0;
  double variance_scale = 0.15;
  // front end
  double window_s = 30.0;
  double hop_s = 15.0;
  // optimization, shared by both stages
  std::size_t batch_size = 16;
  std::size_t patience = 10;
  double lambda_cls = 1.0;
  double lambda_rec = 1.0;
  double beta_kl = 1e-3;
  std::size_t warmup_epochs = 5;
  // stage budgets
  std::size_t pretrain_epochs = 40;
  double pretrain_lr = 1e-3;
  std::size_t finetune_epochs = 30;
  double finetune_lr = 5e-4;
  double train_fraction = 0.8;
  // benchmark; empty participant means the lowest-sorted id in the corpus
  std::string adaptation_participant;
  std::size_t bench_seeds = 5;
};

namespace config_detail {

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  std::uint64_t out = 0;
  try {
    out = std::stoull(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty() || value[0] == '-')
    throw std::invalid_argument("invalid value '" + value + "' for config key '" + key + "'");
  return out;
}

inline double parse_f64(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty())
    throw std::invalid_argument("invalid value '" + value + "' for config key '" + key + "'");
  return out;
}

struct KeyDef {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline const std::map<std::string, KeyDef>& key_table() {
  static const std::map<std::string, KeyDef> table = [] {
    std::map<std::string, KeyDef> t;
    const auto u64 = [&t](const std::string& k, std::uint64_t RunConfig::* m) {
      t[k] = {[k, m](RunConfig& c, const std::string& v) { c.*m = parse_u64(k, v); },
              [m](const RunConfig& c) { return std::to_string(c.*m); }};
    };
    const auto sz = [&t](const std::string& k, std::size_t RunConfig::* m) {
      t[k] = {[k, m](RunConfig& c, const std::string& v) {
                c.*m = static_cast<std::size_t>(parse_u64(k, v));
              },
              [m](const RunConfig& c) { return std::to_string(c.*m); }};
    };
    const auto f64 = [&t](const std::string& k, double RunConfig::* m) {
      t[k] = {[k, m](RunConfig& c, const std::string& v) { c.*m = parse_f64(k, v); },
              [m](const RunConfig& c) {
                std::ostringstream s;
                s << c.*m;
                return s.str();
              }};
    };
    const auto str = [&t](const std::string& k, std::string RunConfig::* m) {
      t[k] = {[m](RunConfig& c, const std::string& v) { c.*m = v; },
              [m](const RunConfig& c) { return c.*m; }};
    };

    u64("seed", &RunConfig::seed);
    sz("participants", &RunConfig::participants);
    sz("near_sources_per_label", &RunConfig::near_sources_per_label);
    sz("sources_per_label_per_participant", &RunConfig::sources_per_label_per_participant);
    f64("near_duration_s", &RunConfig::near_duration_s);
    f64("surface_duration_s", &RunConfig::surface_duration_s);
    f64("variance_scale", &RunConfig::variance_scale);
    f64("window_s", &RunConfig::window_s);
    f64("hop_s", &RunConfig::hop_s);
    sz("batch_size", &RunConfig::batch_size);
    sz("patience", &RunConfig::patience);
    f64("lambda_cls", &RunConfig::lambda_cls);
    f64("lambda_rec", &RunConfig::lambda_rec);
    f64("beta_kl", &RunConfig::beta_kl);
    sz("warmup_epochs", &RunConfig::warmup_epochs);
    sz("pretrain_epochs", &RunConfig::pretrain_epochs);
    f64("pretrain_lr", &RunConfig::pretrain_lr);
    sz("finetune_epochs", &RunConfig::finetune_epochs);
    f64("finetune_lr", &RunConfig::finetune_lr);
    f64("train_fraction", &RunConfig::train_fraction);
    str("adaptation_participant", &RunConfig::adaptation_participant);
    sz("bench_seeds", &RunConfig::bench_seeds);
    return t;
  }();
  return table;
}

}  // namespace config_detail

inline void set_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = config_detail::key_table();
  const auto it = table.find(key);
  if (it == table.end()) throw std::invalid_argument("unknown config key '" + key + "'");
  it->second.set(cfg, value);
}

// "key=value" with optional spaces around '='
inline void apply_config_override(RunConfig& cfg, const std::string& item) {
  const std::size_t eq = item.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("expected key=value, got '" + item + "'");
  const auto trim = [](std::string s) {
    const std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return std::string();
    const std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
  };
  set_config_key(cfg, trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
}

// one key=value per line; '#' starts a comment; blank lines are fine
inline void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      apply_config_override(cfg, line);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

// deterministic key order, for `--dump-config` and provenance records
inline std::vector<std::pair<std::string, std::string>> config_items(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [key, def] : config_detail::key_table()) out.emplace_back(key, def.get(cfg));
  return out;
}

// ---------------------------------------------------------------------------
// Projections onto the per-module configs
// ---------------------------------------------------------------------------

inline SynthConfig synth_config(const RunConfig& r) {
  SynthConfig s;
  s.participants = r.participants;
  s.near_sources_per_label = r.near_sources_per_label;
  s.sources_per_label_per_participant = r.sources_per_label_per_participant;
  s.near_duration_s = r.near_duration_s;
  s.surface_duration_s = r.surface_duration_s;
  s.variance_scale = r.variance_scale;
  s.window_s = r.window_s;
  s.hop_s = r.hop_s;
  s.seed = r.seed;
  return s;
}

inline FrontEndConfig front_end_config(const RunConfig& r) {
  FrontEndConfig fe;
  fe.window_s = r.window_s;
  fe.hop_s = r.hop_s;
  return fe;
}

inline LossWeights loss_weights(const RunConfig& r) {
  LossWeights w;
  w.lambda_cls = r.lambda_cls;
  w.lambda_rec = r.lambda_rec;
  w.beta_kl = r.beta_kl;
  w.warmup_epochs = r.warmup_epochs;
  return w;
}

inline TrainConfig pretrain_config(const RunConfig& r) {
  TrainConfig t;
  t.epochs = r.pretrain_epochs;
  t.lr = r.pretrain_lr;
  t.batch_size = r.batch_size;
  t.patience = r.patience;
  t.weights = loss_weights(r);
  t.seed = r.seed;
  t.rng_label = "pretrain";
  return t;
}

inline TrainConfig finetune_config(const RunConfig& r) {
  TrainConfig t;
  t.epochs = r.finetune_epochs;
  t.lr = r.finetune_lr;
  t.batch_size = r.batch_size;
  t.patience = r.patience;
  t.weights = loss_weights(r);
  t.seed = r.seed;
  t.rng_label = "finetune";
  return t;
}

}  // namespace rarr

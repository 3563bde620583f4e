#pragma once

// Training loop: Adam over selected parameter groups, label-stratified
// batches, the weighted multitask objective, early stopping with
// best-checkpoint restore, and the four benchmark variants.
//
// Determinism contract: every random draw (batch order, noise) comes from a
// stream named by the run's seed, the trainer's rng_label, and the epoch, so
// a rerun with the same inputs reproduces the same parameters byte for byte.

#include "rarr/checkpoint.hpp"
#include "rarr/corpus.hpp"
#include "rarr/loss.hpp"
#include "rarr/model.hpp"
#include "rarr/rng.hpp"
#include "rarr/signal.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rarr {

// ---------------------------------------------------------------------------
// Prepared data: canonical spectrogram images plus integer labels. Waveforms
// are consumed once up front; training never touches audio again.
// ---------------------------------------------------------------------------

struct PreparedExample {
  Image<float> x;
  std::size_t label = 0;
};

struct PreparedSet {
  std::vector<PreparedExample> examples;
  std::string source_digest;  // digest of the corpus the images came from

  std::array<std::size_t, kNumLabels> label_counts() const {
    std::array<std::size_t, kNumLabels> n{};
    for (const auto& e : examples) ++n[e.label];
    return n;
  }
};

inline PreparedSet prepare(const Corpus& c, const FrontEndConfig& fe) {
  PreparedSet out;
  out.source_digest = corpus_digest(c);
  const std::vector<Spectrogram> specs = corpus_spectrograms(c, fe);
  out.examples.reserve(c.clips.size());
  for (std::size_t i = 0; i < c.clips.size(); ++i) {
    PreparedExample e;
    e.label = static_cast<std::size_t>(static_cast<int>(c.clips[i].label));
    e.x = Image<float>(1, static_cast<std::size_t>(specs[i].rows),
                       static_cast<std::size_t>(specs[i].cols));
    e.x.v = specs[i].values;
    out.examples.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Freeze policies
// ---------------------------------------------------------------------------

// None: the whole network trains (used for pretraining and scratch training);
//   the adapter is not in play yet and stays identity-frozen.
// FullFinetune: encoder and classifier adapt freely; the decoder is untouched
//   by the classification-only objective and the adapter stays identity.
// TaskSelective: only the adapter and the final linear layer train.
enum class FreezePolicy { None, TaskSelective, FullFinetune };

inline std::vector<std::string> frozen_groups_for(FreezePolicy p) {
  switch (p) {
    case FreezePolicy::None: return {"adapter"};
    case FreezePolicy::FullFinetune: return {"adapter", "decoder"};
    case FreezePolicy::TaskSelective: return {"decoder", "encoder", "tcn_temporal"};
  }
  throw std::invalid_argument("unknown freeze policy");
}

inline std::string to_string(FreezePolicy p) {
  switch (p) {
    case FreezePolicy::None: return "none";
    case FreezePolicy::TaskSelective: return "task_selective";
    case FreezePolicy::FullFinetune: return "full_finetune";
  }
  throw std::invalid_argument("unknown freeze policy");
}

// ---------------------------------------------------------------------------
// Configuration and metrics
// ---------------------------------------------------------------------------

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t patience = 10;  // epochs without val improvement before stopping
  LossWeights weights;
  std::uint64_t seed = 0;
  std::string rng_label = "train";
  std::string metrics_path;  // JSONL sink, one line per epoch and split; optional
};

struct EpochMetrics {
  std::size_t epoch = 0;
  std::string split;
  double loss_total = 0, loss_cls = 0, loss_rec = 0, loss_kl = 0;
  double accuracy = 0;
};

inline nlohmann::json to_json(const EpochMetrics& m) {
  nlohmann::json j;
  j["epoch"] = m.epoch;
  j["split"] = m.split;
  j["loss_total"] = m.loss_total;
  j["loss_cls"] = m.loss_cls;
  j["loss_rec"] = m.loss_rec;
  j["loss_kl"] = m.loss_kl;
  j["accuracy"] = m.accuracy;
  return j;
}

struct TrainResult {
  std::vector<EpochMetrics> history;
  std::size_t best_epoch = 0;  // 1-based; 0 when no epoch ran
  std::size_t epochs_run = 0;
  double best_val_total = std::numeric_limits<double>::infinity();
};

// ---------------------------------------------------------------------------
// Adam over the trainable groups only; frozen parameters are never written
// ---------------------------------------------------------------------------

class Adam {
 public:
  Adam(ModelBundle<float>& model, const std::vector<std::string>& frozen, const TrainConfig& cfg)
      : lr_(cfg.lr), b1_(cfg.adam_beta1), b2_(cfg.adam_beta2), eps_(cfg.adam_eps) {
    const std::set<std::string> frozen_set(frozen.begin(), frozen.end());
    model.for_each_tensor([&](const std::string& group, const std::string&, std::vector<float>& w,
                              std::vector<float>& g) {
      if (frozen_set.count(group)) return;
      states_.push_back(State{std::vector<float>(w.size(), 0.0f),
                              std::vector<float>(w.size(), 0.0f), &w, &g});
    });
  }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (State& s : states_) {
      for (std::size_t i = 0; i < s.w->size(); ++i) {
        const double g = (*s.g)[i];
        const double m = b1_ * s.m[i] + (1.0 - b1_) * g;
        const double v = b2_ * s.v[i] + (1.0 - b2_) * g * g;
        s.m[i] = static_cast<float>(m);
        s.v[i] = static_cast<float>(v);
        (*s.w)[i] -= static_cast<float>(lr_ * (m / c1) / (std::sqrt(v / c2) + eps_));
      }
    }
  }

 private:
  struct State {
    std::vector<float> m, v;
    std::vector<float>* w;
    std::vector<float>* g;
  };
  std::vector<State> states_;
  double lr_, b1_, b2_, eps_;
  std::size_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Training internals
// ---------------------------------------------------------------------------

namespace train_detail {

struct SampleStats {
  double cls = 0, rec = 0, kl = 0;
  bool correct = false;
};

// one example, forward plus backward, gradients scaled by inv_batch; terms
// whose weight is zero are skipped entirely so their parameters see no
// gradient at all
inline SampleStats train_sample(ModelBundle<float>& model, const PreparedExample& ex,
                                const LatentSeq<float>* cached_lat, const LossWeights& w,
                                double beta, double inv_batch, RngStream& eps_rng) {
  SampleStats st;
  const bool want_vae = w.lambda_rec != 0.0 || beta != 0.0;
  const LatentSeq<float> lat = cached_lat ? *cached_lat : model.encode(ex.x);
  const LatentSeq<float> ad = model.adapt(lat);

  Seq<float> gmu(ad.mu.c, ad.mu.t), glv(ad.lv.c, ad.lv.t);

  const CeResult<float> ce = cross_entropy(model.classify(ad.mu), ex.label);
  st.cls = ce.value;
  st.correct = ce.pred == ex.label;
  std::vector<float> glogits(ce.grad.size());
  for (std::size_t i = 0; i < glogits.size(); ++i)
    glogits[i] = static_cast<float>(w.lambda_cls * inv_batch) * ce.grad[i];
  const Seq<float> gmu_cls = model.classify_backward(glogits);
  for (std::size_t i = 0; i < gmu.v.size(); ++i) gmu.v[i] = gmu_cls.v[i];

  if (want_vae) {
    const Reparam<float> rp = reparameterize(ad, eps_rng);
    const Image<float> recon = model.decode(rp.z);
    const MseResult<float> rec = mse(recon, ex.x);
    st.rec = rec.value;
    Image<float> grec = rec.grad;
    for (auto& x : grec.v) x *= static_cast<float>(w.lambda_rec * inv_batch);
    const Seq<float> gz = model.dec.backward(grec);
    const LatentSeq<float> grep = reparam_backward(rp, gz);

    const KlResult<float> kl = kl_divergence(ad);
    st.kl = kl.value;
    for (std::size_t i = 0; i < gmu.v.size(); ++i) {
      gmu.v[i] += grep.mu.v[i] + static_cast<float>(beta * inv_batch) * kl.gmu.v[i];
      glv.v[i] = grep.lv.v[i] + static_cast<float>(beta * inv_batch) * kl.glv.v[i];
    }
  }

  const LatentSeq<float> g_lat = model.adapter.forward_backward_grads(gmu, glv);
  if (!cached_lat) model.enc.backward(g_lat.mu, g_lat.lv);
  return st;
}

// deterministic evaluation: reconstruction uses the posterior mean, so no
// noise is drawn
inline EpochMetrics eval_set(ModelBundle<float>& model, const PreparedSet& set,
                             const std::vector<LatentSeq<float>>* cached, const LossWeights& w,
                             double beta, std::size_t epoch, const std::string& split) {
  EpochMetrics m;
  m.epoch = epoch;
  m.split = split;
  if (set.examples.empty()) return m;
  const bool want_vae = w.lambda_rec != 0.0 || beta != 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < set.examples.size(); ++i) {
    const PreparedExample& ex = set.examples[i];
    const LatentSeq<float> lat = cached ? (*cached)[i] : model.encode(ex.x);
    const LatentSeq<float> ad = model.adapt(lat);
    const CeResult<float> ce = cross_entropy(model.classify(ad.mu), ex.label);
    m.loss_cls += ce.value;
    if (ce.pred == ex.label) ++correct;
    if (want_vae) {
      m.loss_rec += mse(model.decode(ad.mu), ex.x).value;
      m.loss_kl += kl_divergence(ad).value;
    }
  }
  const double n = static_cast<double>(set.examples.size());
  m.loss_cls /= n;
  m.loss_rec /= n;
  m.loss_kl /= n;
  m.accuracy = static_cast<double>(correct) / n;
  m.loss_total = w.lambda_cls * m.loss_cls + w.lambda_rec * m.loss_rec + beta * m.loss_kl;
  return m;
}

// label-stratified batch order: each label's examples are shuffled on their
// own stream, then interleaved so every batch stays close to balanced
inline std::vector<std::size_t> epoch_order(const PreparedSet& set, const TrainConfig& cfg,
                                            std::size_t epoch) {
  std::array<std::vector<std::size_t>, kNumLabels> per_label;
  for (std::size_t i = 0; i < set.examples.size(); ++i)
    per_label[set.examples[i].label].push_back(i);
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    RngStream rng(cfg.seed, cfg.rng_label + "/shuffle/epoch" + std::to_string(epoch) + "/label" +
                                std::to_string(l));
    rng.shuffle(per_label[l]);
  }
  std::vector<std::size_t> order;
  order.reserve(set.examples.size());
  for (std::size_t k = 0; order.size() < set.examples.size(); ++k)
    for (std::size_t l = 0; l < kNumLabels; ++l)
      if (k < per_label[l].size()) order.push_back(per_label[l][k]);
  return order;
}

}  // namespace train_detail

// Trains in place. Selection keeps the parameters of the epoch with the best
// validation total loss and restores them before returning; with no
// validation examples the final epoch stands.
inline TrainResult train_loop(ModelBundle<float>& model, const PreparedSet& train_set,
                              const PreparedSet& val_set, const TrainConfig& cfg,
                              const std::vector<std::string>& frozen) {
  if (train_set.examples.empty()) throw std::invalid_argument("training set is empty");
  if (cfg.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  for (const auto& e : train_set.examples)
    if (e.label >= model.meta.n_classes)
      throw std::invalid_argument("label index exceeds model classes");

  const std::set<std::string> frozen_set(frozen.begin(), frozen.end());
  const bool vae_off = cfg.weights.lambda_rec == 0.0 && cfg.weights.beta_kl == 0.0;
  const bool cache_latents = vae_off && frozen_set.count("encoder") > 0;

  // frozen encoder + classification-only loss: latents are constants of the
  // run, so compute them once
  std::vector<LatentSeq<float>> train_lat, val_lat;
  if (cache_latents) {
    train_lat.reserve(train_set.examples.size());
    for (const auto& e : train_set.examples) train_lat.push_back(model.encode(e.x));
    val_lat.reserve(val_set.examples.size());
    for (const auto& e : val_set.examples) val_lat.push_back(model.encode(e.x));
  }

  Adam adam(model, frozen, cfg);
  TrainResult out;

  std::ofstream metrics_file;
  if (!cfg.metrics_path.empty()) {
    metrics_file.open(cfg.metrics_path, std::ios::app);
    if (!metrics_file) throw std::runtime_error("cannot write metrics: " + cfg.metrics_path);
  }
  const auto log_metrics = [&](const EpochMetrics& m) {
    out.history.push_back(m);
    if (metrics_file) metrics_file << to_json(m).dump() << "\n";
  };

  // snapshot of the trainable tensors for best-epoch restore
  const auto capture = [&] {
    std::vector<std::vector<float>> snap;
    model.for_each_tensor([&](const std::string& g, const std::string&, std::vector<float>& w,
                              std::vector<float>&) {
      if (!frozen_set.count(g)) snap.push_back(w);
    });
    return snap;
  };
  const auto restore = [&](const std::vector<std::vector<float>>& snap) {
    std::size_t i = 0;
    model.for_each_tensor([&](const std::string& g, const std::string&, std::vector<float>& w,
                              std::vector<float>&) {
      if (!frozen_set.count(g)) w = snap[i++];
    });
  };

  std::vector<std::vector<float>> best = capture();
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double beta = beta_at(cfg.weights, epoch);
    const std::vector<std::size_t> order = train_detail::epoch_order(train_set, cfg, epoch);
    RngStream eps_rng(cfg.seed, cfg.rng_label + "/eps/epoch" + std::to_string(epoch));

    EpochMetrics tm;
    tm.epoch = epoch;
    tm.split = "train";
    std::size_t correct = 0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      model.zero_grads();
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t idx = order[start + k];
        const auto st = train_detail::train_sample(
            model, train_set.examples[idx], cache_latents ? &train_lat[idx] : nullptr,
            cfg.weights, beta, 1.0 / static_cast<double>(n), eps_rng);
        tm.loss_cls += st.cls;
        tm.loss_rec += st.rec;
        tm.loss_kl += st.kl;
        if (st.correct) ++correct;
      }
      adam.step();
    }

    const double nt = static_cast<double>(order.size());
    tm.loss_cls /= nt;
    tm.loss_rec /= nt;
    tm.loss_kl /= nt;
    tm.accuracy = static_cast<double>(correct) / nt;
    tm.loss_total = cfg.weights.lambda_cls * tm.loss_cls + cfg.weights.lambda_rec * tm.loss_rec +
                    beta * tm.loss_kl;
    log_metrics(tm);
    out.epochs_run = epoch;

    if (!val_set.examples.empty()) {
      const EpochMetrics vm = train_detail::eval_set(
          model, val_set, cache_latents ? &val_lat : nullptr, cfg.weights, beta, epoch, "val");
      log_metrics(vm);
      if (vm.loss_total < out.best_val_total) {
        out.best_val_total = vm.loss_total;
        out.best_epoch = epoch;
        best = capture();
        stale = 0;
      } else if (++stale >= cfg.patience) {
        break;
      }
    } else {
      out.best_epoch = epoch;
    }
  }

  if (!val_set.examples.empty() && out.best_epoch > 0) restore(best);
  return out;
}

inline TrainResult pretrain(ModelBundle<float>& model, const PreparedSet& train_set,
                            const PreparedSet& val_set, const TrainConfig& cfg) {
  return train_loop(model, train_set, val_set, cfg, frozen_groups_for(FreezePolicy::None));
}

inline TrainResult finetune(ModelBundle<float>& model, FreezePolicy policy,
                            const PreparedSet& train_set, const PreparedSet& val_set,
                            const TrainConfig& cfg) {
  return train_loop(model, train_set, val_set, cfg, frozen_groups_for(policy));
}

// ---------------------------------------------------------------------------
// Benchmark variants
// ---------------------------------------------------------------------------

enum class Variant { SimpleVAE, PretrainedVAE, A2V_VAE, RARR };

inline const std::array<Variant, 4>& all_variants() {
  static const std::array<Variant, 4> v = {Variant::SimpleVAE, Variant::PretrainedVAE,
                                           Variant::A2V_VAE, Variant::RARR};
  return v;
}

inline std::string variant_key(Variant v) {
  switch (v) {
    case Variant::SimpleVAE: return "simple_vae";
    case Variant::PretrainedVAE: return "pretrained_vae";
    case Variant::A2V_VAE: return "a2v_vae";
    case Variant::RARR: return "rarr";
  }
  throw std::invalid_argument("unknown variant");
}

inline std::string display_name(Variant v) {
  switch (v) {
    case Variant::SimpleVAE: return "Simple-VAE";
    case Variant::PretrainedVAE: return "Pretrained-VAE";
    case Variant::A2V_VAE: return "A2V-VAE";
    case Variant::RARR: return "RARR";
  }
  throw std::invalid_argument("unknown variant");
}

inline Variant parse_variant(const std::string& s) {
  for (Variant v : all_variants())
    if (s == variant_key(v) || s == display_name(v)) return v;
  throw std::invalid_argument("unknown variant: " + s);
}

struct VariantResult {
  Variant variant = Variant::RARR;
  ModelBundle<float> model;
  TrainResult train;
  BundleMeta meta;
};

// Builds one benchmark variant from the shared pretrained bundle and the
// on-surface training split. The scratch variant trains the full multitask
// objective from fresh weights at twice the finetune rate; the transfer
// variants start from the pretrained weights and minimize classification
// loss only, differing in which groups may move.
inline VariantResult build_variant(const ModelBundle<float>& pretrained, Variant v,
                                   const PreparedSet& train_set, const PreparedSet& val_set,
                                   const TrainConfig& finetune_cfg) {
  VariantResult out;
  out.variant = v;
  out.model = pretrained;

  TrainConfig cfg = finetune_cfg;
  cfg.rng_label = finetune_cfg.rng_label + "/" + variant_key(v);
  FreezePolicy policy = FreezePolicy::TaskSelective;

  switch (v) {
    case Variant::SimpleVAE: {
      ModelBundle<float> fresh(pretrained.meta);
      fresh.init(stream_seed(cfg.seed, cfg.rng_label + "/init"));
      out.model = std::move(fresh);
      cfg.lr = 2.0 * finetune_cfg.lr;
      cfg.weights = LossWeights{};  // full multitask objective
      policy = FreezePolicy::None;
      break;
    }
    case Variant::PretrainedVAE: {
      out.meta.frozen_groups = param_groups();
      out.meta.rng_label = cfg.rng_label;
      out.meta.provenance["variant"] = variant_key(v);
      out.meta.provenance["display_name"] = display_name(v);
      out.meta.provenance["train_digest"] = train_set.source_digest;
      out.meta.provenance["seed"] = cfg.seed;
      return out;  // evaluation-only variant; nothing trains
    }
    case Variant::A2V_VAE: {
      cfg.weights.lambda_rec = 0.0;
      cfg.weights.beta_kl = 0.0;
      policy = FreezePolicy::FullFinetune;
      break;
    }
    case Variant::RARR: {
      cfg.weights.lambda_rec = 0.0;
      cfg.weights.beta_kl = 0.0;
      policy = FreezePolicy::TaskSelective;
      break;
    }
  }

  out.train = finetune(out.model, policy, train_set, val_set, cfg);

  out.meta.frozen_groups = frozen_groups_for(policy);
  std::sort(out.meta.frozen_groups.begin(), out.meta.frozen_groups.end());
  out.meta.rng_label = cfg.rng_label;
  out.meta.provenance["variant"] = variant_key(v);
  out.meta.provenance["display_name"] = display_name(v);
  out.meta.provenance["policy"] = to_string(policy);
  out.meta.provenance["train_digest"] = train_set.source_digest;
  out.meta.provenance["val_digest"] = val_set.source_digest;
  out.meta.provenance["seed"] = cfg.seed;
  out.meta.provenance["best_epoch"] = out.train.best_epoch;
  out.meta.provenance["epochs_run"] = out.train.epochs_run;
  return out;
}

}  // namespace rarr

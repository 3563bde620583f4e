#pragma once

// Training objective: weighted sum of classification, reconstruction, and
// posterior-regularization terms. Every loss returns its value together with
// the gradients needed for the backward pass.

#include "rarr/model.hpp"
#include "rarr/tensor.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace rarr {

struct LossWeights {
  double lambda_cls = 1.0;
  double lambda_rec = 1.0;
  double beta_kl = 1e-3;
  std::size_t warmup_epochs = 5;
};

// linear warmup: beta ramps to beta_kl over the first warmup_epochs epochs
// (epochs are 1-based)
inline double beta_at(const LossWeights& w, std::size_t epoch) {
  if (w.warmup_epochs == 0) return w.beta_kl;
  const double ramp = static_cast<double>(epoch) / static_cast<double>(w.warmup_epochs);
  return w.beta_kl * std::min(1.0, ramp);
}

template <class S>
struct CeResult {
  S value = 0;
  std::vector<S> grad;    // softmax minus one-hot
  std::size_t pred = 0;   // argmax, ties resolved to the lowest index
};

template <class S>
CeResult<S> cross_entropy(const std::vector<S>& logits, std::size_t label) {
  if (label >= logits.size()) throw std::invalid_argument("cross_entropy: label out of range");
  CeResult<S> r;
  S max_logit = logits[0];
  r.pred = 0;
  for (std::size_t i = 1; i < logits.size(); ++i)
    if (logits[i] > max_logit) {
      max_logit = logits[i];
      r.pred = i;
    }
  double sum = 0;
  for (const S l : logits) sum += std::exp(static_cast<double>(l - max_logit));
  const double lse = static_cast<double>(max_logit) + std::log(sum);
  r.value = static_cast<S>(lse - static_cast<double>(logits[label]));
  r.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = std::exp(static_cast<double>(logits[i]) - lse);
    r.grad[i] = static_cast<S>(p - (i == label ? 1.0 : 0.0));
  }
  return r;
}

template <class S>
struct MseResult {
  S value = 0;
  Image<S> grad;
};

template <class S>
MseResult<S> mse(const Image<S>& recon, const Image<S>& target) {
  check_shape(recon.c == target.c && recon.h == target.h && recon.w == target.w,
              "mse operand shapes");
  MseResult<S> r;
  r.grad = Image<S>(recon.c, recon.h, recon.w);
  const double n = static_cast<double>(recon.numel());
  double acc = 0;
  for (std::size_t i = 0; i < recon.v.size(); ++i) {
    const double d = static_cast<double>(recon.v[i]) - static_cast<double>(target.v[i]);
    acc += d * d;
    r.grad.v[i] = static_cast<S>(2.0 * d / n);
  }
  r.value = static_cast<S>(acc / n);
  return r;
}

template <class S>
struct KlResult {
  S value = 0;
  Seq<S> gmu, glv;
};

// KL(q || N(0, I)) summed over latent cells:
//   0.5 * sum(mu^2 + exp(lv) - lv - 1)
template <class S>
KlResult<S> kl_divergence(const LatentSeq<S>& lat) {
  check_shape(lat.mu.c == lat.lv.c && lat.mu.t == lat.lv.t, "kl latent shapes");
  KlResult<S> r;
  r.gmu = Seq<S>(lat.mu.c, lat.mu.t);
  r.glv = Seq<S>(lat.lv.c, lat.lv.t);
  double acc = 0;
  for (std::size_t i = 0; i < lat.mu.v.size(); ++i) {
    const double mu = lat.mu.v[i];
    const double lv = lat.lv.v[i];
    const double var = std::exp(lv);
    acc += mu * mu + var - lv - 1.0;
    r.gmu.v[i] = static_cast<S>(mu);
    r.glv.v[i] = static_cast<S>(0.5 * (var - 1.0));
  }
  r.value = static_cast<S>(0.5 * acc);
  return r;
}

}  // namespace rarr

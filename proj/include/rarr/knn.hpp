#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rarr/corpus.hpp"
#include "rarr/labels.hpp"
#include "rarr/signal.hpp"

namespace rarr {

// Nearest-neighbor separability oracle. If this cannot tell the classes
// apart on canonical spectrograms, no model downstream will either.

struct KnnReport {
  std::size_t n_total = 0;
  std::size_t n_correct = 0;
  double accuracy = 0.0;
};

inline ActivityLabel nn_predict(const std::vector<Spectrogram>& train,
                                const std::vector<ActivityLabel>& labels,
                                const Spectrogram& query) {
  if (train.empty() || train.size() != labels.size())
    throw std::invalid_argument("nn_predict needs aligned, non-empty references");
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].rows != query.rows || train[i].cols != query.cols)
      throw std::invalid_argument("nn_predict spectrogram shape mismatch");
    double dist = 0.0;
    for (std::size_t j = 0; j < query.values.size(); ++j) {
      const double d = static_cast<double>(train[i].values[j]) - query.values[j];
      dist += d * d;
    }
    if (dist < best) {
      best = dist;
      best_i = i;
    }
  }
  return labels[best_i];
}

inline KnnReport nn_evaluate(const std::vector<Spectrogram>& train,
                             const std::vector<ActivityLabel>& train_labels,
                             const std::vector<Spectrogram>& queries,
                             const std::vector<ActivityLabel>& query_labels) {
  if (queries.size() != query_labels.size())
    throw std::invalid_argument("nn_evaluate needs aligned query labels");
  KnnReport r;
  r.n_total = queries.size();
  for (std::size_t i = 0; i < queries.size(); ++i)
    if (nn_predict(train, train_labels, queries[i]) == query_labels[i]) ++r.n_correct;
  r.accuracy = r.n_total == 0 ? 0.0 : static_cast<double>(r.n_correct) / static_cast<double>(r.n_total);
  return r;
}

inline KnnReport nn_evaluate(const Corpus& train, const Corpus& val, const FrontEndConfig& fe) {
  std::vector<ActivityLabel> tl, vl;
  for (const auto& c : train.clips) tl.push_back(c.label);
  for (const auto& c : val.clips) vl.push_back(c.label);
  return nn_evaluate(corpus_spectrograms(train, fe), tl, corpus_spectrograms(val, fe), vl);
}

}  // namespace rarr

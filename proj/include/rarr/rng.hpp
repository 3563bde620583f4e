#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "rarr/digest.hpp"

namespace rarr {

// Derives the seed of a named stream from the run's global seed. Every source
// of randomness in the pipeline (corpus synthesis, parameter init, batch
// shuffling, reparameterization noise) pulls from its own named stream so that
// one command's draws cannot perturb another's.
inline std::uint64_t stream_seed(std::uint64_t global_seed, std::string_view name) {
  Digest d;
  d.u64(global_seed).str(name);
  // Avoid the all-zero seed edge for mt19937_64.
  return d.value() | 1ull;
}

class RngStream {
public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}
  RngStream(std::uint64_t global_seed, std::string_view name)
      : gen_(stream_seed(global_seed, name)) {}

  std::mt19937_64& gen() { return gen_; }

  double normal() { return normal_(gen_); }
  double uniform() { return uniform_(gen_); }          // [0, 1)
  double uniform_pm1() { return 2.0 * uniform_(gen_) - 1.0; }  // [-1, 1)

  std::uint64_t next_u64() { return gen_(); }

  template <typename S>
  void fill_normal(std::vector<S>& v) {
    for (auto& x : v) x = static_cast<S>(normal_(gen_));
  }

  template <typename S>
  void fill_uniform(std::vector<S>& v, double lo, double hi) {
    for (auto& x : v) x = static_cast<S>(lo + (hi - lo) * uniform_(gen_));
  }

  // Fisher-Yates, deterministic for a given stream state.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(v[i], v[pick(gen_)]);
    }
  }

private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace rarr

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <initializer_list>

#include "dbandit/types.hpp"

namespace dbandit {

// Splittable counter-based generator. Every stream is a pure function of
// (key, counter), so substreams keyed by (master_seed, seed_index, agent_id)
// are independent of each other and of the environment stream, and any draw
// can be reproduced without replaying the ones before it.
class Rng {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  // SplitMix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z += kGamma;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static std::uint64_t derive_key(std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = 0x6A09E667F3BCC909ull;
    for (std::uint64_t w : words) h = mix(h ^ w);
    return h;
  }

  Rng() : key_(derive_key({0})) {}
  explicit Rng(std::uint64_t key) : key_(key) {}
  Rng(std::initializer_list<std::uint64_t> words) : key_(derive_key(words)) {}

  std::uint64_t key() const { return key_; }

  // Draw with an explicit counter; does not advance the stream.
  std::uint64_t u64_at(std::uint64_t counter) const { return mix(key_ + counter * kGamma); }
  double uniform_at(std::uint64_t counter) const { return to_unit(u64_at(counter)); }

  std::uint64_t next_u64() { return u64_at(counter_++); }
  double uniform() { return to_unit(next_u64()); }

  // Box-Muller; consumes two counters per pair, caches the spare.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Inverse-CDF sampling over a probability vector.
  int sample(const VectorXd& probs) { return sample_with(probs, uniform()); }

  static int sample_with(const VectorXd& probs, double u) {
    double acc = 0.0;
    const Eigen::Index n = probs.size();
    for (Eigen::Index k = 0; k < n; ++k) {
      acc += probs[k];
      if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(n - 1);  // guard against acc rounding below 1
  }

 private:
  static double to_unit(std::uint64_t v) {
    return static_cast<double>(v >> 11) * 0x1.0p-53;
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dbandit

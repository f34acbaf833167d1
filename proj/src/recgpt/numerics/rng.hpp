#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace recgpt::numerics {

// Seeded generator with distribution code written out here, so draws are
// identical across standard libraries (std::*_distribution is not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Mixes a base seed with a stream tag (epoch, stage, ...).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, bound); bound > 0.
  std::uint64_t uniform_index(std::uint64_t bound);

  // Uniform double in [0, 1).
  double uniform01();

  double normal(double mean, double stddev);

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace recgpt::numerics

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "recgpt/errors.hpp"

namespace recgpt::model {

struct HyperParams {
  std::size_t d = 64;
  std::size_t n_heads = 2;
  std::size_t n_layers = 1;
  std::size_t d_ff = 256;
  std::size_t max_len = 50;
  std::size_t prompt_window = 2;  // K
  double lr = 1e-3;
  std::size_t batch_size = 256;
  std::size_t neg_count = 1;
  std::uint64_t seed = 42;

  void validate() const {
    if (d == 0 || n_heads == 0 || d % n_heads != 0) {
      throw ConfigError("d must be a positive multiple of n_heads");
    }
    if (d_ff == 0) throw ConfigError("d_ff must be positive");
    if (max_len < 1) throw ConfigError("max_len must be at least 1");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
  }
};

struct ModelDims {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::size_t d = 64;
  std::size_t n_heads = 2;
  std::size_t n_layers = 1;
  std::size_t d_ff = 256;
  std::size_t max_len = 50;

  std::size_t head_dim() const { return d / n_heads; }
  bool operator==(const ModelDims&) const = default;

  static ModelDims from(const HyperParams& h, std::size_t users, std::size_t items) {
    return {users, items, h.d, h.n_heads, h.n_layers, h.d_ff, h.max_len};
  }
};

}  // namespace recgpt::model

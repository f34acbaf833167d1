#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "recgpt/numerics/tensor.hpp"

namespace recgpt::pipeline {

inline constexpr std::uint32_t kFormatVersion = 1;

struct TensorEntry {
  std::string name;
  std::vector<std::size_t> shape;
  std::string dtype;  // "f32" or "i32"
  std::size_t offset = 0;
  std::size_t length = 0;  // bytes
};

// Checkpoint file: 8-byte magic, u64 LE manifest length, JSON manifest, then
// one contiguous little-endian blob holding every tensor back to back.
class Container {
 public:
  Container() = default;
  Container(std::string stage, std::string config_hash)
      : stage_(std::move(stage)), config_hash_(std::move(config_hash)) {}

  const std::string& stage() const { return stage_; }
  const std::string& config_hash() const { return config_hash_; }
  nlohmann::json& meta() { return meta_; }
  const nlohmann::json& meta() const { return meta_; }
  const std::vector<TensorEntry>& entries() const { return entries_; }

  void add_f32(const std::string& name, const numerics::Tensor& t);
  void add_f32(const std::string& name, std::vector<std::size_t> shape,
               std::span<const float> values);
  void add_i32(const std::string& name, std::vector<std::size_t> shape,
               std::span<const std::int32_t> values);

  bool has(const std::string& name) const;
  const TensorEntry& entry(const std::string& name) const;
  numerics::Tensor f32(const std::string& name) const;
  std::vector<std::int32_t> i32(const std::string& name) const;

  std::vector<std::uint8_t> serialize() const;
  static Container parse(std::span<const std::uint8_t> bytes, const std::string& source);

  // Writes through a temporary file and renames it into place.
  void save(const std::filesystem::path& path) const;
  static Container load(const std::filesystem::path& path);

 private:
  void add_entry(const std::string& name, std::vector<std::size_t> shape, const char* dtype,
                 std::size_t count);

  std::string stage_;
  std::string config_hash_;
  nlohmann::json meta_ = nlohmann::json::object();
  std::vector<TensorEntry> entries_;
  std::vector<std::uint8_t> blob_;
};

// FNV-1a of a file's bytes, as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace recgpt::pipeline

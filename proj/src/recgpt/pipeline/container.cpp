#include "recgpt/pipeline/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "recgpt/errors.hpp"
#include "recgpt/pipeline/hash.hpp"

namespace recgpt::pipeline {
namespace {

constexpr char kMagic[8] = {'R', 'E', 'C', 'G', 'P', 'T', 'C', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

[[noreturn]] void corrupt(const std::string& source, const std::string& what) {
  throw DataError("checkpoint " + source + ": " + what);
}

}  // namespace

void Container::add_entry(const std::string& name, std::vector<std::size_t> shape,
                          const char* dtype, std::size_t count) {
  if (has(name)) throw DataError("checkpoint: duplicate tensor " + name);
  if (product(shape) != count) throw DimensionError("checkpoint: shape/size mismatch for " + name);
  entries_.push_back({name, std::move(shape), dtype, blob_.size(), count * 4});
}

void Container::add_f32(const std::string& name, const numerics::Tensor& t) {
  add_f32(name, t.shape(), t.values());
}

void Container::add_f32(const std::string& name, std::vector<std::size_t> shape,
                        std::span<const float> values) {
  add_entry(name, std::move(shape), "f32", values.size());
  for (float v : values) put_u32(blob_, std::bit_cast<std::uint32_t>(v));
}

void Container::add_i32(const std::string& name, std::vector<std::size_t> shape,
                        std::span<const std::int32_t> values) {
  add_entry(name, std::move(shape), "i32", values.size());
  for (auto v : values) put_u32(blob_, static_cast<std::uint32_t>(v));
}

bool Container::has(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

const TensorEntry& Container::entry(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e;
  throw DataError("checkpoint (" + stage_ + "): no tensor named " + name);
}

numerics::Tensor Container::f32(const std::string& name) const {
  const auto& e = entry(name);
  if (e.dtype != "f32") throw DataError("checkpoint tensor " + name + " is not f32");
  std::vector<float> data(e.length / 4);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(get_u32(blob_.data() + e.offset + 4 * i));
  }
  return numerics::Tensor(e.shape, std::move(data));
}

std::vector<std::int32_t> Container::i32(const std::string& name) const {
  const auto& e = entry(name);
  if (e.dtype != "i32") throw DataError("checkpoint tensor " + name + " is not i32");
  std::vector<std::int32_t> data(e.length / 4);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<std::int32_t>(get_u32(blob_.data() + e.offset + 4 * i));
  }
  return data;
}

std::vector<std::uint8_t> Container::serialize() const {
  nlohmann::json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["stage"] = stage_;
  manifest["config_hash"] = config_hash_;
  manifest["blob_length"] = blob_.size();
  manifest["blob_fnv1a64"] = hex64(fnv1a64(blob_));
  manifest["meta"] = meta_;
  auto tensors = nlohmann::json::array();
  for (const auto& e : entries_) {
    tensors.push_back({{"name", e.name},
                       {"shape", e.shape},
                       {"dtype", e.dtype},
                       {"offset", e.offset},
                       {"length", e.length}});
  }
  manifest["tensors"] = std::move(tensors);
  const std::string text = manifest.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), blob_.begin(), blob_.end());
  return out;
}

Container Container::parse(std::span<const std::uint8_t> bytes, const std::string& source) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    corrupt(source, "not a checkpoint file (bad magic)");
  }
  const std::uint64_t manifest_len = get_u64(bytes.data() + 8);
  if (manifest_len > bytes.size() - 16) corrupt(source, "manifest length exceeds file size");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + manifest_len);
  } catch (const nlohmann::json::exception& e) {
    corrupt(source, std::string("unreadable manifest: ") + e.what());
  }

  Container c;
  try {
    if (manifest.at("format_version").get<std::uint32_t>() != kFormatVersion) {
      corrupt(source, "unsupported format version");
    }
    c.stage_ = manifest.at("stage").get<std::string>();
    c.config_hash_ = manifest.at("config_hash").get<std::string>();
    c.meta_ = manifest.at("meta");
    const auto blob_len = manifest.at("blob_length").get<std::size_t>();
    const std::size_t blob_start = 16 + manifest_len;
    if (bytes.size() - blob_start != blob_len) {
      corrupt(source, "blob is " + std::to_string(bytes.size() - blob_start) +
                          " bytes, manifest says " + std::to_string(blob_len));
    }
    c.blob_.assign(bytes.begin() + static_cast<std::ptrdiff_t>(blob_start), bytes.end());
    if (hex64(fnv1a64(c.blob_)) != manifest.at("blob_fnv1a64").get<std::string>()) {
      corrupt(source, "blob checksum mismatch");
    }
    for (const auto& t : manifest.at("tensors")) {
      TensorEntry e;
      e.name = t.at("name").get<std::string>();
      e.shape = t.at("shape").get<std::vector<std::size_t>>();
      e.dtype = t.at("dtype").get<std::string>();
      e.offset = t.at("offset").get<std::size_t>();
      e.length = t.at("length").get<std::size_t>();
      if (e.dtype != "f32" && e.dtype != "i32") corrupt(source, "unknown dtype " + e.dtype);
      if (e.length != product(e.shape) * 4 || e.offset > blob_len ||
          e.length > blob_len - e.offset) {
        corrupt(source, "tensor " + e.name + " has an inconsistent directory entry");
      }
      c.entries_.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    corrupt(source, std::string("malformed manifest: ") + e.what());
  }
  return c;
}

void Container::save(const std::filesystem::path& path) const {
  write_file_atomic(path, serialize());
}

Container Container::load(const std::filesystem::path& path) {
  return parse(read_file(path), path.string());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string file_hash(const std::filesystem::path& path) {
  return hex64(fnv1a64(read_file(path)));
}

}  // namespace recgpt::pipeline

#include "recgpt/pipeline/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "recgpt/errors.hpp"
#include "recgpt/pipeline/hash.hpp"

namespace recgpt::pipeline {
namespace {

using Normalizer = std::function<std::string(const std::string& key, const std::string& raw)>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_list(const std::string& raw) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(raw);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& raw, const char* expected) {
  throw ConfigError("config key '" + key + "': bad value '" + raw + "' (expected " + expected +
                    ")");
}

std::uint64_t parse_u64(const std::string& key, const std::string& raw) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
  if (raw.empty() || ec != std::errc() || ptr != raw.data() + raw.size()) {
    bad_value(key, raw, "a non-negative integer");
  }
  return v;
}

std::string norm_uint(const std::string& key, const std::string& raw) {
  return std::to_string(parse_u64(key, raw));
}

std::string norm_positive(const std::string& key, const std::string& raw) {
  const auto v = parse_u64(key, raw);
  if (v == 0) bad_value(key, raw, "a positive integer");
  return std::to_string(v);
}

std::string norm_double(const std::string& key, const std::string& raw) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
  if (raw.empty() || ec != std::errc() || ptr != raw.data() + raw.size()) {
    bad_value(key, raw, "a number");
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string norm_bool(const std::string& key, const std::string& raw) {
  const auto v = lower(raw);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return "true";
  if (v == "false" || v == "0" || v == "no" || v == "off") return "false";
  bad_value(key, raw, "true or false");
}

std::string norm_string(const std::string&, const std::string& raw) { return raw; }

Normalizer norm_choice(std::vector<std::string> choices) {
  return [choices](const std::string& key, const std::string& raw) {
    const auto v = lower(raw);
    for (const auto& c : choices)
      if (lower(c) == v) return c;
    bad_value(key, raw, ("one of " + join(choices)).c_str());
  };
}

std::string norm_uint_list(const std::string& key, const std::string& raw) {
  std::vector<std::string> out;
  for (const auto& item : split_list(raw)) out.push_back(norm_uint(key, item));
  if (out.empty()) bad_value(key, raw, "a comma-separated list of integers");
  return join(out);
}

std::string norm_mode(const std::string& key, const std::string& raw) {
  const auto m = eval::parse_mode(raw);
  if (!m) bad_value(key, raw, "an evaluation mode");
  return eval::mode_name(*m);
}

std::string norm_mode_list(const std::string& key, const std::string& raw) {
  std::vector<std::string> out;
  for (const auto& item : split_list(raw)) out.push_back(norm_mode(key, item));
  if (out.empty()) bad_value(key, raw, "a comma-separated list of evaluation modes");
  return join(out);
}

std::string norm_optional_int(const std::string& key, const std::string& raw) {
  if (raw.empty() || lower(raw) == "none") return "none";
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
  if (ec != std::errc() || ptr != raw.data() + raw.size()) bad_value(key, raw, "an integer or none");
  return std::to_string(v);
}

std::string norm_d_ff(const std::string& key, const std::string& raw) {
  if (lower(raw) == "auto") return "auto";
  return norm_positive(key, raw);
}

struct KeySpec {
  std::string default_value;
  Normalizer normalize;
  bool hashed = true;
};

const std::map<std::string, KeySpec>& registry() {
  static const std::map<std::string, KeySpec> specs{
      {"data_path", {"", norm_string}},
      {"min_timestamp", {"none", norm_optional_int}},
      {"kcore_k", {"5", norm_positive}},
      {"max_len", {"50", norm_positive}},
      {"d", {"64", norm_positive}},
      {"n_heads", {"2", norm_positive}},
      {"n_layers", {"1", norm_positive}},
      {"d_ff", {"auto", norm_d_ff}},
      {"lr", {"0.001", norm_double}},
      {"batch_size", {"256", norm_positive}},
      {"neg_count", {"1", norm_positive}},
      {"seed", {"42", norm_uint}},
      {"pretrain_epochs", {"200", norm_uint}},
      {"tune_epochs", {"200", norm_uint}},
      {"patience", {"10", norm_uint}},
      {"eval_every", {"1", norm_positive}},
      {"prompt_window", {"2", norm_uint}},
      {"recall_m", {"9", norm_positive}},
      {"recall_n", {"1", norm_uint}},
      {"scorer", {"output_layer", norm_choice({"output_layer", "tied_embedding"})}},
      {"loss_positions", {"last", norm_choice({"last", "all_real"})}},
      {"tune_params", {"all", norm_choice({"all", "prompt_only"})}},
      {"regenerate_every", {"0", norm_uint}},
      {"filter_history", {"false", norm_bool}},
      {"eval_modes", {"PRETRAIN,FINETUNE,RECGPT1,RECGPT", norm_mode_list}},
      {"eval_split", {"test", norm_choice({"valid", "test"})}},
      {"k_list", {"5,10", norm_uint_list}},
      {"sweep_axis", {"m_n", norm_choice({"K", "m_n"})}},
      {"sweep_k_grid", {"0,1,2,3,4,5,6", norm_uint_list}},
      {"sweep_mode", {"RECGPT", norm_mode}},
      {"output_dir", {"runs", norm_string, false}},
      {"dump_recall", {"false", norm_bool}},
      {"dump_users", {"false", norm_bool}},
      {"finetune_baseline", {"true", norm_bool}},
  };
  return specs;
}

std::vector<std::size_t> parse_uint_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(v)) out.push_back(parse_u64(key, item));
  return out;
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& [key, spec] : registry()) values_[key] = spec.default_value;
}

RunConfig RunConfig::parse(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.erase(hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      cfg.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  RunConfig cfg = parse(in, path.string());
  cfg.base_dir = path.parent_path();
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = registry().find(key);
  if (it == registry().end()) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = it->second.normalize(key, trim(value));
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [key, spec] : registry()) out.push_back(key);
  return out;
}

void RunConfig::validate() const {
  hyper().validate();
  if (get("data_path").empty()) throw ConfigError("data_path is not set");
  const auto modes = eval_modes();
  const std::size_t k_max = [&] {
    const auto ks = k_list();
    return *std::max_element(ks.begin(), ks.end());
  }();
  if (k_max == 0) throw ConfigError("k_list entries must be positive");
  for (auto m : modes) {
    if ((m == eval::EvalMode::kRecGpt || m == eval::EvalMode::kVariant1) &&
        k_max > recall_m() + recall_n()) {
      throw ConfigError("k_list contains " + std::to_string(k_max) +
                        " but two-step recall returns recall_m + recall_n = " +
                        std::to_string(recall_m() + recall_n()) + " items");
    }
  }
  const auto mode = sweep_mode();
  if (sweep_axis() == "m_n" && mode != eval::EvalMode::kRecGpt &&
      mode != eval::EvalMode::kVariant1) {
    throw ConfigError("sweep_axis = m_n needs sweep_mode RECGPT or VARIANT_1");
  }
}

std::string RunConfig::canonical_text() const {
  std::string out;
  for (const auto& [key, spec] : registry()) {
    if (!spec.hashed) continue;
    out += key + " = " + values_.at(key) + "\n";
  }
  return out;
}

std::string RunConfig::hash() const { return hex64(fnv1a64(canonical_text())); }

std::size_t RunConfig::uint_value(const std::string& key) const {
  return static_cast<std::size_t>(parse_u64(key, get(key)));
}

bool RunConfig::bool_value(const std::string& key) const { return get(key) == "true"; }

std::filesystem::path RunConfig::data_path() const {
  std::filesystem::path p = get("data_path");
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return p;
}

std::optional<std::int64_t> RunConfig::min_timestamp() const {
  const auto& v = get("min_timestamp");
  if (v == "none") return std::nullopt;
  return std::stoll(v);
}

std::size_t RunConfig::kcore_k() const { return uint_value("kcore_k"); }

model::HyperParams RunConfig::hyper() const {
  model::HyperParams h;
  h.d = uint_value("d");
  h.n_heads = uint_value("n_heads");
  h.n_layers = uint_value("n_layers");
  h.d_ff = get("d_ff") == "auto" ? 4 * h.d : uint_value("d_ff");
  h.max_len = uint_value("max_len");
  h.prompt_window = uint_value("prompt_window");
  h.lr = std::stod(get("lr"));
  h.batch_size = uint_value("batch_size");
  h.neg_count = uint_value("neg_count");
  h.seed = parse_u64("seed", get("seed"));
  return h;
}

std::size_t RunConfig::pretrain_epochs() const { return uint_value("pretrain_epochs"); }
std::size_t RunConfig::tune_epochs() const { return uint_value("tune_epochs"); }
std::size_t RunConfig::patience() const { return uint_value("patience"); }
std::size_t RunConfig::eval_every() const { return uint_value("eval_every"); }
std::size_t RunConfig::recall_m() const { return uint_value("recall_m"); }
std::size_t RunConfig::recall_n() const { return uint_value("recall_n"); }

model::Scorer RunConfig::scorer() const {
  return get("scorer") == "tied_embedding" ? model::Scorer::kTiedEmbedding
                                           : model::Scorer::kOutputLayer;
}

training::LossPositions RunConfig::loss_positions() const {
  return get("loss_positions") == "all_real" ? training::LossPositions::kAllReal
                                             : training::LossPositions::kLast;
}

training::TunedSet RunConfig::tune_params() const {
  return get("tune_params") == "prompt_only" ? training::TunedSet::kPromptOnly
                                             : training::TunedSet::kAll;
}

std::size_t RunConfig::regenerate_every() const { return uint_value("regenerate_every"); }
bool RunConfig::filter_history() const { return bool_value("filter_history"); }

std::vector<eval::EvalMode> RunConfig::eval_modes() const {
  std::vector<eval::EvalMode> out;
  for (const auto& name : split_list(get("eval_modes"))) out.push_back(*eval::parse_mode(name));
  return out;
}

eval::Split RunConfig::eval_split() const {
  return get("eval_split") == "valid" ? eval::Split::kValid : eval::Split::kTest;
}

std::vector<std::size_t> RunConfig::k_list() const { return parse_uint_list("k_list", get("k_list")); }
std::string RunConfig::sweep_axis() const { return get("sweep_axis"); }

std::vector<std::size_t> RunConfig::sweep_k_grid() const {
  return parse_uint_list("sweep_k_grid", get("sweep_k_grid"));
}

eval::EvalMode RunConfig::sweep_mode() const { return *eval::parse_mode(get("sweep_mode")); }

std::filesystem::path RunConfig::output_dir() const {
  std::filesystem::path p = get("output_dir");
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return p;
}

bool RunConfig::dump_recall() const { return bool_value("dump_recall"); }
bool RunConfig::dump_users() const { return bool_value("dump_users"); }
bool RunConfig::finetune_baseline() const { return bool_value("finetune_baseline"); }

}  // namespace recgpt::pipeline

#include "recgpt/pipeline/artifacts.hpp"

#include <cstdio>
#include <sstream>

#include "recgpt/errors.hpp"

namespace recgpt::pipeline {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void expect_stage(const Container& c, const std::string& stage) {
  if (c.stage() != stage) {
    throw DataError("expected a " + stage + " checkpoint, found stage '" + c.stage() + "'");
  }
}

}  // namespace

Container dataset_container(const data::SplitDataset& dataset, const std::string& config_hash) {
  Container c("preprocess", config_hash);
  std::vector<std::int32_t> offsets{0};
  std::vector<std::int32_t> items;
  for (const auto& s : dataset.sequences()) {
    items.insert(items.end(), s.begin(), s.end());
    offsets.push_back(static_cast<std::int32_t>(items.size()));
  }
  c.add_i32("offsets", {offsets.size()}, offsets);
  c.add_i32("items", {items.size()}, items);
  c.meta()["max_len"] = dataset.max_len();
  c.meta()["user_names"] = dataset.catalog().user_names();
  c.meta()["item_names"] = dataset.catalog().item_names();
  return c;
}

data::SplitDataset dataset_from(const Container& c) {
  expect_stage(c, "preprocess");
  data::Catalog catalog;
  try {
    for (const auto& u : c.meta().at("user_names")) catalog.add_user(u.get<std::string>());
    for (const auto& i : c.meta().at("item_names")) catalog.add_item(i.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("dataset artifact: bad catalog: ") + e.what());
  }
  const auto offsets = c.i32("offsets");
  const auto items = c.i32("items");
  if (offsets.size() != catalog.num_users() + 1 || offsets.front() != 0 ||
      static_cast<std::size_t>(offsets.back()) != items.size()) {
    throw DataError("dataset artifact: offsets do not match the catalog");
  }
  std::vector<std::vector<ItemId>> sequences;
  for (std::size_t u = 0; u + 1 < offsets.size(); ++u) {
    if (offsets[u + 1] < offsets[u]) throw DataError("dataset artifact: offsets not monotone");
    sequences.emplace_back(items.begin() + offsets[u], items.begin() + offsets[u + 1]);
  }
  return data::SplitDataset(std::move(catalog), std::move(sequences),
                            c.meta().at("max_len").get<std::size_t>());
}

Container params_container(const model::ModelParams<float>& params, const std::string& stage,
                           const std::string& config_hash) {
  Container c(stage, config_hash);
  const auto& d = params.dims;
  c.meta()["dims"] = {{"num_users", d.num_users}, {"num_items", d.num_items}, {"d", d.d},
                      {"n_heads", d.n_heads},     {"n_layers", d.n_layers},   {"d_ff", d.d_ff},
                      {"max_len", d.max_len}};
  for (const auto* p : params.parameters()) c.add_f32(p->name, p->value);
  return c;
}

model::ModelParams<float> params_from(const Container& c) {
  model::ModelDims dims;
  try {
    const auto& j = c.meta().at("dims");
    dims.num_users = j.at("num_users").get<std::size_t>();
    dims.num_items = j.at("num_items").get<std::size_t>();
    dims.d = j.at("d").get<std::size_t>();
    dims.n_heads = j.at("n_heads").get<std::size_t>();
    dims.n_layers = j.at("n_layers").get<std::size_t>();
    dims.d_ff = j.at("d_ff").get<std::size_t>();
    dims.max_len = j.at("max_len").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint has no model dims: ") + e.what());
  }
  if (dims.n_heads == 0 || dims.d % dims.n_heads != 0) {
    throw DataError("checkpoint model dims are inconsistent");
  }
  auto params = model::ModelParams<float>::zeros(dims);
  for (auto* p : params.parameters()) {
    auto t = c.f32(p->name);
    if (t.shape() != p->value.shape()) {
      throw DataError("checkpoint tensor " + p->name + " has shape " + numerics::Tensor::shape_string(t.shape()) +
                      ", expected " + numerics::Tensor::shape_string(p->value.shape()));
    }
    p->value = std::move(t);
  }
  if (!params.all_finite()) throw NumericalError("checkpoint holds non-finite parameters");
  return params;
}

Container prompts_container(const training::PromptCache& cache, const std::string& config_hash) {
  Container c("gen-prompts", config_hash);
  std::vector<std::int32_t> users, offsets{0}, items, segments;
  for (std::size_t u = 0; u < cache.num_users(); ++u) {
    const auto& s = cache.entries()[u].sequence();
    users.push_back(static_cast<std::int32_t>(u));
    items.insert(items.end(), s.items.begin(), s.items.end());
    for (auto seg : s.segments) segments.push_back(static_cast<std::int32_t>(seg));
    offsets.push_back(static_cast<std::int32_t>(items.size()));
  }
  c.add_i32("user_index", {users.size()}, users);
  c.add_i32("offsets", {offsets.size()}, offsets);
  c.add_i32("items", {items.size()}, items);
  c.add_i32("segments", {segments.size()}, segments);
  c.meta()["window"] = cache.window();
  c.meta()["source_hash"] = cache.source_hash;
  return c;
}

training::PromptCache prompts_from(const Container& c) {
  const auto users = c.i32("user_index");
  const auto offsets = c.i32("offsets");
  const auto items = c.i32("items");
  const auto segments = c.i32("segments");
  if (offsets.size() != users.size() + 1 || items.size() != segments.size() ||
      offsets.empty() || static_cast<std::size_t>(offsets.back()) != items.size()) {
    throw DataError("prompt cache artifact: inconsistent record table");
  }
  const auto window = c.meta().at("window").get<std::size_t>();
  std::vector<training::PromptEnhancedSequence> per_user;
  for (std::size_t r = 0; r < users.size(); ++r) {
    if (users[r] != static_cast<std::int32_t>(r)) {
      throw DataError("prompt cache artifact: records out of user order");
    }
    data::TaggedSequence s;
    for (auto i = offsets[r]; i < offsets[r + 1]; ++i) {
      s.items.push_back(items[static_cast<std::size_t>(i)]);
      const auto seg = segments[static_cast<std::size_t>(i)];
      if (seg != 0 && seg != 1) throw DataError("prompt cache artifact: bad segment tag");
      s.segments.push_back(static_cast<Segment>(seg));
    }
    per_user.emplace_back(std::move(s), window);
  }
  training::PromptCache cache(window, std::move(per_user));
  cache.config_hash = c.config_hash();
  cache.source_hash = c.meta().value("source_hash", "");
  return cache;
}

void set_upstream(Container& c, const std::string& stage, const std::string& hash) {
  c.meta()["upstream"][stage] = hash;
}

std::string upstream(const Container& c, const std::string& stage) {
  const auto& meta = c.meta();
  if (!meta.contains("upstream") || !meta["upstream"].contains(stage)) return "";
  return meta["upstream"][stage].get<std::string>();
}

void put_report(Container& c, const training::TrainReport& report) {
  nlohmann::json j;
  j["epochs_run"] = report.epoch_losses.size();
  j["best_epoch"] = report.best_epoch;
  j["stopped_early"] = report.stopped_early;
  j["seed"] = report.seed;
  j["prompt_generations"] = report.prompt_generations;
  auto norms = nlohmann::json::object();
  for (const auto& [name, v] : report.param_norms) norms[name] = fmt(v);
  j["param_norms"] = norms;
  c.meta()["report"] = j;
}

std::string report_csv(const training::TrainReport& report, std::size_t eval_every) {
  std::ostringstream os;
  os << "epoch,loss,validation\n";
  if (!report.validation.empty()) os << "0,," << fmt(report.validation[0]) << '\n';
  for (std::size_t e = 0; e < report.epoch_losses.size(); ++e) {
    os << e + 1 << ',' << fmt(report.epoch_losses[e]) << ',';
    const std::size_t epoch = e + 1;
    if (eval_every > 0 && epoch % eval_every == 0) {
      const std::size_t idx = epoch / eval_every;
      if (idx < report.validation.size()) os << fmt(report.validation[idx]);
    }
    os << '\n';
  }
  return os.str();
}

std::string stats_text(const data::DatasetStats& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %10s %10s %12s %10s\n%-10zu %10zu %10zu %12.2f %9.4f%%\n",
                "users", "items", "actions", "avg_length", "sparsity", s.users, s.items,
                s.actions, s.avg_length, 100.0 * s.sparsity);
  return buf;
}

std::string stats_csv(const data::DatasetStats& s) {
  std::ostringstream os;
  os << "users,items,actions,avg_length,sparsity\n"
     << s.users << ',' << s.items << ',' << s.actions << ',' << fmt(s.avg_length) << ','
     << fmt(s.sparsity) << '\n';
  return os.str();
}

}  // namespace recgpt::pipeline

#include "recgpt/recgpt.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "recgpt/errors.hpp"
#include "recgpt/pipeline/artifacts.hpp"
#include "recgpt/pipeline/config.hpp"
#include "recgpt/pipeline/container.hpp"
#include "recgpt/pipeline/stages.hpp"
#include "recgpt/recall/recall.hpp"

struct recgpt_config {
  recgpt::pipeline::RunConfig value;
};

struct recgpt_dataset {
  recgpt::data::SplitDataset value;
};

struct recgpt_model {
  recgpt::model::ModelParams<float> value;
};

namespace {

thread_local std::string last_error;

recgpt_status status_for(recgpt::ErrorKind kind) {
  using recgpt::ErrorKind;
  switch (kind) {
    case ErrorKind::kConfig: return RECGPT_ERR_CONFIG;
    case ErrorKind::kData:
    case ErrorKind::kIndex:
    case ErrorKind::kDimension: return RECGPT_ERR_DATA;
    case ErrorKind::kNumerical: return RECGPT_ERR_NUMERIC;
    case ErrorKind::kIo: return RECGPT_ERR_IO;
    case ErrorKind::kExists: return RECGPT_ERR_EXISTS;
    case ErrorKind::kStale: return RECGPT_ERR_STALE;
  }
  return RECGPT_ERR_INTERNAL;
}

template <typename F>
recgpt_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return RECGPT_OK;
  } catch (const recgpt::Error& e) {
    last_error = e.what();
    return status_for(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return RECGPT_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return RECGPT_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return RECGPT_ERR_INTERNAL;
  }
}

recgpt_status bad_argument(const char* what) {
  last_error = what;
  return RECGPT_ERR_ARGUMENT;
}

// Copies s into buf when it fits; reports the needed size either way.
recgpt_status copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (cap == 0 && !buf) return RECGPT_OK;
  if (!buf || cap < s.size() + 1) return bad_argument("output buffer too small");
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return RECGPT_OK;
}

}  // namespace

extern "C" {

const char* recgpt_version(void) { return "1.0.0"; }

const char* recgpt_last_error(void) { return last_error.c_str(); }

recgpt_status recgpt_config_new(recgpt_config** out) {
  if (!out) return bad_argument("out is null");
  return guarded([&] { *out = new recgpt_config{}; });
}

recgpt_status recgpt_config_load(const char* path, recgpt_config** out) {
  if (!path || !out) return bad_argument("path or out is null");
  *out = nullptr;
  return guarded([&] { *out = new recgpt_config{recgpt::pipeline::RunConfig::load(path)}; });
}

recgpt_status recgpt_config_set(recgpt_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return bad_argument("null argument");
  return guarded([&] { cfg->value.set(key, value); });
}

recgpt_status recgpt_config_get(const recgpt_config* cfg, const char* key, char* buf, size_t cap,
                                size_t* needed) {
  if (!cfg || !key) return bad_argument("null argument");
  std::string v;
  const auto st = guarded([&] { v = cfg->value.get(key); });
  if (st != RECGPT_OK) return st;
  return copy_out(v, buf, cap, needed);
}

recgpt_status recgpt_config_hash(const recgpt_config* cfg, char* buf, size_t cap) {
  if (!cfg || !buf) return bad_argument("null argument");
  return copy_out(cfg->value.hash(), buf, cap, nullptr);
}

void recgpt_config_free(recgpt_config* cfg) { delete cfg; }

recgpt_status recgpt_stage_from_name(const char* name, recgpt_stage* out) {
  if (!name || !out) return bad_argument("null argument");
  const auto s = recgpt::pipeline::parse_stage(name);
  if (!s) {
    last_error = std::string("unknown stage '") + name + "'";
    return RECGPT_ERR_CONFIG;
  }
  *out = static_cast<recgpt_stage>(*s);
  return RECGPT_OK;
}

recgpt_status recgpt_run_stage(const recgpt_config* cfg, recgpt_stage stage, int force,
                               recgpt_log_fn log, void* user_data) {
  if (!cfg) return bad_argument("config is null");
  if (stage < RECGPT_STAGE_PREPROCESS || stage > RECGPT_STAGE_SWEEP) {
    return bad_argument("unknown stage");
  }
  return guarded([&] {
    recgpt::pipeline::StageOptions opts;
    opts.force = force != 0;
    if (log) opts.log = [log, user_data](const std::string& msg) { log(msg.c_str(), user_data); };
    recgpt::pipeline::run_stage(cfg->value, static_cast<recgpt::pipeline::Stage>(stage), opts);
  });
}

recgpt_status recgpt_run_dir(const recgpt_config* cfg, char* buf, size_t cap, size_t* needed) {
  if (!cfg) return bad_argument("config is null");
  return copy_out(recgpt::pipeline::run_directory(cfg->value).string(), buf, cap, needed);
}

recgpt_status recgpt_dataset_load(const char* path, recgpt_dataset** out) {
  if (!path || !out) return bad_argument("path or out is null");
  *out = nullptr;
  return guarded([&] {
    const auto c = recgpt::pipeline::Container::load(path);
    *out = new recgpt_dataset{recgpt::pipeline::dataset_from(c)};
  });
}

size_t recgpt_dataset_num_users(const recgpt_dataset* ds) { return ds ? ds->value.num_users() : 0; }

size_t recgpt_dataset_num_items(const recgpt_dataset* ds) { return ds ? ds->value.num_items() : 0; }

recgpt_status recgpt_dataset_stats(const recgpt_dataset* ds, recgpt_stats* out) {
  if (!ds || !out) return bad_argument("null argument");
  const auto s = recgpt::data::compute_stats(ds->value);
  *out = {s.users, s.items, s.actions, s.avg_length, s.sparsity};
  return RECGPT_OK;
}

recgpt_status recgpt_dataset_sequence(const recgpt_dataset* ds, int32_t user, int32_t* items,
                                      size_t cap, size_t* length) {
  if (!ds || !length) return bad_argument("null argument");
  if (user < 0 || static_cast<size_t>(user) >= ds->value.num_users()) {
    last_error = "user index out of range";
    return RECGPT_ERR_DATA;
  }
  const auto seq = ds->value.full_sequence(user);
  *length = seq.size();
  if (items) {
    for (size_t i = 0; i < seq.size() && i < cap; ++i) items[i] = seq[i];
  }
  return RECGPT_OK;
}

void recgpt_dataset_free(recgpt_dataset* ds) { delete ds; }

recgpt_status recgpt_model_load(const char* path, recgpt_model** out) {
  if (!path || !out) return bad_argument("path or out is null");
  *out = nullptr;
  return guarded([&] {
    const auto c = recgpt::pipeline::Container::load(path);
    *out = new recgpt_model{recgpt::pipeline::params_from(c)};
  });
}

size_t recgpt_model_num_items(const recgpt_model* model) {
  return model ? model->value.dims.num_items : 0;
}

recgpt_status recgpt_model_recall(const recgpt_model* model, int32_t user, const int32_t* items,
                                  const int32_t* segments, size_t length, size_t m, size_t n,
                                  recgpt_scorer scorer, int32_t* out_items, float* out_scores,
                                  int32_t* out_provenance) {
  if (!model || !items || !out_items) return bad_argument("null argument");
  if (length == 0) return bad_argument("empty input sequence");
  if (scorer != RECGPT_SCORER_TIED_EMBEDDING && scorer != RECGPT_SCORER_OUTPUT_LAYER) {
    return bad_argument("unknown scorer");
  }
  return guarded([&] {
    recgpt::data::TaggedSequence input;
    for (size_t i = 0; i < length; ++i) {
      input.items.push_back(items[i]);
      const int32_t seg = segments ? segments[i] : 0;
      if (seg != 0 && seg != 1) throw recgpt::DataError("segment tags must be 0 or 1");
      input.segments.push_back(static_cast<recgpt::Segment>(seg));
    }
    const auto which = scorer == RECGPT_SCORER_TIED_EMBEDDING
                           ? recgpt::model::Scorer::kTiedEmbedding
                           : recgpt::model::Scorer::kOutputLayer;
    const auto r = recgpt::recall::recall_two_step(model->value, user, input, m + n, m, n, which);
    for (size_t i = 0; i < r.items.size(); ++i) {
      out_items[i] = r.items[i];
      if (out_scores) out_scores[i] = r.scores[i];
      if (out_provenance) out_provenance[i] = static_cast<int32_t>(r.provenance[i]);
    }
  });
}

void recgpt_model_free(recgpt_model* model) { delete model; }

recgpt_status recgpt_checkpoint_verify(const char* path) {
  if (!path) return bad_argument("path is null");
  return guarded([&] { recgpt::pipeline::Container::load(path); });
}

}  // extern "C"

#ifndef RECGPT_RECGPT_H
#define RECGPT_RECGPT_H

#include <stddef.h>
#include <stdint.h>

#if defined(RECGPT_BUILDING_LIBRARY)
#define RECGPT_API __attribute__((visibility("default")))
#else
#define RECGPT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum recgpt_status {
  RECGPT_OK = 0,
  RECGPT_ERR_INTERNAL = 1,
  RECGPT_ERR_CONFIG = 2,
  RECGPT_ERR_DATA = 3,
  RECGPT_ERR_NUMERIC = 4,
  RECGPT_ERR_IO = 5,
  RECGPT_ERR_EXISTS = 6,
  RECGPT_ERR_STALE = 7,
  RECGPT_ERR_ARGUMENT = 8
} recgpt_status;

typedef enum recgpt_stage {
  RECGPT_STAGE_PREPROCESS = 0,
  RECGPT_STAGE_PRETRAIN = 1,
  RECGPT_STAGE_GEN_PROMPTS = 2,
  RECGPT_STAGE_TUNE = 3,
  RECGPT_STAGE_EVAL = 4,
  RECGPT_STAGE_SWEEP = 5
} recgpt_stage;

typedef enum recgpt_scorer {
  RECGPT_SCORER_TIED_EMBEDDING = 0,
  RECGPT_SCORER_OUTPUT_LAYER = 1
} recgpt_scorer;

typedef struct recgpt_config recgpt_config;
typedef struct recgpt_dataset recgpt_dataset;
typedef struct recgpt_model recgpt_model;

typedef struct recgpt_stats {
  size_t users;
  size_t items;
  size_t actions;
  double avg_length;
  double sparsity;
} recgpt_stats;

typedef void (*recgpt_log_fn)(const char* message, void* user_data);

RECGPT_API const char* recgpt_version(void);

/* Message of the last failed call on this thread ("" if none). */
RECGPT_API const char* recgpt_last_error(void);

/* Configuration: defaults, file loading, key/value access. */
RECGPT_API recgpt_status recgpt_config_new(recgpt_config** out);
RECGPT_API recgpt_status recgpt_config_load(const char* path, recgpt_config** out);
RECGPT_API recgpt_status recgpt_config_set(recgpt_config* cfg, const char* key, const char* value);
/* Copies the normalized value (NUL-terminated) into buf; *needed receives the
   required size including the terminator. buf may be NULL when cap is 0. */
RECGPT_API recgpt_status recgpt_config_get(const recgpt_config* cfg, const char* key, char* buf,
                                           size_t cap, size_t* needed);
/* 16 hex digits plus terminator: cap must be at least 17. */
RECGPT_API recgpt_status recgpt_config_hash(const recgpt_config* cfg, char* buf, size_t cap);
RECGPT_API void recgpt_config_free(recgpt_config* cfg);

/* Pipeline stages. */
RECGPT_API recgpt_status recgpt_stage_from_name(const char* name, recgpt_stage* out);
RECGPT_API recgpt_status recgpt_run_stage(const recgpt_config* cfg, recgpt_stage stage, int force,
                                          recgpt_log_fn log, void* user_data);
RECGPT_API recgpt_status recgpt_run_dir(const recgpt_config* cfg, char* buf, size_t cap,
                                        size_t* needed);

/* Preprocessed dataset artifacts. */
RECGPT_API recgpt_status recgpt_dataset_load(const char* path, recgpt_dataset** out);
RECGPT_API size_t recgpt_dataset_num_users(const recgpt_dataset* ds);
RECGPT_API size_t recgpt_dataset_num_items(const recgpt_dataset* ds);
RECGPT_API recgpt_status recgpt_dataset_stats(const recgpt_dataset* ds, recgpt_stats* out);
/* Copies up to cap item ids of user's full sequence; *length receives its size. */
RECGPT_API recgpt_status recgpt_dataset_sequence(const recgpt_dataset* ds, int32_t user,
                                                 int32_t* items, size_t cap, size_t* length);
RECGPT_API void recgpt_dataset_free(recgpt_dataset* ds);

/* Model checkpoints and recall. */
RECGPT_API recgpt_status recgpt_model_load(const char* path, recgpt_model** out);
RECGPT_API size_t recgpt_model_num_items(const recgpt_model* model);
/* Two-step recall of m + n items (n = 0 gives one-step recall). segments may
   be NULL for an all-REAL input (0 = REAL, 1 = PROMPT). Output arrays hold
   m + n entries; provenance is 1 for the first pass, 2 for the second. */
RECGPT_API recgpt_status recgpt_model_recall(const recgpt_model* model, int32_t user,
                                             const int32_t* items, const int32_t* segments,
                                             size_t length, size_t m, size_t n,
                                             recgpt_scorer scorer, int32_t* out_items,
                                             float* out_scores, int32_t* out_provenance);
RECGPT_API void recgpt_model_free(recgpt_model* model);

/* Loads and validates any checkpoint file. */
RECGPT_API recgpt_status recgpt_checkpoint_verify(const char* path);

#ifdef __cplusplus
}
#endif

#endif

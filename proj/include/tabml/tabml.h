#ifndef TABML_TABML_H
#define TABML_TABML_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(TABML_BUILDING_LIBRARY)
#define TABML_API __attribute__((visibility("default")))
#else
#define TABML_API
#endif

typedef enum tabml_status {
  TABML_OK = 0,
  TABML_ERR_INVALID_ARGUMENT = 1,
  TABML_ERR_PARSE = 2,
  TABML_ERR_CONFIG = 3,
  TABML_ERR_IO = 4,
  TABML_ERR_JOB_FAILED = 5,
  TABML_ERR_INTERNAL = 6
} tabml_status;

typedef enum tabml_log_level { TABML_LOG_QUIET = 0, TABML_LOG_WARNING = 1, TABML_LOG_INFO = 2 } tabml_log_level;

/* Pipeline settings. Created by tabml_config_load / tabml_config_parse,
   released by tabml_config_free. */
typedef struct tabml_config tabml_config;

typedef struct tabml_run_summary {
  size_t executed;
  size_t skipped;
  size_t failed;
} tabml_run_summary;

TABML_API const char* tabml_version(void);

/* Message of the last failed call on this thread; "" if none. */
TABML_API const char* tabml_last_error(void);

TABML_API void tabml_set_log_level(tabml_log_level level);

TABML_API tabml_status tabml_config_load(const char* path, tabml_config** out);
TABML_API tabml_status tabml_config_parse(const char* text, tabml_config** out);
/* Flag-style override; wins over the file. */
TABML_API tabml_status tabml_config_set(tabml_config* config, const char* key, const char* value);
/* Owned by the handle; valid until the next call on it. */
TABML_API const char* tabml_config_experiment_dir(tabml_config* config);
TABML_API void tabml_config_free(tabml_config* config);

/* phase 0 runs every phase; max_jobs 0 uses the config value.
   TABML_ERR_JOB_FAILED when a job failed; the manifest is written either way. */
TABML_API tabml_status tabml_run(const tabml_config* config, int phase, int max_jobs, tabml_run_summary* summary);

/* dataset may be NULL when the experiment has a single dataset. */
TABML_API tabml_status tabml_apply(const char* experiment_dir, const char* data_csv, const char* dataset,
                                   int predictions_only, int max_jobs, size_t* models_applied);

/* Writes the CSV and a metadata sidecar <out minus .csv>.meta.json. */
TABML_API tabml_status tabml_simulate_mux(int total_bits, size_t n_instances, uint64_t seed, const char* out_csv);
TABML_API tabml_status tabml_simulate_snp(const char* architecture, double heritability, size_t n_features,
                                          size_t n_instances, uint64_t seed, const char* out_csv);

#ifdef __cplusplus
}
#endif

#endif

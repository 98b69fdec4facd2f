/* C interface to the self-report experiment library.
 *
 * Every function returns an sr_status. On failure, sr_last_error() holds a
 * message for the calling thread until its next failing call. Strings
 * returned through char** out-parameters are owned by the caller and must be
 * released with sr_string_free().
 */
#ifndef SELFREPORT_SELFREPORT_H
#define SELFREPORT_SELFREPORT_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(SELFREPORT_BUILDING_LIBRARY)
#define SR_API __attribute__((visibility("default")))
#else
#define SR_API
#endif

typedef enum sr_status {
  SR_OK = 0,
  SR_ERR_DOMAIN = 1,    /* invalid values or violated preconditions */
  SR_ERR_CONFIG = 2,    /* missing or inconsistent configuration */
  SR_ERR_USAGE = 3,     /* bad arguments, unknown stage or setting */
  SR_ERR_TRANSPORT = 4, /* backend or network failure */
  SR_ERR_IO = 5,        /* filesystem failure */
  SR_ERR_INTEGRITY = 6, /* run directory digest mismatch */
  SR_ERR_INTERNAL = 7
} sr_status;

typedef struct sr_config sr_config;
typedef struct sr_run sr_run;

SR_API const char* sr_version(void);
SR_API const char* sr_last_error(void);
SR_API const char* sr_status_name(sr_status status);
/* 0 success, 1 domain/validation, 2 usage, 3 backend/transport. */
SR_API int sr_exit_code(sr_status status);

SR_API sr_status sr_config_create(sr_config** out);
SR_API void sr_config_destroy(sr_config* config);
/* Replaces the configuration with the contents of a TOML file. */
SR_API sr_status sr_config_load_toml(sr_config* config, const char* path);
/* Loads the configuration stored in a run directory; *found is set to 0 when
 * the directory holds none and the configuration is left unchanged. */
SR_API sr_status sr_config_load_run(sr_config* config, const char* run_dir, int* found);
/* "section.key" = value, e.g. ("backend.max_in_flight", "4"). */
SR_API sr_status sr_config_set(sr_config* config, const char* key, const char* value);
SR_API sr_status sr_config_to_toml(const sr_config* config, char** out);

/* Opens (creating if needed) a run directory and verifies every recorded
 * output against its digest. `command` is recorded with each stage. */
SR_API sr_status sr_run_open(const char* run_dir, const sr_config* config, const char* command, sr_run** out);
SR_API void sr_run_close(sr_run* run);

/* Stage names: configure, contexts, gen-weights, dataset-preference,
 * dataset-introspection, verify, elicit-reports, crossfold, transfer,
 * analyze, simulate. Prerequisite stages run first when needed. *stage_json
 * (optional) receives the stage record plus a "reused" flag. */
SR_API sr_status sr_run_stage(sr_run* run, const char* stage, char** stage_json);
/* Fits a choices file (path relative to the run directory). */
SR_API sr_status sr_run_estimate(sr_run* run, const char* choices_path, char** stage_json);
/* Reads a file inside the run directory. */
SR_API sr_status sr_run_read(sr_run* run, const char* path, char** content);

/* kind: "preference" or "introspection". *job_json receives the job. */
SR_API sr_status sr_finetune_submit(const sr_config* config, const char* dataset_path, const char* kind,
                                    char** job_json);
SR_API sr_status sr_finetune_status(const sr_config* config, const char* job_id, char** job_json);

SR_API void sr_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif

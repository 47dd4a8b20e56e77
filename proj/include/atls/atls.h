#ifndef ATLS_ATLS_H
#define ATLS_ATLS_H

#include <stddef.h>

#if defined(_WIN32)
#if defined(ATLS_BUILDING_LIBRARY)
#define ATLS_API __declspec(dllexport)
#else
#define ATLS_API __declspec(dllimport)
#endif
#else
#define ATLS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum atls_status {
  ATLS_OK = 0,
  ATLS_ERR_INVALID_ARGUMENT = 1, /* null handle, bad index, out-of-range value */
  ATLS_ERR_SCHEMA = 2,           /* config does not match the schema (message names the path) */
  ATLS_ERR_SEMANTIC = 3,         /* config values contradict each other */
  ATLS_ERR_IO = 4,               /* unreadable or unwritable file */
  ATLS_ERR_DOMAIN = 5,           /* geometry, supports or load regions cannot form a problem */
  ATLS_ERR_CONVERGENCE = 6,      /* an iterative solver gave up */
  ATLS_ERR_NUMERIC = 7,          /* any other analysis failure */
  ATLS_ERR_INTERNAL = 8
} atls_status;

typedef enum atls_termination {
  ATLS_TERM_STEP_COLLAPSED = 0,
  ATLS_TERM_INFEASIBLE_AT_FIRST_LEVEL = 1,
  ATLS_TERM_MINIMUM_VOLUME = 2,
  ATLS_TERM_ITERATION_LIMIT = 3,
  ATLS_TERM_CANCELLED = 4
} atls_termination;

typedef enum atls_log_level { ATLS_LOG_INFO = 0, ATLS_LOG_WARNING = 1 } atls_log_level;

typedef struct atls_config atls_config;
typedef struct atls_run atls_run;

typedef struct atls_constraint_progress {
  const char* id;
  double q_over_q0;
  double g; /* <= 0 when satisfied */
  double mu;
  double gamma;
  int hard_violated;
} atls_constraint_progress;

/* One outer iteration; pointers are valid only during the callback. */
typedef struct atls_iteration {
  int k;
  double v;
  double dv;
  int accepted;
  const char* outcome; /* baseline, accepted, hard_violation, inner_not_converged */
  double J;
  int inner_iterations;
  size_t constraint_count;
  const atls_constraint_progress* constraints;
} atls_iteration;

typedef void (*atls_progress_fn)(const atls_iteration* iteration, void* user);
/* Polled between outer iterations; nonzero stops the run cleanly. */
typedef int (*atls_cancel_fn)(void* user);
typedef void (*atls_log_fn)(atls_log_level level, const char* message, void* user);

ATLS_API const char* atls_version(void);
ATLS_API const char* atls_status_string(atls_status status);

/* Message of the last failed call on this thread, "" if none. */
ATLS_API const char* atls_last_error(void);

/* Frees strings returned through char** out parameters. */
ATLS_API void atls_string_free(char* s);

/* Routes library messages; NULL restores the default (warnings to stderr). */
ATLS_API void atls_set_log_callback(atls_log_fn fn, void* user);

/* Parse, default and validate a JSON run configuration, including the
   geometry, supports and load regions it describes. */
ATLS_API atls_status atls_config_load(const char* path, atls_config** out);
ATLS_API atls_status atls_config_parse(const char* json_text, atls_config** out);
ATLS_API void atls_config_free(atls_config* config);

/* Fully defaulted config as JSON. */
ATLS_API atls_status atls_config_echo(const atls_config* config, char** out_json);
ATLS_API atls_status atls_config_set_threads(atls_config* config, int threads);
ATLS_API atls_status atls_config_set_output_dir(atls_config* config, const char* directory);
ATLS_API atls_status atls_config_output_dir(const atls_config* config, char** out);

/* Runs the optimizer and writes every artifact into the output directory.
   progress, cancel and user may be NULL. */
ATLS_API atls_status atls_run_start(const atls_config* config, atls_progress_fn progress, atls_cancel_fn cancel,
                                    void* user, atls_run** out);
ATLS_API void atls_run_free(atls_run* run);
ATLS_API atls_termination atls_run_termination(const atls_run* run);
ATLS_API double atls_run_volume_fraction(const atls_run* run);
ATLS_API int atls_run_accepted_steps(const atls_run* run);
ATLS_API atls_status atls_run_summary_json(const atls_run* run, char** out_json);

/* Full-design analyses:
   {"cases": [{"id", "J0", "sigma0", "P0"}], "lambda0", "constraints": [{"id", "q0"}]}
   P0 is null when the case compresses nothing. */
ATLS_API atls_status atls_analyze(const atls_config* config, char** out_json);

/* Re-exports artifacts from a file written by a run (.topo, .vtk, .obj, .csv,
   summary .json). out_json receives the list of written paths; may be NULL. */
ATLS_API atls_status atls_export(const atls_config* config, const char* source, const char* out_dir,
                                 char** out_json);

#ifdef __cplusplus
}
#endif

#endif

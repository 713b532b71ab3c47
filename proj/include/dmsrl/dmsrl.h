#ifndef DMSRL_DMSRL_H
#define DMSRL_DMSRL_H

/* C interface to the dynamic multimedia system learning library.
 *
 * Every function that can fail returns a dmsrl_status; on failure the
 * calling thread's message is available from dmsrl_last_error() until the
 * next failing call on that thread. Handles are not thread-safe: use one
 * handle per thread or serialize access. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define DMSRL_API __declspec(dllexport)
#else
#define DMSRL_API __attribute__((visibility("default")))
#endif

typedef enum dmsrl_status {
    DMSRL_OK = 0,
    DMSRL_ERR_CONFIG = 1,           /* bad configuration text or values */
    DMSRL_ERR_RUNTIME = 2,          /* failure while preparing or running */
    DMSRL_ERR_INVALID_ARGUMENT = 3, /* null handle, index out of range, ... */
    DMSRL_ERR_IO = 4                /* unreadable input or unwritable output */
} dmsrl_status;

typedef struct dmsrl_experiment dmsrl_experiment;

typedef struct dmsrl_run_summary {
    uint64_t seed;
    uint64_t slots;
    double avg_reward;
    double avg_power;
    double avg_rate_distortion;
    double avg_gain;
    uint64_t overflows;
    double final_weighted_error; /* NaN when no oracle was computed */
} dmsrl_run_summary;

DMSRL_API const char* dmsrl_version(void);
DMSRL_API const char* dmsrl_last_error(void);

/* trace, debug, info, warn, error, critical or off. The DMSRL_LOG_LEVEL
 * environment variable is applied when the first handle is created. */
DMSRL_API dmsrl_status dmsrl_set_log_level(const char* level);

DMSRL_API dmsrl_status dmsrl_experiment_load(const char* path, dmsrl_experiment** out);
/* base_dir resolves relative trace paths; NULL means the working directory. */
DMSRL_API dmsrl_status dmsrl_experiment_load_string(const char* text, const char* base_dir, dmsrl_experiment** out);
DMSRL_API void dmsrl_experiment_free(dmsrl_experiment* exp);

DMSRL_API dmsrl_status dmsrl_experiment_set_seeds(dmsrl_experiment* exp, const uint64_t* seeds, size_t count);
/* "short", "medium", "long" or a positive integer. */
DMSRL_API dmsrl_status dmsrl_experiment_set_horizon(dmsrl_experiment* exp, const char* horizon);
/* 0 = one worker per hardware thread (the default). */
DMSRL_API dmsrl_status dmsrl_experiment_set_threads(dmsrl_experiment* exp, unsigned threads);
DMSRL_API const char* dmsrl_experiment_label(const dmsrl_experiment* exp);
/* Resolved configuration as INI text; valid until the handle changes. */
DMSRL_API const char* dmsrl_experiment_resolved_config(dmsrl_experiment* exp);

/* Runs every seed. With a non-NULL out_dir the run artifacts are written there. */
DMSRL_API dmsrl_status dmsrl_experiment_run(dmsrl_experiment* exp, const char* out_dir);
DMSRL_API size_t dmsrl_experiment_result_count(const dmsrl_experiment* exp);
DMSRL_API dmsrl_status dmsrl_experiment_result(const dmsrl_experiment* exp, size_t index, dmsrl_run_summary* out);

/* Solves the model by value iteration and writes the policy, values and
 * stationary distribution as CSV under out_dir. */
DMSRL_API dmsrl_status dmsrl_experiment_oracle(dmsrl_experiment* exp, const char* out_dir);

/* Runs each experiment into out_dir/<label>/ and writes the comparison table
 * and overlaid curves. All experiments must describe the same system. Results
 * become available on each handle. */
DMSRL_API dmsrl_status dmsrl_compare(dmsrl_experiment* const* exps, size_t count, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif

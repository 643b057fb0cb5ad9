#ifndef PEGP_PEGP_H
#define PEGP_PEGP_H

#include <stddef.h>
#include <stdint.h>

#if defined(PEGP_BUILDING_LIBRARY)
#define PEGP_API __attribute__((visibility("default")))
#else
#define PEGP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pegp_status {
  PEGP_OK = 0,
  PEGP_ERR_INVALID_ARGUMENT = 1,
  PEGP_ERR_DIMENSION = 2,
  PEGP_ERR_NUMERICAL = 3, /* range, accuracy, domain, causality, grid */
  PEGP_ERR_NOT_POSITIVE_DEFINITE = 4,
  PEGP_ERR_DIVERGENCE = 5,
  PEGP_ERR_IO = 6,
  PEGP_ERR_NOT_FOUND = 7,
  PEGP_ERR_CONFIG = 8,
  PEGP_ERR_USAGE = 9,
  PEGP_ERR_ALIGNMENT = 10,
  PEGP_ERR_INTERNAL = 11
} pegp_status;

typedef struct pegp_config pegp_config;
typedef struct pegp_model pegp_model;

PEGP_API const char* pegp_version(void);

/* Message of the last failed call on this thread; "" after a success. */
PEGP_API const char* pegp_last_error(void);

PEGP_API const char* pegp_status_name(pegp_status status);

/* Process exit code for a status: 0 ok, 1 usage, 2 I/O, 3 numerical. */
PEGP_API int pegp_exit_code(pegp_status status);

/* Configuration --------------------------------------------------------- */

PEGP_API pegp_status pegp_config_default(pegp_config** out);
PEGP_API pegp_status pegp_config_load(const char* path, pegp_config** out);
PEGP_API pegp_status pegp_config_set(pegp_config* cfg, const char* key, const char* value);

/* Copies the value as text into buf (always NUL-terminated when len > 0).
 * *needed receives the full length excluding the terminator. */
PEGP_API pegp_status pegp_config_get(const pegp_config* cfg, const char* key, char* buf, size_t len, size_t* needed);
PEGP_API pegp_status pegp_config_save(const pegp_config* cfg, const char* path);
PEGP_API void pegp_config_free(pegp_config* cfg);

/* Commands -------------------------------------------------------------- */

PEGP_API pegp_status pegp_generate(const pegp_config* cfg);

/* resume_checkpoint may be NULL. On divergence *diverged_iteration holds the
 * failing iteration (otherwise -1); both out pointers may be NULL. */
PEGP_API pegp_status pegp_train(const pegp_config* cfg, const char* resume_checkpoint, int64_t* final_iteration,
                                int64_t* diverged_iteration);

/* *aligned_rmse is NaN when no ground truth is available for the sequence. */
PEGP_API pegp_status pegp_reconstruct(const pegp_config* cfg, const char* checkpoint, int sequence,
                                      double* aligned_rmse);

PEGP_API pegp_status pegp_extrapolate(const pegp_config* cfg, const char* const* checkpoints, size_t count,
                                      double horizon, int* physics_wins, int* se_wins);

PEGP_API pegp_status pegp_kernel_heatmap(const pegp_config* cfg);

/* Trained models -------------------------------------------------------- */

PEGP_API pegp_status pegp_model_load(const char* checkpoint, pegp_model** out);
PEGP_API void pegp_model_free(pegp_model* model);

/* "physics" or "se-baseline"; NULL for a NULL handle. */
PEGP_API const char* pegp_model_kernel(const pegp_model* model);
PEGP_API int64_t pegp_model_iteration(const pegp_model* model);
PEGP_API int pegp_model_latent_dim(const pegp_model* model);

/* Posterior of a sequence file over (0, horizon]. mean and std receive
 * times * latent_dim values each, dimension-major; *count receives that
 * number even when capacity is too small (then PEGP_ERR_DIMENSION). */
PEGP_API pegp_status pegp_model_posterior(const pegp_model* model, const char* sequence_file, double horizon,
                                          double* mean, double* std_dev, size_t capacity, size_t* count);

#ifdef __cplusplus
}
#endif

#endif

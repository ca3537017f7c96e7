/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#ifndef LPM_H
#define LPM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum LpmStatus {
  LPM_STATUS_OK = 0,
  LPM_STATUS_NULL_POINTER = 1,
  LPM_STATUS_DIMENSION_MISMATCH = 2,
  LPM_STATUS_NON_FINITE = 3,
  LPM_STATUS_INVALID_ACTION = 4,
  LPM_STATUS_INVALID_CONFIG = 5,
  LPM_STATUS_INVALID_GRID = 6,
  LPM_STATUS_PARSE = 7,
  LPM_STATUS_CHECKPOINT = 8,
  LPM_STATUS_IO = 9,
  LPM_STATUS_INVALID_UTF8 = 10,
  /*
   The oracle found no admissible reference point for the request.
   */
  LPM_STATUS_NO_ADMISSIBLE_THETA = 11,
  LPM_STATUS_PANIC = 12,
} LpmStatus;

/*
 Opaque grid maze.
 */
typedef struct LpmMaze LpmMaze;

/*
 Opaque learning-progress monitor.
 */
typedef struct LpmMonitor LpmMonitor;

/*
 Scalar part of one maze transition; the observation is copied separately.
 */
typedef struct LpmStep {
  double extrinsic_reward;
  bool done;
  size_t latent_state_id;
} LpmStep;

/*
 Oracle rewards for one parameter grid.
 */
typedef struct LpmOracleResult {
  /*
   KL divergence from posterior to prior.
   */
  double information_gain;
  /*
   Prior-expected log-MSE minus the log-MSE at the reference point.
   */
  double expected_reward;
  size_t theta_index;
  /*
   True when every built-in consistency check passed.
   */
  bool checks_passed;
} LpmOracleResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the calling thread's last error message into `buf` as a
 NUL-terminated string, truncating to `len - 1` bytes. Returns the buffer
 size needed for the whole message including the terminator. An empty
 message means the last call succeeded.

 # Safety
 `buf` must be null or valid for `len` writable bytes.
 */
size_t lpm_last_error_message(char *buf, size_t len);

/*
 `extrinsic + beta * intrinsic`.
 */
double lpm_combined_reward(double extrinsic, double intrinsic, double beta);

/*
 Creates a monitor. `config_toml` holds monitor settings such as
 `queue_size = 100`; pass null for the defaults.

 # Safety
 `config_toml` must be null or a NUL-terminated string; `out` must be
 valid for one write.
 */
enum LpmStatus lpm_monitor_new(const char *config_toml,
                               size_t obs_dim,
                               size_t action_count,
                               uint64_t seed,
                               struct LpmMonitor **out);

/*
 Frees a monitor; null is ignored.

 # Safety
 `monitor` must come from this library and not be used afterwards.
 */
void lpm_monitor_free(struct LpmMonitor *monitor);

/*
 Scores one transition and stores it for training.

 # Safety
 `obs` and `next_obs` must point to `obs_len` and `next_len` doubles;
 `reward` must be valid for one write.
 */
enum LpmStatus lpm_monitor_observe(struct LpmMonitor *monitor,
                                   const double *obs,
                                   size_t obs_len,
                                   size_t action,
                                   const double *next_obs,
                                   size_t next_len,
                                   double *reward);

/*
 Ends one environment step; `updated` tells whether the models trained.

 # Safety
 `updated` must be null or valid for one write.
 */
enum LpmStatus lpm_monitor_end_step(struct LpmMonitor *monitor, bool *updated);

/*
 Number of completed model updates.

 # Safety
 `tau` must be valid for one write.
 */
enum LpmStatus lpm_monitor_tau(struct LpmMonitor *monitor, uint64_t *tau);

/*
 Writes a JSON checkpoint to `path`.

 # Safety
 `path` must be a NUL-terminated string.
 */
enum LpmStatus lpm_monitor_save(struct LpmMonitor *monitor, const char *path);

/*
 Restores a monitor from a checkpoint written by `lpm_monitor_save`.

 # Safety
 `path` must be a NUL-terminated string; `out` must be valid for one write.
 */
enum LpmStatus lpm_monitor_load(const char *path, struct LpmMonitor **out);

/*
 Creates a maze. `config_toml` holds maze settings such as
 `noise_mode = "action_noise"`; pass null for the defaults.

 # Safety
 `config_toml` must be null or a NUL-terminated string; `out` must be
 valid for one write.
 */
enum LpmStatus lpm_maze_new(const char *config_toml, struct LpmMaze **out);

/*
 Frees a maze; null is ignored.

 # Safety
 `maze` must come from this library and not be used afterwards.
 */
void lpm_maze_free(struct LpmMaze *maze);

/*
 Observation length, action count and latent state count. Any output may
 be null.

 # Safety
 Non-null outputs must be valid for one write.
 */
enum LpmStatus lpm_maze_dims(struct LpmMaze *maze,
                             size_t *obs_dim,
                             size_t *action_count,
                             size_t *state_count);

/*
 Starts a new episode and copies the first observation into `obs`, whose
 length must equal the maze's observation length.

 # Safety
 `obs` must be valid for `obs_len` writes and `step` for one.
 */
enum LpmStatus lpm_maze_reset(struct LpmMaze *maze,
                              uint64_t seed,
                              struct LpmStep *step,
                              double *obs,
                              size_t obs_len);

/*
 Applies one action (0 forward, 1 turn left, 2 turn right, 3 idle).

 # Safety
 As for `lpm_maze_reset`.
 */
enum LpmStatus lpm_maze_step(struct LpmMaze *maze,
                             size_t action,
                             struct LpmStep *step,
                             double *obs,
                             size_t obs_len);

/*
 Information gain and expected reward for a grid of `n` candidate models.
 With `submaximal` false the reference point is the exact MLE; otherwise
 it is the best strictly worse point that still meets the admissibility
 condition, and `LPM_STATUS_NO_ADMISSIBLE_THETA` is returned when none does.

 # Safety
 `prior` and `mse` must point to `n` doubles; `out` must be valid for one
 write.
 */
enum LpmStatus lpm_oracle_rewards(const double *prior,
                                  const double *mse,
                                  size_t n,
                                  double c,
                                  bool submaximal,
                                  struct LpmOracleResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LPM_H */

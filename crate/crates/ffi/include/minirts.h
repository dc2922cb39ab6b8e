#ifndef MINIRTS_H
#define MINIRTS_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Floats in one spatial observation (channels x 32 x 32, channel-major).
 */
#define MRTS_SPATIAL_LEN 32768

/**
 * Floats per unit feature row.
 */
#define MRTS_UNIT_FEATURES 31

typedef enum MrtsStatus {
  MRTS_STATUS_OK = 0,
  MRTS_STATUS_NULL_POINTER = 1,
  MRTS_STATUS_INVALID_ARGUMENT = 2,
  MRTS_STATUS_BUFFER_TOO_SMALL = 3,
  MRTS_STATUS_EPISODE_FINISHED = 4,
  MRTS_STATUS_GAME_ERROR = 5,
  MRTS_STATUS_IO_ERROR = 6,
  MRTS_STATUS_REPLAY_DIVERGED = 7,
  MRTS_STATUS_PANIC = 8,
} MrtsStatus;

/**
 * An environment: the agent plays side 0 against a scripted bot.
 */
typedef struct MrtsEnv MrtsEnv;

/**
 * One per-unit order. `action_type` uses the engine's action indices:
 * 0 idle, 1 continue, 2 gather, 3 attack, 4 train_unit, 5 build_building,
 * 6 move. `target` is the resource or enemy id, `unit_type` the unit
 * index to train or build, and `x`/`y` the cell for build and move.
 */
typedef struct MrtsAction {
  uint32_t unit;
  uint32_t action_type;
  uint32_t target;
  uint32_t unit_type;
  int32_t x;
  int32_t y;
} MrtsAction;

typedef struct MrtsStepResult {
  float reward;
  bool done;
  uint32_t tick;
  /**
   * -1 ongoing, 0 or 1 for the winning side, 2 for a draw.
   */
  int32_t outcome;
  /**
   * Actions the game refused this step.
   */
  uint32_t rejected;
} MrtsStepResult;

/**
 * One of the agent's own units.
 */
typedef struct MrtsUnit {
  uint32_t id;
  uint32_t unit_type;
  uint32_t hp;
  int32_t x;
  int32_t y;
} MrtsUnit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mrts_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`). Returns the full message length
 * without the terminator; 0 when there is none.
 *
 * # Safety
 * `buf` must point to `len` writable bytes, or be null with `len == 0`.
 */
size_t mrts_last_error_message(char *buf, size_t len);

/**
 * Creates an environment and resets it.
 *
 * `opponent` is a strategy name (`simple`, `medium`, `strong`,
 * `second_base`, `tower_rush`, `peasant_rush`). `frame_skip` 0 picks the
 * default.
 *
 * # Safety
 * `opponent` must be a NUL-terminated string; `out` must be writable.
 */
enum MrtsStatus mrts_env_new(uint64_t seed,
                             const char *opponent,
                             double resource_scaling,
                             uint32_t frame_skip,
                             struct MrtsEnv **out);

/**
 * Releases an environment. Null is ignored.
 *
 * # Safety
 * `env` must come from [`mrts_env_new`] and not be used afterwards.
 */
void mrts_env_free(struct MrtsEnv *env);

/**
 * Applies `n` actions (plus an optional instruction) and advances one
 * agent step. Rejected actions are counted, not fatal.
 *
 * # Safety
 * `env` must be live; `actions` must point to `n` items (or be null with
 * `n == 0`); `instruction` is null or NUL-terminated; `out` is writable.
 */
enum MrtsStatus mrts_env_step(struct MrtsEnv *env,
                              const struct MrtsAction *actions,
                              size_t n,
                              const char *instruction,
                              struct MrtsStepResult *out);

/**
 * Current game tick.
 *
 * # Safety
 * `env` must be live and `out` writable.
 */
enum MrtsStatus mrts_env_tick(const struct MrtsEnv *env, uint32_t *out);

/**
 * Copies the latest spatial observation ([`MRTS_SPATIAL_LEN`] floats).
 *
 * # Safety
 * `env` must be live; `buf` must hold `len` floats.
 */
enum MrtsStatus mrts_env_spatial(const struct MrtsEnv *env, float *buf, size_t len);

/**
 * Lists the agent's units. Writes up to `cap` entries and the total count
 * to `count`; returns `BufferTooSmall` when `cap < count`.
 *
 * # Safety
 * `env` must be live; `buf` must hold `cap` items (or be null with
 * `cap == 0`); `count` must be writable.
 */
enum MrtsStatus mrts_env_units(const struct MrtsEnv *env,
                               struct MrtsUnit *buf,
                               size_t cap,
                               size_t *count);

/**
 * Serializes the full latest observation in the binary dump format. Call
 * with `cap == 0` to learn the size through `len`.
 *
 * # Safety
 * `env` must be live; `buf` must hold `cap` bytes (or be null with
 * `cap == 0`); `len` must be writable.
 */
enum MrtsStatus mrts_env_observation_dump(const struct MrtsEnv *env,
                                          uint8_t *buf,
                                          size_t cap,
                                          size_t *len);

/**
 * Re-simulates a replay file and checks every checkpoint. On success
 * `ticks` holds the replay length; a mismatch returns `ReplayDiverged`
 * with the first bad tick in `ticks`.
 *
 * # Safety
 * `path` must be NUL-terminated and `ticks` writable.
 */
enum MrtsStatus mrts_replay_verify(const char *path, uint32_t *ticks);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MINIRTS_H */

#ifndef OPGAN_H
#define OPGAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OpganStatus {
  OPGAN_STATUS_OK = 0,
  OPGAN_STATUS_NULL_POINTER = 1,
  OPGAN_STATUS_CONFIG = 2,
  OPGAN_STATUS_IO = 3,
  OPGAN_STATUS_FORMAT = 4,
  OPGAN_STATUS_INPUT = 5,
  OPGAN_STATUS_DIVERGENCE = 6,
  OPGAN_STATUS_RETRY_EXHAUSTED = 7,
  OPGAN_STATUS_INVALID_UTF8 = 8,
  OPGAN_STATUS_PANIC = 9,
} OpganStatus;

/**
 * Loaded checkpoint and its generator.
 */
typedef struct OpganModel OpganModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads a checkpoint file and stores a new handle in `*out`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum OpganStatus opgan_model_load(const char *path, struct OpganModel **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `model` must come from [`opgan_model_load`] and not be used afterwards.
 */
void opgan_model_free(struct OpganModel *model);

/**
 * Polynomial order Q of the model's generative layers.
 *
 * # Safety
 * Pointers must be valid.
 */
enum OpganStatus opgan_model_order(const struct OpganModel *model, uint32_t *out);

/**
 * Generator and discriminator parameter counts (the latter is 0 for
 * generator-only checkpoints).
 *
 * # Safety
 * Pointers must be valid.
 */
enum OpganStatus opgan_model_param_counts(const struct OpganModel *model,
                                          size_t *generator,
                                          size_t *discriminator);

/**
 * Training sample rate recorded in the checkpoint, or 0 when absent.
 *
 * # Safety
 * Pointers must be valid.
 */
enum OpganStatus opgan_model_sample_rate(const struct OpganModel *model, uint32_t *out);

/**
 * Restores `len` samples from `input` into `output` (which may alias `input`).
 *
 * # Safety
 * `input` and `output` must each hold `len` floats.
 */
enum OpganStatus opgan_restore(const struct OpganModel *model,
                               const float *input,
                               size_t len,
                               float *output);

/**
 * Signal-to-distortion ratio of `estimate` against `reference`, in dB.
 *
 * # Safety
 * Both buffers must hold `len` floats; `out` must be valid.
 */
enum OpganStatus opgan_sdr(const float *reference, const float *estimate, size_t len, double *out);

/**
 * Short-time objective intelligibility of `estimate` against `reference`.
 *
 * # Safety
 * Both buffers must hold `len` floats; `out` must be valid.
 */
enum OpganStatus opgan_stoi(const float *reference,
                            const float *estimate,
                            size_t len,
                            uint32_t sample_rate,
                            double *out);

/**
 * Copies the calling thread's last error message into `buf` (truncated and
 * NUL-terminated) and returns the full message length excluding the NUL.
 * Pass a null `buf` to query the length.
 *
 * # Safety
 * `buf` must be null or point to `buf_len` writable bytes.
 */
size_t opgan_last_error_message(char *buf, size_t buf_len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *opgan_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPGAN_H */

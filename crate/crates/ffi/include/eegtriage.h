#ifndef EEGTRIAGE_H
#define EEGTRIAGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every exported function.
 */
typedef enum EegStatus {
  EEG_STATUS_OK = 0,
  EEG_STATUS_NULL_POINTER = 1,
  EEG_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Malformed EDF, JSON or text input.
   */
  EEG_STATUS_PARSE = 3,
  /**
   * Well-formed input that cannot be processed (missing channels, too short, ...).
   */
  EEG_STATUS_DATA = 4,
  /**
   * Model and feature layout do not match.
   */
  EEG_STATUS_MISMATCH = 5,
  EEG_STATUS_BUFFER_TOO_SMALL = 6,
  EEG_STATUS_INTERNAL = 7,
} EegStatus;

/**
 * Trained classifier together with the normalization it was fitted with.
 */
typedef struct EegClassifier EegClassifier;

/**
 * Parsed EEG recording.
 */
typedef struct EegRecording EegRecording;

/**
 * Operating point chosen by [`eeg_optimize_threshold`].
 */
typedef struct EegOperatingPoint {
  double threshold;
  double recall;
  /**
   * NaN when no row is predicted positive.
   */
  double precision;
  double accuracy;
  /**
   * 1 when the recall target was reached.
   */
  int32_t feasible;
} EegOperatingPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *eeg_version(void);

/**
 * Copies the calling thread's last error message into `buf`.
 *
 * Pass `buf = NULL, cap = 0` to query the size through `needed`.
 *
 * # Safety
 * `buf` must be valid for `cap` bytes; `needed` may be null.
 */
enum EegStatus eeg_last_error_message(char *buf, size_t cap, size_t *needed);

/**
 * Number of recording-level features.
 */
size_t eeg_feature_count(void);

/**
 * Name of feature `index`, NUL-terminated.
 *
 * # Safety
 * `buf` must be valid for `cap` bytes; `needed` may be null.
 */
enum EegStatus eeg_feature_name(size_t index, char *buf, size_t cap, size_t *needed);

/**
 * Parses an EDF byte buffer into a new recording handle.
 *
 * # Safety
 * `data` must be valid for `len` bytes; `out` must be writable.
 */
enum EegStatus eeg_recording_from_edf(const uint8_t *data, size_t len, struct EegRecording **out);

/**
 * # Safety
 * `rec` must come from [`eeg_recording_from_edf`] and not be used afterwards.
 */
void eeg_recording_free(struct EegRecording *rec);

/**
 * Sampling rate, channel count and samples per channel.
 *
 * # Safety
 * `rec` must be a live handle; output pointers may be null.
 */
enum EegStatus eeg_recording_info(const struct EegRecording *rec,
                                  double *fs,
                                  size_t *n_channels,
                                  size_t *n_samples);

/**
 * Recording-level feature vector with default feature settings.
 *
 * Writes [`eeg_feature_count`] values into `out`; undefined values are NaN.
 *
 * # Safety
 * `rec` must be a live handle; `out` must be valid for `cap` doubles.
 */
enum EegStatus eeg_recording_features(const struct EegRecording *rec,
                                      double window_s,
                                      double *out,
                                      size_t cap);

/**
 * Loads a classifier from its model JSON and normalization JSON.
 *
 * # Safety
 * Both strings must be NUL-terminated; `out` must be writable.
 */
enum EegStatus eeg_classifier_load(const char *model_json,
                                   const char *normalization_json,
                                   struct EegClassifier **out);

/**
 * # Safety
 * `cls` must come from [`eeg_classifier_load`] and not be used afterwards.
 */
void eeg_classifier_free(struct EegClassifier *cls);

/**
 * Scores `n_rows` raw feature rows (row-major, `n_cols` wide, NaN = missing).
 *
 * # Safety
 * `cls` must be a live handle; `x` must hold `n_rows * n_cols` doubles and
 * `out` `n_rows` doubles.
 */
enum EegStatus eeg_classifier_predict(const struct EegClassifier *cls,
                                      const double *x,
                                      size_t n_rows,
                                      size_t n_cols,
                                      double *out);

/**
 * ROC-AUC with ties counted as one half. `labels` are 0/1 bytes.
 *
 * # Safety
 * `scores` and `labels` must hold `n` elements; `out` must be writable.
 */
enum EegStatus eeg_roc_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

/**
 * Step-sum average precision.
 *
 * # Safety
 * `scores` and `labels` must hold `n` elements; `out` must be writable.
 */
enum EegStatus eeg_average_precision(const double *scores,
                                     const uint8_t *labels,
                                     size_t n,
                                     double *out);

/**
 * Highest-precision threshold reaching `target_recall`.
 *
 * # Safety
 * `scores` and `labels` must hold `n` elements; `out` must be writable.
 */
enum EegStatus eeg_optimize_threshold(const double *scores,
                                      const uint8_t *labels,
                                      size_t n,
                                      double target_recall,
                                      struct EegOperatingPoint *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EEGTRIAGE_H */

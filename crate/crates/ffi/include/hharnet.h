#ifndef HHARNET_H
#define HHARNET_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HharStatus {
  HHAR_STATUS_OK = 0,
  HHAR_STATUS_NULL_POINTER = 1,
  HHAR_STATUS_INVALID_UTF8 = 2,
  HHAR_STATUS_IO = 3,
  HHAR_STATUS_SCHEMA = 4,
  HHAR_STATUS_PARSE = 5,
  HHAR_STATUS_CONFIG = 6,
  HHAR_STATUS_DIMENSION = 7,
  HHAR_STATUS_DATA = 8,
  HHAR_STATUS_TRAINING = 9,
  HHAR_STATUS_METRIC = 10,
  HHAR_STATUS_FORMAT = 11,
  HHAR_STATUS_USAGE = 12,
  // The output buffer is too small; the required size was still written.
  HHAR_STATUS_BUFFER_TOO_SMALL = 13,
  // The model kind does not provide this output.
  HHAR_STATUS_UNSUPPORTED = 14,
  HHAR_STATUS_OUT_OF_RANGE = 15,
  HHAR_STATUS_PANIC = 16,
} HharStatus;

// A loaded model. Opaque to C.
typedef struct HharModel HharModel;

// Aggregate scores filled by [`hhar_metrics`]. Undefined values are NaN.
typedef struct HharMetrics {
  double accuracy;
  double balanced_accuracy;
  uint64_t misclassifications;
} HharMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *hhar_version(void);

// Message of the last failed call on this thread; empty if none. Valid until
// the next failing call on the same thread.
const char *hhar_last_error(void);

// Loads a model file. On success `*out` receives a handle to free with
// [`hhar_model_free`]; on failure it is set to NULL.
//
// # Safety
// `path` must be NULL or a NUL-terminated string; `out` must be NULL or writable.
enum HharStatus hhar_model_load(const char *path, struct HharModel **out);

// Releases a handle. NULL is ignored.
//
// # Safety
// `model` must be NULL or a handle not yet freed.
void hhar_model_free(struct HharModel *model);

// Number of raw features a prediction expects; 0 for a NULL handle.
//
// # Safety
// `model` must be NULL or a live handle.
size_t hhar_model_feature_count(const struct HharModel *model);

// Number of output classes; 0 for a NULL handle.
//
// # Safety
// `model` must be NULL or a live handle.
size_t hhar_model_class_count(const struct HharModel *model);

// Model kind (`flat`, `lcpn`, `node`, `tree`, `forest`, `knn`) as a static
// string; NULL for a NULL handle.
//
// # Safety
// `model` must be NULL or a live handle.
const char *hhar_model_kind(const struct HharModel *model);

// Copies the name of class `index` into `buf` with a terminating NUL.
// `*needed` (if not NULL) receives the buffer size required, NUL included.
//
// # Safety
// `buf` must be NULL or hold `buf_len` writable bytes; `needed` must be NULL or writable.
enum HharStatus hhar_model_class_name(const struct HharModel *model,
                                      size_t index,
                                      char *buf,
                                      size_t buf_len,
                                      size_t *needed);

// Predicts the class of one raw feature vector. NaN cells are treated as
// missing and imputed with the training means.
//
// # Safety
// `features` must hold `len` readable values; `out_class` must be writable.
enum HharStatus hhar_model_predict(const struct HharModel *model,
                                   const double *features,
                                   size_t len,
                                   size_t *out_class);

// Writes class probabilities for one raw feature vector into `out`, which
// must hold [`hhar_model_class_count`] values. Trees, forests and kNN return
// `Unsupported`.
//
// # Safety
// `features` must hold `len` readable values; `out` must hold `out_len` writable values.
enum HharStatus hhar_model_predict_proba(const struct HharModel *model,
                                         const double *features,
                                         size_t len,
                                         double *out,
                                         size_t out_len);

// Accuracy, balanced accuracy and misclassification count of `len` label
// pairs over `n_classes` classes.
//
// # Safety
// `y_true` and `y_pred` must hold `len` readable values; `out` must be writable.
enum HharStatus hhar_metrics(const size_t *y_true,
                             const size_t *y_pred,
                             size_t len,
                             size_t n_classes,
                             struct HharMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HHARNET_H */

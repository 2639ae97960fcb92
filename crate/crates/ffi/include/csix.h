#ifndef CSIX_H
#define CSIX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum CsixStatus {
  CSIX_STATUS_OK = 0,
  CSIX_STATUS_NULL_POINTER = 1,
  CSIX_STATUS_INVALID_ARGUMENT = 2,
  CSIX_STATUS_IO = 3,
  CSIX_STATUS_FORMAT = 4,
  CSIX_STATUS_DIMENSION = 5,
  CSIX_STATUS_NUMERIC = 6,
  CSIX_STATUS_PANIC = 7,
} CsixStatus;

/*
 Loaded CSI dataset.
 */
typedef struct CsixDataset CsixDataset;

/*
 Trained network.
 */
typedef struct CsixModel CsixModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. The pointer stays
 valid until the next call into this library on the same thread.
 */
const char *csix_last_error(void);

/*
 Loads a model file written by `csix train`.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CsixStatus csix_model_load(const char *path, struct CsixModel **out);

/*
 Parses a model from its JSON text.

 # Safety
 `json` must be a NUL-terminated string; `out` must be writable.
 */
enum CsixStatus csix_model_from_json(const char *json, struct CsixModel **out);

/*
 # Safety
 `model` must come from a `csix_model_*` constructor and not be freed twice. NULL is ignored.
 */
void csix_model_free(struct CsixModel *model);

/*
 Input width K, or 0 for NULL.

 # Safety
 `model` must be NULL or a live handle.
 */
size_t csix_model_input_dim(const struct CsixModel *model);

/*
 Number of classes M, or 0 for NULL.

 # Safety
 `model` must be NULL or a live handle.
 */
size_t csix_model_classes(const struct CsixModel *model);

/*
 Zero-based predicted class of one CSI vector.

 # Safety
 `x` must point to `len` doubles; `out_class` must be writable.
 */
enum CsixStatus csix_model_predict(const struct CsixModel *model,
                                   const double *x,
                                   size_t len,
                                   size_t *out_class);

/*
 Softmax output; `out_len` must equal the class count.

 # Safety
 `x` must point to `len` doubles and `out` to `out_len` writable doubles.
 */
enum CsixStatus csix_model_probabilities(const struct CsixModel *model,
                                         const double *x,
                                         size_t len,
                                         double *out,
                                         size_t out_len);

/*
 Normalized input relevance h' of sample `x` (true class `n`) toward
 class `m`. `out_len` must equal K.

 # Safety
 `x` must point to `len` doubles and `out` to `out_len` writable doubles.
 */
enum CsixStatus csix_explain(const struct CsixModel *model,
                             const double *x,
                             size_t len,
                             size_t n,
                             size_t m,
                             double *out,
                             size_t out_len);

/*
 Per-subcarrier mean of h' over the antenna pairs. `len` must equal
 `subcarriers * antenna_pairs` and `out_len` must equal `subcarriers`.

 # Safety
 `h_prime` must point to `len` doubles and `out` to `out_len` writable doubles.
 */
enum CsixStatus csix_subcarrier_scores(const double *h_prime,
                                       size_t len,
                                       size_t subcarriers,
                                       size_t antenna_pairs,
                                       double *out,
                                       size_t out_len);

/*
 Loads a CSI CSV file.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CsixStatus csix_dataset_load(const char *path, struct CsixDataset **out);

/*
 # Safety
 `dataset` must come from `csix_dataset_load` and not be freed twice. NULL is ignored.
 */
void csix_dataset_free(struct CsixDataset *dataset);

/*
 Sample count, or 0 for NULL.

 # Safety
 `dataset` must be NULL or a live handle.
 */
size_t csix_dataset_len(const struct CsixDataset *dataset);

/*
 Channels per sample K, or 0 for NULL.

 # Safety
 `dataset` must be NULL or a live handle.
 */
size_t csix_dataset_channels(const struct CsixDataset *dataset);

/*
 Copies sample `index` into `out` (`out_len` = K) and its 1-based location
 into `out_location`.

 # Safety
 `out` must point to `out_len` writable doubles; `out_location` must be writable.
 */
enum CsixStatus csix_dataset_sample(const struct CsixDataset *dataset,
                                    size_t index,
                                    double *out,
                                    size_t out_len,
                                    size_t *out_location);

/*
 Fraction of dataset samples the model classifies correctly.

 # Safety
 Both handles must be live; `out` must be writable.
 */
enum CsixStatus csix_model_accuracy(const struct CsixModel *model,
                                    const struct CsixDataset *dataset,
                                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CSIX_H */

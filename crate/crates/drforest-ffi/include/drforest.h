/* C interface for the drforest library.
 *
 * Models are opaque handles created by drf_fit or drf_model_load and
 * released with drf_model_free. Fallible calls return a drf_status; on
 * failure drf_last_error() yields a thread-local message valid until the
 * next failing call on the same thread. Matrices are dense row-major
 * doubles. This header is maintained by hand alongside src/lib.rs.
 */

#ifndef DRFOREST_H
#define DRFOREST_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum drf_status {
  DRF_OK = 0,
  DRF_INVALID_ARGUMENT = 1,
  DRF_FIT_ERROR = 2,
  DRF_PREDICT_ERROR = 3,
  DRF_IO_ERROR = 4,
  DRF_PANIC = 5,
} drf_status;

#define DRF_METRIC_EUCLIDEAN 0
#define DRF_METRIC_ISOMAP 1

/* Fit hyperparameters. mtry = 0 selects the default max(1, p/3). */
typedef struct drf_fit_options {
  size_t n_trees;
  size_t mtry;
  size_t min_leaf;
  uint64_t seed;
  int32_t metric;      /* DRF_METRIC_EUCLIDEAN or DRF_METRIC_ISOMAP */
  size_t isomap_k;     /* neighbours for the isomap graph */
  size_t embedding_dim;
  double sigma_g;      /* backscoring kernel bandwidth */
  double gamma_g;      /* backscoring ridge strength */
} drf_fit_options;

/* Opaque trained model. */
typedef struct drf_model drf_model;

/* Fills *out with the defaults (100 trees, Euclidean metric, 2 embedding
 * dimensions, sigma_g 100, gamma_g 200). */
drf_status drf_fit_options_default(drf_fit_options *out);

/* Trains on row-major x (n*p) and y (n*q); on success *out_model owns a
 * new handle. */
drf_status drf_fit(const double *x, size_t n, size_t p,
                   const double *y, size_t q,
                   const drf_fit_options *options,
                   drf_model **out_model);

/* Predicts one response: x_new holds p doubles, out_y receives q. */
drf_status drf_predict(const drf_model *model,
                       const double *x_new, size_t p,
                       double *out_y, size_t q);

/* Predicts `rows` responses from a row-major block of rows*p doubles into
 * rows*q output doubles. */
drf_status drf_predict_batch(const drf_model *model,
                             const double *x, size_t rows, size_t p,
                             double *out_y, size_t q);

/* Saves / loads the JSON model format. Paths are NUL-terminated UTF-8. */
drf_status drf_model_save(const drf_model *model, const char *path);
drf_status drf_model_load(const char *path, drf_model **out_model);

/* Reports model dimensions; null output pointers are skipped. */
drf_status drf_model_dims(const drf_model *model,
                          size_t *out_p, size_t *out_q, size_t *out_n_train);

/* Releases a handle; null is a no-op. */
void drf_model_free(drf_model *model);

/* Message for the most recent failure on this thread ("" if none). */
const char *drf_last_error(void);

/* Library version as a static string. */
const char *drf_version(void);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* DRFOREST_H */

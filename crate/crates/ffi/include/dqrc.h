#ifndef DQRC_H
#define DQRC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DqrcStatus {
  DQRC_STATUS_OK = 0,
  /**
   * Null pointer, bad UTF-8 or inconsistent sizes.
   */
  DQRC_STATUS_INVALID_ARGUMENT = 1,
  DQRC_STATUS_DATA = 2,
  DQRC_STATUS_CONFIG = 3,
  DQRC_STATUS_SERVICE = 4,
  DQRC_STATUS_NUMERICAL = 5,
  DQRC_STATUS_INTERNAL = 6,
} DqrcStatus;

typedef enum DqrcSplit {
  DQRC_SPLIT_TRAIN = 0,
  DQRC_SPLIT_VAL = 1,
  DQRC_SPLIT_TEST = 2,
} DqrcSplit;

/**
 * Windowed, normalized and split series.
 */
typedef struct DqrcDataset DqrcDataset;

/**
 * Trained pipeline together with the backends it runs on.
 */
typedef struct DqrcModel DqrcModel;

typedef struct DqrcMetrics {
  double mae;
  double rmse;
  /**
   * NaN when the true values are constant.
   */
  double r2;
} DqrcMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version; static storage, do not free.
 */
const char *dqrc_version(void);

/**
 * Copy of the calling thread's last error message, or null if there is
 * none. Free with [`dqrc_string_free`].
 */
char *dqrc_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void dqrc_string_free(char *s);

/**
 * Loads a dataset artifact written by `dqrc prepare`.
 *
 * # Safety
 * `path` must be a valid C string and `out` a valid pointer.
 */
enum DqrcStatus dqrc_dataset_load(const char *path, struct DqrcDataset **out);

/**
 * Builds a dataset from a synthetic series with default components.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DqrcStatus dqrc_dataset_synthetic(size_t length,
                                       uint64_t seed,
                                       size_t window,
                                       size_t train,
                                       size_t val,
                                       size_t test,
                                       struct DqrcDataset **out);

/**
 * # Safety
 * `ds` must be null or a handle from this library, not yet freed.
 */
void dqrc_dataset_free(struct DqrcDataset *ds);

/**
 * Window length of the dataset.
 *
 * # Safety
 * `ds` must be a live handle.
 */
size_t dqrc_dataset_window(const struct DqrcDataset *ds);

/**
 * Number of samples in `split`.
 *
 * # Safety
 * `ds` must be a live handle.
 */
size_t dqrc_dataset_len(const struct DqrcDataset *ds, enum DqrcSplit split);

/**
 * Copies the normalized targets of `split` into `out` (capacity `len`).
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum DqrcStatus dqrc_dataset_targets(const struct DqrcDataset *ds,
                                     enum DqrcSplit split,
                                     double *out,
                                     size_t len);

/**
 * Trains the experiment described by `config_toml` on the dataset's train
 * split. Relative calibration paths resolve against `base_dir` (nullable).
 *
 * # Safety
 * Pointers must be valid; `base_dir` may be null.
 */
enum DqrcStatus dqrc_model_train(const char *config_toml,
                                 const char *base_dir,
                                 const struct DqrcDataset *ds,
                                 struct DqrcModel **out);

/**
 * # Safety
 * `model` must be null or a live handle.
 */
void dqrc_model_free(struct DqrcModel *model);

/**
 * Predicts `count` windows laid out row-major in `windows`
 * (`count × window_len` normalized values). `first_sample` is the index of
 * the first window in the full windowed series; it keys shot seeds.
 *
 * # Safety
 * `windows` must hold `count × window_len` doubles, `out` `count`.
 */
enum DqrcStatus dqrc_model_predict(const struct DqrcModel *model,
                                   const double *windows,
                                   size_t count,
                                   size_t window_len,
                                   size_t first_sample,
                                   double *out);

/**
 * MAE, RMSE and R² of the model on a dataset split.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DqrcStatus dqrc_model_evaluate(const struct DqrcModel *model,
                                    const struct DqrcDataset *ds,
                                    enum DqrcSplit split,
                                    struct DqrcMetrics *out);

/**
 * Writes the trained model as JSON.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DqrcStatus dqrc_model_save(const struct DqrcModel *model, const char *path);

/**
 * Serialized trained model. Free with [`dqrc_string_free`].
 *
 * # Safety
 * `model` must be a live handle and `out` valid.
 */
enum DqrcStatus dqrc_model_to_json(const struct DqrcModel *model, char **out);

/**
 * Backend index of each of `units` work units over `backends` backends.
 *
 * # Safety
 * `out` must point to `units` writable `size_t`.
 */
enum DqrcStatus dqrc_assign_backends(size_t units, size_t backends, size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DQRC_H */

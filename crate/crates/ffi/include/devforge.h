#ifndef DEVFORGE_H
#define DEVFORGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DvStatus {
  DV_STATUS_OK = 0,
  DV_STATUS_NULL_POINTER = 1,
  DV_STATUS_INVALID_UTF8 = 2,
  DV_STATUS_IO = 3,
  DV_STATUS_CORRUPT_MODEL = 4,
  DV_STATUS_VERSION_MISMATCH = 5,
  DV_STATUS_OOV_ONLY = 6,
  DV_STATUS_INVALID_ARGUMENT = 7,
  DV_STATUS_BUFFER_TOO_SMALL = 8,
  DV_STATUS_UNKNOWN_LANGUAGE = 9,
  DV_STATUS_NOT_FOUND = 10,
  DV_STATUS_PANIC = 11,
} DvStatus;

typedef enum DvWeighting {
  DV_WEIGHTING_FREQUENCY = 0,
  DV_WEIGHTING_UNWEIGHTED = 1,
} DvWeighting;

/**
 * A trained embedding model.
 */
typedef struct DvModel DvModel;

/**
 * An owned list of strings.
 */
typedef struct DvStringList DvStringList;

/**
 * Macro-weighted scores as fractions in `[0, 1]`.
 */
typedef struct DvScores {
  double precision;
  double recall;
  double f1;
} DvScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *dv_last_error(void);

/**
 * Library version as a static string.
 */
const char *dv_version(void);

/**
 * Loads a model file written by `devforge train`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum DvStatus dv_model_load(const char *path, struct DvModel **out);

/**
 * Releases a model; null is ignored.
 *
 * # Safety
 * `model` must come from [`dv_model_load`] and not be used afterwards.
 */
void dv_model_free(struct DvModel *model);

/**
 * Vector length of the model, or 0 for null.
 *
 * # Safety
 * `model` must be null or a live model.
 */
size_t dv_model_dim(const struct DvModel *model);

/**
 * Infers a vector for `tokens` into `out[0..dim]`. Unknown tokens are
 * ignored; a document with none known gives `DV_STATUS_OOV_ONLY`.
 *
 * # Safety
 * `tokens` must point to `n_tokens` strings and `out` to `out_len` floats.
 */
enum DvStatus dv_model_infer(const struct DvModel *model,
                             const char *const *tokens,
                             size_t n_tokens,
                             size_t epochs,
                             uint64_t seed,
                             float *out,
                             size_t out_len);

/**
 * Copies the trained vector of document `tag` into `out[0..dim]`.
 *
 * # Safety
 * `tag` must be a NUL-terminated string and `out` point to `out_len` floats.
 */
enum DvStatus dv_model_doc_vector(const struct DvModel *model,
                                  const char *tag,
                                  float *out,
                                  size_t out_len);

/**
 * Weighted average of the word vectors of `names`, skipping unknown ones,
 * written to `out[0..dim]`. `weighting` is a [`DvWeighting`] value.
 *
 * # Safety
 * `names` and `counts` must each point to `n` elements and `out` to
 * `out_len` doubles.
 */
enum DvStatus dv_embed_apis(const struct DvModel *model,
                            const char *const *names,
                            const uint64_t *counts,
                            size_t n,
                            uint32_t weighting,
                            double *out,
                            size_t out_len);

/**
 * Cleans and tokenizes free text the way documents are built.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum DvStatus dv_tokenize(const char *text, struct DvStringList **out);

/**
 * Import names found in `content`, in source order. `language` is a
 * language name such as "Python" or "c#"; notebooks take "JupyterNotebook".
 *
 * # Safety
 * `content` and `language` must be NUL-terminated strings and `out` a
 * writable pointer.
 */
enum DvStatus dv_extract_imports(const char *content,
                                 const char *language,
                                 struct DvStringList **out);

/**
 * Number of strings, or 0 for null.
 *
 * # Safety
 * `list` must be null or a live list.
 */
size_t dv_string_list_len(const struct DvStringList *list);

/**
 * The `i`-th string, or null when out of range. Owned by the list.
 *
 * # Safety
 * `list` must be null or a live list.
 */
const char *dv_string_list_get(const struct DvStringList *list, size_t i);

/**
 * Releases a list; null is ignored.
 *
 * # Safety
 * `list` must come from this library and not be used afterwards.
 */
void dv_string_list_free(struct DvStringList *list);

/**
 * Macro-weighted precision, recall and F1 of `n` predictions. Labels are
 * role indices: 0 Backend, 1 Frontend, 2 Mobile, 3 DevOps, 4 DataScientist.
 * Scores cover the roles present in either vector.
 *
 * # Safety
 * `y_true` and `y_pred` must point to `n` bytes and `out` be writable.
 */
enum DvStatus dv_macro_weighted_metrics(const uint8_t *y_true,
                                        const uint8_t *y_pred,
                                        size_t n,
                                        struct DvScores *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEVFORGE_H */

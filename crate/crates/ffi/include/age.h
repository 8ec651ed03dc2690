#ifndef AGE_H
#define AGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result codes.
 */
typedef enum AgeStatus {
  AGE_STATUS_OK = 0,
  AGE_STATUS_NULL_POINTER = 1,
  AGE_STATUS_INVALID_ARGUMENT = 2,
  AGE_STATUS_INPUT = 3,
  AGE_STATUS_DOMAIN = 4,
  AGE_STATUS_CONFIG = 5,
  AGE_STATUS_CAPACITY = 6,
  AGE_STATUS_STATE = 7,
  AGE_STATUS_PARSE = 8,
  AGE_STATUS_IO = 9,
  AGE_STATUS_JSON = 10,
  AGE_STATUS_BUFFER_TOO_SMALL = 11,
  AGE_STATUS_PANIC = 12,
} AgeStatus;

/**
 * One embedding snapshot (n×h, entries in [0, 1]).
 */
typedef struct AgeEmbedding AgeEmbedding;

/**
 * A loaded or generated attributed graph.
 */
typedef struct AgeGraph AgeGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library.
 */
const char *age_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *age_version(void);

/**
 * Frees a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void age_string_free(char *s);

/**
 * Loads a dataset by name (`sbm`, a directory, or a name under
 * `data_dir`). `data_dir` may be NULL.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
enum AgeStatus age_graph_load(const char *dataset,
                              const char *data_dir,
                              uint64_t seed,
                              struct AgeGraph **out);

/**
 * Builds a graph from `n×d` row-major features and `edge_count` pairs
 * stored as `2·edge_count` node indices. `labels` (length `n`) may be NULL.
 *
 * # Safety
 * Buffers must hold the stated number of elements; `out` must be writable.
 */
enum AgeStatus age_graph_from_edges(size_t n,
                                    size_t d,
                                    const double *features,
                                    const size_t *edges,
                                    size_t edge_count,
                                    const size_t *labels,
                                    struct AgeGraph **out);

/**
 * Stochastic block model graph with planted labels.
 *
 * # Safety
 * `block_sizes` must hold `blocks` values; `out` must be writable.
 */
enum AgeStatus age_graph_sbm(const size_t *block_sizes,
                             size_t blocks,
                             double p_in,
                             double p_out,
                             size_t feature_dim,
                             double feature_noise,
                             uint64_t seed,
                             struct AgeGraph **out);

/**
 * Releases a graph. NULL is ignored.
 *
 * # Safety
 * `g` must come from this library and not be freed twice.
 */
void age_graph_free(struct AgeGraph *g);

/**
 * Node count, undirected edge count and feature width.
 *
 * # Safety
 * `g` must be a live graph; out-pointers may be NULL to skip a value.
 */
enum AgeStatus age_graph_shape(const struct AgeGraph *g,
                               size_t *nodes,
                               size_t *edges,
                               size_t *feature_dim);

/**
 * Largest eigenvalue of the renormalized Laplacian by power iteration.
 * `converged` may be NULL.
 *
 * # Safety
 * `g` must be a live graph; `out` must be writable.
 */
enum AgeStatus age_lambda_max(const struct AgeGraph *g,
                              uint64_t seed,
                              double *out,
                              bool *converged);

/**
 * Writes `(I − kL̃)^t X` into `out` (row-major, `n·d` values). `k <= 0`
 * selects `k = 1/λ_max`.
 *
 * # Safety
 * `g` must be a live graph; `out` must hold `out_len` doubles.
 */
enum AgeStatus age_smooth_features(const struct AgeGraph *g,
                                   size_t t,
                                   double k,
                                   double *out,
                                   size_t out_len);

/**
 * Trains the configured model. With labels the snapshot is chosen by DBI,
 * otherwise the last snapshot is returned. `config_json` may be NULL for
 * defaults.
 *
 * # Safety
 * `g` must be a live graph; `out` must be writable.
 */
enum AgeStatus age_train(const struct AgeGraph *g,
                         const char *config_json,
                         struct AgeEmbedding **out);

/**
 * Full clustering run; writes a metrics JSON string to `metrics_json`.
 *
 * # Safety
 * `g` must be a live graph; `metrics_json` must be writable.
 */
enum AgeStatus age_cluster(const struct AgeGraph *g, const char *config_json, char **metrics_json);

/**
 * Full link-prediction run; writes a metrics JSON string to `metrics_json`.
 *
 * # Safety
 * `g` must be a live graph; `metrics_json` must be writable.
 */
enum AgeStatus age_linkpred(const struct AgeGraph *g, const char *config_json, char **metrics_json);

/**
 * Wraps smoothed features as an embedding (the LS baseline).
 *
 * # Safety
 * `g` must be a live graph; `out` must be writable.
 */
enum AgeStatus age_ls_embedding(const struct AgeGraph *g,
                                const char *config_json,
                                struct AgeEmbedding **out);

/**
 * Rows, columns and training epoch of an embedding. Out-pointers may be NULL.
 *
 * # Safety
 * `e` must be a live embedding.
 */
enum AgeStatus age_embedding_shape(const struct AgeEmbedding *e,
                                   size_t *rows,
                                   size_t *cols,
                                   size_t *epoch);

/**
 * Copies the embedding, row-major, into `out`.
 *
 * # Safety
 * `e` must be a live embedding; `out` must hold `out_len` doubles.
 */
enum AgeStatus age_embedding_copy(const struct AgeEmbedding *e, double *out, size_t out_len);

/**
 * Spectral clustering of the embedding's cosine similarity into `m` groups.
 *
 * # Safety
 * `e` must be a live embedding; `assignments` must hold `len` values.
 */
enum AgeStatus age_embedding_cluster(const struct AgeEmbedding *e,
                                     size_t m,
                                     uint64_t seed,
                                     size_t *assignments,
                                     size_t len);

/**
 * Releases an embedding. NULL is ignored.
 *
 * # Safety
 * `e` must come from this library and not be freed twice.
 */
void age_embedding_free(struct AgeEmbedding *e);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AGE_H */

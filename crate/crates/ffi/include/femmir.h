#ifndef FEMMIR_H
#define FEMMIR_H

/* Generated by cbindgen from the femmir-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by fallible calls.
 */
typedef enum {
  FEMMIR_STATUS_OK = 0,
  FEMMIR_STATUS_NULL_ARGUMENT = 1,
  FEMMIR_STATUS_INVALID_UTF8 = 2,
  FEMMIR_STATUS_PARSE = 3,
  FEMMIR_STATUS_IO = 4,
  FEMMIR_STATUS_EMPTY = 5,
  FEMMIR_STATUS_INTERNAL = 6,
} FemmirStatus;

/**
 * Opaque taxonomy handle.
 */
typedef struct {
  uint8_t _private[0];
} FemmirTaxonomy;

/**
 * Opaque cost-config handle.
 */
typedef struct {
  uint8_t _private[0];
} FemmirCostConfig;

/**
 * Opaque parsed-record handle.
 */
typedef struct {
  uint8_t _private[0];
} FemmirRecord;

/**
 * Exact-distance result for one record pair. An incompatible pair reports
 * infinite distances and zero similarity.
 */
typedef struct {
  double ced;
  double nced;
  double sim;
} FemmirSimilarity;

/**
 * Opaque corpus-index handle.
 */
typedef struct {
  uint8_t _private[0];
} FemmirIndex;

/**
 * Opaque trained-model handle.
 */
typedef struct {
  uint8_t _private[0];
} FemmirModel;

/**
 * Library version as a static string; do not free.
 */
const char *femmir_version(void);

/**
 * Message of the most recent failure on this thread, or null. The pointer
 * is valid until the next failing call on the same thread; do not free.
 */
const char *femmir_last_error(void);

/**
 * Free a string returned by this library.
 *
 * # Safety
 * `s` must have been returned by a femmir function and not freed before.
 */
void femmir_string_free(char *s);

/**
 * Taxonomy that ships with the library.
 */
FemmirTaxonomy *femmir_taxonomy_bundled(void);

/**
 * Load a `child<TAB>parent` taxonomy file; null on failure.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
FemmirTaxonomy *femmir_taxonomy_load(const char *path);

/**
 * # Safety
 * `t` must come from a taxonomy constructor and not be freed twice.
 */
void femmir_taxonomy_free(FemmirTaxonomy *t);

/**
 * Cost config with all defaults.
 */
FemmirCostConfig *femmir_cost_config_default(void);

/**
 * Parse and validate a cost-config JSON object; null on failure.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string.
 */
FemmirCostConfig *femmir_cost_config_parse(const char *json);

/**
 * # Safety
 * `cfg` must come from a cost-config constructor and not be freed twice.
 */
void femmir_cost_config_free(FemmirCostConfig *cfg);

/**
 * Parse one record from JSON; null on failure.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string.
 */
FemmirRecord *femmir_record_parse(const char *json);

/**
 * # Safety
 * `record` must come from `femmir_record_parse` and not be freed twice.
 */
void femmir_record_free(FemmirRecord *record);

/**
 * Exact content-edit-distance similarity between two records.
 *
 * # Safety
 * All handles must be live pointers from their constructors; `out` must
 * point to writable memory for one `FemmirSimilarity`.
 */
FemmirStatus femmir_similarity(const FemmirRecord *query_record,
                               const FemmirRecord *cand_record,
                               const FemmirCostConfig *cfg,
                               const FemmirTaxonomy *taxonomy,
                               FemmirSimilarity *out);

/**
 * Open and index a JSONL corpus file; null on failure.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
FemmirIndex *femmir_index_open(const char *path);

/**
 * Number of indexed records (0 for a null handle).
 *
 * # Safety
 * `index` must be null or a live index handle.
 */
uintptr_t femmir_index_len(const FemmirIndex *index);

/**
 * # Safety
 * `index` must come from `femmir_index_open` and not be freed twice.
 */
void femmir_index_free(FemmirIndex *index);

/**
 * Load a trained model file; null on failure.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
FemmirModel *femmir_model_load(const char *path);

/**
 * # Safety
 * `model` must come from `femmir_model_load` and not be freed twice.
 */
void femmir_model_free(FemmirModel *model);

/**
 * Rank the corpus against a query record; returns the ranking as CSV
 * (`rank,id,modality,sim[,ced]`), or null on failure. `mode` is `exact`
 * or `learned` (the latter needs `model`); `target` is `all`, `text`,
 * `image`, or `video`. Free the result with `femmir_string_free`.
 *
 * # Safety
 * Handles must be live; `mode` and `target` must be valid NUL-terminated
 * strings; `model` may be null in exact mode.
 */
char *femmir_query(const FemmirIndex *index,
                   const FemmirRecord *query_record,
                   const char *mode,
                   const char *target,
                   const FemmirCostConfig *cfg,
                   const FemmirTaxonomy *taxonomy,
                   const FemmirModel *model);

/**
 * Extract person attributes from newline-separated sentences and return
 * the resulting record as JSON, or null on failure (including "no
 * candidate sentences"). Pass NaN for `theta` to use the model's default
 * behavior (required threshold models fail without one). Free the result
 * with `femmir_string_free`.
 *
 * # Safety
 * `text`, `model`, and `record_id` must be valid NUL-terminated strings;
 * `taxonomy` must be a live handle.
 */
char *femmir_hart_extract(const char *text,
                          const char *model,
                          double theta,
                          const FemmirTaxonomy *taxonomy,
                          const char *record_id);

#endif /* FEMMIR_H */

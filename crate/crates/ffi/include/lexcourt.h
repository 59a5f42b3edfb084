#ifndef LEXCOURT_H
#define LEXCOURT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every fallible call.
 */
typedef enum LcStatus {
  LC_STATUS_OK = 0,
  LC_STATUS_NULL_POINTER = 1,
  LC_STATUS_INVALID_UTF8 = 2,
  LC_STATUS_IO = 3,
  LC_STATUS_VALIDATION = 4,
  LC_STATUS_ARGUMENT = 5,
  LC_STATUS_FORMAT = 6,
  LC_STATUS_INTERNAL = 7,
  LC_STATUS_PANIC = 8,
} LcStatus;

typedef enum LcGranularity {
  LC_GRANULARITY_DOCUMENT = 0,
  LC_GRANULARITY_PASSAGE = 1,
} LcGranularity;

/*
 A loaded case collection with optional relevance judgements.
 */
typedef struct LcCollection LcCollection;

/*
 A retrieval index.
 */
typedef struct LcIndex LcIndex;

/*
 Ranked notice cases for one query.
 */
typedef struct LcRanking LcRanking;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or NULL after a success.
 The pointer stays valid until the next call into this library.
 */
const char *lc_last_error(void);

/*
 Library version as a static string.
 */
const char *lc_version(void);

/*
 Loads `*.txt` cases from `cases_dir`. `qrels_path` may be NULL for an
 unlabelled collection.

 # Safety
 String arguments must be NUL-terminated; `out` must be writable.
 */
enum LcStatus lc_collection_load(const char *cases_dir,
                                 const char *qrels_path,
                                 struct LcCollection **out);

/*
 # Safety
 `collection` must come from [`lc_collection_load`] or be NULL.
 */
void lc_collection_free(struct LcCollection *collection);

/*
 Number of cases, or 0 for NULL.

 # Safety
 `collection` must be a live handle or NULL.
 */
uintptr_t lc_collection_case_count(const struct LcCollection *collection);

/*
 Number of query cases, or 0 for NULL.

 # Safety
 `collection` must be a live handle or NULL.
 */
uintptr_t lc_collection_query_count(const struct LcCollection *collection);

/*
 Builds an index over `collection`. When `titles_path` is non-NULL the
 statute field is filled from the detected statute references.

 # Safety
 `collection` must be a live handle; `out` must be writable.
 */
enum LcStatus lc_index_build(const struct LcCollection *collection,
                             const char *titles_path,
                             enum LcGranularity granularity,
                             struct LcIndex **out);

/*
 # Safety
 `path` must be NUL-terminated; `out` must be writable.
 */
enum LcStatus lc_index_load(const char *path, struct LcIndex **out);

/*
 # Safety
 `index` must be a live handle; `path` must be NUL-terminated.
 */
enum LcStatus lc_index_save(const struct LcIndex *index, const char *path);

/*
 # Safety
 `index` must come from this library or be NULL.
 */
void lc_index_free(struct LcIndex *index);

/*
 Number of retrieval units (documents or passages), or 0 for NULL.

 # Safety
 `index` must be a live handle or NULL.
 */
uintptr_t lc_index_unit_count(const struct LcIndex *index);

/*
 Retrieves notice cases for `query_id`. `config` holds `key = value` lines
 in the same format as the command-line config file, applied over the
 defaults for the index granularity. NULL keeps those defaults.

 # Safety
 Handles must be live; strings NUL-terminated; `out` writable.
 */
enum LcStatus lc_retrieve(const struct LcIndex *index,
                          const struct LcCollection *collection,
                          const char *config,
                          const char *query_id,
                          struct LcRanking **out);

/*
 # Safety
 `ranking` must be a live handle or NULL.
 */
uintptr_t lc_ranking_len(const struct LcRanking *ranking);

/*
 Query id of the ranking; valid while the ranking lives.

 # Safety
 `ranking` must be a live handle or NULL.
 */
const char *lc_ranking_query_id(const struct LcRanking *ranking);

/*
 Case id at rank `i` (0-based), or NULL when out of range.

 # Safety
 `ranking` must be a live handle or NULL.
 */
const char *lc_ranking_case_id(const struct LcRanking *ranking, uintptr_t i);

/*
 Fused score at rank `i`, or NaN when out of range.

 # Safety
 `ranking` must be a live handle or NULL.
 */
double lc_ranking_score(const struct LcRanking *ranking, uintptr_t i);

/*
 # Safety
 `ranking` must come from [`lc_retrieve`] or be NULL.
 */
void lc_ranking_free(struct LcRanking *ranking);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEXCOURT_H */

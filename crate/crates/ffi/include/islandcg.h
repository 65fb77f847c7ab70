#ifndef ISLANDCG_H
#define ISLANDCG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IslandcgStatus {
  ISLANDCG_STATUS_OK = 0,
  ISLANDCG_STATUS_NULL_POINTER = 1,
  ISLANDCG_STATUS_INVALID_UTF8 = 2,
  ISLANDCG_STATUS_IO = 3,
  ISLANDCG_STATUS_NOT_FOUND = 4,
  ISLANDCG_STATUS_INVALID_ARGUMENT = 5,
  ISLANDCG_STATUS_PANIC = 6,
} IslandcgStatus;

/*
 A linked call tree with its DOT and edge-list renderings.
 */
typedef struct IslandcgGraph IslandcgGraph;

/*
 A loaded keyword table.
 */
typedef struct IslandcgLexicon IslandcgLexicon;

/*
 Facts and definitions extracted from one dump.
 */
typedef struct IslandcgResult IslandcgResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or null if none. The
 pointer stays valid until the next failing call on the same thread.
 */
const char *islandcg_last_error_message(void);

/*
 Loads a built-in table (`cpp`, `objc`) or a table file by path.

 # Safety
 `name_or_path` must be a NUL-terminated string; `out` must be writable.
 */
enum IslandcgStatus islandcg_lexicon_load(const char *name_or_path, struct IslandcgLexicon **out);

/*
 # Safety
 `lexicon` must come from `islandcg_lexicon_load` and not be freed twice.
 */
void islandcg_lexicon_free(struct IslandcgLexicon *lexicon);

/*
 Extracts facts from an in-memory dump. `file_name` is recorded in every
 fact; `data` may be null when `len` is 0.

 # Safety
 `data` must point to `len` readable bytes; other pointers as documented.
 */
enum IslandcgStatus islandcg_extract_bytes(const struct IslandcgLexicon *lexicon,
                                           const uint8_t *data,
                                           size_t len,
                                           const char *file_name,
                                           struct IslandcgResult **out);

/*
 Reads and extracts one dump file.

 # Safety
 Pointers as documented on `islandcg_extract_bytes`.
 */
enum IslandcgStatus islandcg_extract_file(const struct IslandcgLexicon *lexicon,
                                          const char *path,
                                          struct IslandcgResult **out);

/*
 # Safety
 `result` must be a live handle or null (null yields 0).
 */
size_t islandcg_result_fact_count(const struct IslandcgResult *result);

/*
 # Safety
 `result` must be a live handle or null (null yields 0).
 */
size_t islandcg_result_def_count(const struct IslandcgResult *result);

/*
 # Safety
 `result` must be a live handle or null (null yields 0).
 */
size_t islandcg_result_warning_count(const struct IslandcgResult *result);

/*
 Writes `calls.csv` and `defs.csv` into `dir`, creating it if needed.

 # Safety
 `result` must be a live handle; `dir` a NUL-terminated string.
 */
enum IslandcgStatus islandcg_result_write_facts(const struct IslandcgResult *result,
                                                const char *dir);

/*
 # Safety
 `result` must come from an extract call and not be freed twice.
 */
void islandcg_result_free(struct IslandcgResult *result);

/*
 Links `count` results into a call tree. `root` may be null for the
 default root; `max_depth` bounds expansion.

 # Safety
 `results` must point to `count` live result handles.
 */
enum IslandcgStatus islandcg_link(const struct IslandcgResult *const *results,
                                  size_t count,
                                  const char *root,
                                  size_t max_depth,
                                  struct IslandcgGraph **out);

/*
 # Safety
 `graph` must be a live handle or null (null yields 0).
 */
size_t islandcg_graph_node_count(const struct IslandcgGraph *graph);

/*
 DOT text for the graph; release with `islandcg_string_free`.

 # Safety
 `graph` must be a live handle; `out` must be writable.
 */
enum IslandcgStatus islandcg_graph_dot(const struct IslandcgGraph *graph, char **out);

/*
 Edge-list CSV for the graph; release with `islandcg_string_free`.

 # Safety
 `graph` must be a live handle; `out` must be writable.
 */
enum IslandcgStatus islandcg_graph_edges_csv(const struct IslandcgGraph *graph, char **out);

/*
 # Safety
 `graph` must come from `islandcg_link` and not be freed twice.
 */
void islandcg_graph_free(struct IslandcgGraph *graph);

/*
 # Safety
 `s` must be a string returned by this library, or null.
 */
void islandcg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISLANDCG_H */

#ifndef CFI_FORGE_H
#define CFI_FORGE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * `value` reported by [`cfi_solve`] when Spoiler (or Prover) never wins.
 */
#define CFI_VALUE_INFINITE -1

/**
 * Games accepted by [`cfi_solve`].
 */
typedef enum CfiGame {
  CFI_GAME_PEBBLE = 0,
  CFI_GAME_BLOCKING = 1,
  CFI_GAME_PROVER_DELAYER = 2,
  CFI_GAME_REFUTATION = 3,
} CfiGame;

/**
 * Result codes. Zero is success.
 */
typedef enum CfiStatus {
  CFI_STATUS_OK = 0,
  CFI_STATUS_NULL_POINTER = 1,
  CFI_STATUS_INVALID_ARGUMENT = 2,
  CFI_STATUS_MALFORMED = 3,
  CFI_STATUS_RESOURCE_CAP = 4,
  CFI_STATUS_VIOLATION = 5,
  CFI_STATUS_IO = 6,
  CFI_STATUS_PANIC = 7,
} CfiStatus;

/**
 * Opaque colored graph.
 */
typedef struct CfiGraph CfiGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next call into this library on the same thread.
 */
const char *cfi_last_error(void);

/**
 * Library version, a static nul-terminated string.
 */
const char *cfi_version(void);

/**
 * Builds a graph on `n` vertices. `colors` holds `n` entries (null means all
 * zero); `edges` holds `2 * n_edges` endpoints.
 *
 * # Safety
 * Pointers must be valid for the given lengths; `out` must be writable.
 */
enum CfiStatus cfi_graph_new(size_t n,
                             const uint32_t *colors,
                             const size_t *edges,
                             size_t n_edges,
                             struct CfiGraph **out);

/**
 * Parses a graph document (the JSON written by `cfi-forge generate`).
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum CfiStatus cfi_graph_from_json(const char *json, struct CfiGraph **out);

/**
 * Serializes a graph as a graph document. Free the result with [`cfi_string_free`].
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum CfiStatus cfi_graph_to_json(const struct CfiGraph *g, char **out);

/**
 * Number of vertices, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t cfi_graph_order(const struct CfiGraph *g);

/**
 * Number of edges, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t cfi_graph_size(const struct CfiGraph *g);

/**
 * # Safety
 * `g` must be null or a handle from this library, not yet freed.
 */
void cfi_graph_free(struct CfiGraph *g);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void cfi_string_free(char *s);

/**
 * CFI graph over a connected base graph on `n` vertices, with the edges
 * listed in `twisted` (as endpoint pairs) labeled 1.
 *
 * # Safety
 * Pointers must be valid for the given lengths; `out` must be writable.
 */
enum CfiStatus cfi_build_cfi(size_t n,
                             const size_t *edges,
                             size_t n_edges,
                             const size_t *twisted,
                             size_t n_twisted,
                             struct CfiGraph **out);

/**
 * The twinned graph: every vertex doubled into an adjacent pair.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum CfiStatus cfi_twinned(const struct CfiGraph *g, struct CfiGraph **out);

/**
 * Exact isomorphism test by backtracking; intended for small graphs.
 *
 * # Safety
 * `g`, `h` must be live handles; `out` must be writable.
 */
enum CfiStatus cfi_isomorphic(const struct CfiGraph *g, const struct CfiGraph *h, bool *out);

/**
 * Solves `game` on `(g, h)` with `k` pebbles (or width `k` for refutations).
 * `value` receives rounds, Delayer points or refutation size, or
 * [`CFI_VALUE_INFINITE`].
 *
 * # Safety
 * `g`, `h` must be live handles; `value` must be writable.
 */
enum CfiStatus cfi_solve(enum CfiGame game,
                         const struct CfiGraph *g,
                         const struct CfiGraph *h,
                         size_t k,
                         int64_t *value);

/**
 * ISO(g, h) in DIMACS. Free the result with [`cfi_string_free`].
 *
 * # Safety
 * `g`, `h` must be live handles; `out` must be writable.
 */
enum CfiStatus cfi_iso_dimacs(const struct CfiGraph *g, const struct CfiGraph *h, char **out);

/**
 * Runs `generate` and writes its bundle to `dir`. `w = 0` picks the smallest
 * feasible window; `desk_q = 0` builds the full-size grid. A grid above the
 * size guard fails with `ResourceCap` unless `huge` is set.
 *
 * # Safety
 * `dir` must be a nul-terminated path.
 */
enum CfiStatus cfi_generate(size_t k,
                            size_t t,
                            uint64_t w,
                            uint64_t desk_q,
                            uint64_t seed,
                            bool dimacs,
                            bool huge,
                            const char *dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CFI_FORGE_H */

#ifndef PERISIM_H
#define PERISIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PerisimStatus {
  PERISIM_STATUS_OK = 0,
  PERISIM_STATUS_NULL_POINTER = 1,
  PERISIM_STATUS_INVALID_ARGUMENT = 2,
  PERISIM_STATUS_INSTANCE_TOO_LARGE = 3,
  PERISIM_STATUS_PARSE = 4,
  PERISIM_STATUS_IO = 5,
  PERISIM_STATUS_DISCONNECTED = 6,
  PERISIM_STATUS_BUFFER_TOO_SMALL = 7,
  PERISIM_STATUS_INTERNAL = 8,
} PerisimStatus;

typedef enum PerisimGraphModel {
  PERISIM_GRAPH_MODEL_ERDOS_RENYI = 0,
  PERISIM_GRAPH_MODEL_RANDOM_REGULAR = 1,
  PERISIM_GRAPH_MODEL_BARABASI_ALBERT = 2,
  PERISIM_GRAPH_MODEL_WATTS_STROGATZ = 3,
} PerisimGraphModel;

/**
 * Opaque graph handle.
 */
typedef struct PerisimTopology PerisimTopology;

/**
 * Victim-discovery schedule; see `perisim_liveness_schedule`.
 */
typedef struct PerisimSchedule {
  double epsilon;
  uint32_t rounds;
  double delta1;
  double delta2;
  double eps1;
  double eps2;
  double gamma;
  double mu;
  double zeta;
  double total_time;
} PerisimSchedule;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length plus one,
 * or 0 when there is no pending error.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t perisim_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *perisim_version(void);

/**
 * Generates a connected random graph; `model` is a `PerisimGraphModel`
 * value.
 *
 * # Safety
 * `out` must be a valid pointer to write the new handle to.
 */
enum PerisimStatus perisim_topology_generate(uint32_t model,
                                             size_t node_count,
                                             double avg_degree,
                                             uint64_t seed,
                                             struct PerisimTopology **out);

/**
 * Builds a graph from parallel endpoint arrays. `weights` may be null for
 * unit weights.
 *
 * # Safety
 * `us`, `vs` (and `weights` when non-null) must each hold `edge_count`
 * elements; `out` must be writable.
 */
enum PerisimStatus perisim_topology_from_edges(size_t node_count,
                                               const uint32_t *us,
                                               const uint32_t *vs,
                                               const double *weights,
                                               size_t edge_count,
                                               struct PerisimTopology **out);

/**
 * New handle with `count` extra hub nodes of `degree` random links each.
 *
 * # Safety
 * `topology` must be a live handle; `out` must be writable.
 */
enum PerisimStatus perisim_topology_enrich_hubs(const struct PerisimTopology *topology,
                                                size_t count,
                                                size_t degree,
                                                uint64_t seed,
                                                struct PerisimTopology **out);

/**
 * # Safety
 * `topology` must be a live handle and `out` writable.
 */
enum PerisimStatus perisim_topology_node_count(const struct PerisimTopology *topology, size_t *out);

/**
 * # Safety
 * `topology` must be a live handle and `out` writable.
 */
enum PerisimStatus perisim_topology_edge_count(const struct PerisimTopology *topology, size_t *out);

/**
 * Releases a handle. Null is a no-op.
 *
 * # Safety
 * `topology` must be null or a handle not yet freed.
 */
void perisim_topology_free(struct PerisimTopology *topology);

/**
 * Adversarial advantage of `peers` over the given source and destination
 * sets, with penalty `tau`.
 *
 * # Safety
 * Arrays must hold the stated number of elements; `out_value` writable.
 */
enum PerisimStatus perisim_advantage(const struct PerisimTopology *topology,
                                     const uint32_t *sources,
                                     size_t source_count,
                                     const uint32_t *destinations,
                                     size_t destination_count,
                                     const uint32_t *peers,
                                     size_t peer_count,
                                     double tau,
                                     double *out_value);

/**
 * Greedy peer selection of size `k`; writes the peers in selection order to
 * `out_peers`, which must have room for `out_capacity >= k` ids.
 *
 * # Safety
 * Arrays must hold the stated number of elements; outputs writable.
 */
enum PerisimStatus perisim_greedy(const struct PerisimTopology *topology,
                                  const uint32_t *sources,
                                  size_t source_count,
                                  const uint32_t *destinations,
                                  size_t destination_count,
                                  size_t k,
                                  double tau,
                                  uint32_t *out_peers,
                                  size_t out_capacity,
                                  double *out_value);

/**
 * Discovery schedule for failure probability `epsilon`.
 *
 * # Safety
 * `out` must be writable.
 */
enum PerisimStatus perisim_liveness_schedule(double epsilon,
                                             double lambda,
                                             double nu,
                                             double q,
                                             uint32_t d,
                                             struct PerisimSchedule *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PERISIM_H */

#ifndef VORPOLY_H
#define VORPOLY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VpStatus {
  VP_STATUS_OK = 0,
  VP_STATUS_NULL_POINTER = 1,
  VP_STATUS_INVALID_ARGUMENT = 2,
  // Degenerate input, e.g. all points collinear.
  VP_STATUS_DEGENERATE = 3,
  // The answer depends on tiles cut by the window; enlarge it.
  VP_STATUS_CENSORED = 4,
  // Request above an enumeration guard.
  VP_STATUS_CAPACITY = 5,
  VP_STATUS_INTERNAL = 99,
} VpStatus;

// Opaque tessellation handle.
typedef struct VpTessellation VpTessellation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failing call on this thread; empty after success.
// The pointer stays valid until the next call on the same thread.
const char *vp_last_error(void);

// Library version as a static NUL-terminated string.
const char *vp_version(void);

// Samples a homogeneous Poisson process of intensity `lambda` on
// `[-half, half]^2` and builds its tessellation.
//
// # Safety
// `out` must be valid for writes.
enum VpStatus vp_tessellation_sample(double lambda,
                                     double half,
                                     uint64_t seed,
                                     uint64_t replicate,
                                     struct VpTessellation **out);

// Builds a tessellation from `n` points `(xs[i], ys[i])` inside the window
// `[x0, x1) x [y0, y1)`.
//
// # Safety
// `xs` and `ys` must point to `n` readable values; `out` must be valid for
// writes.
enum VpStatus vp_tessellation_from_points(const double *xs,
                                          const double *ys,
                                          uintptr_t n,
                                          double x0,
                                          double y0,
                                          double x1,
                                          double y1,
                                          struct VpTessellation **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `t` must come from this library and not be used afterwards.
void vp_tessellation_free(struct VpTessellation *t);

// Number of generators.
//
// # Safety
// `t` must be a live handle and `out` valid for writes.
enum VpStatus vp_tessellation_len(const struct VpTessellation *t, uintptr_t *out);

// Coordinates of generator `v`.
//
// # Safety
// `t` must be a live handle and `out_xy` valid for two writes.
enum VpStatus vp_tessellation_point(const struct VpTessellation *t, uintptr_t v, double *out_xy);

// Generator whose tile contains `(x, y)`.
//
// # Safety
// `t` must be a live handle and `out` valid for writes.
enum VpStatus vp_tessellation_nearest(const struct VpTessellation *t,
                                      double x,
                                      double y,
                                      uintptr_t *out);

// Number of unit boxes met by the polyomino made of the `n` listed tiles.
//
// # Safety
// `t` must be a live handle, `generators` must point to `n` values and
// `out` must be valid for writes.
enum VpStatus vp_polyomino_box_count(const struct VpTessellation *t,
                                     const uintptr_t *generators,
                                     uintptr_t n,
                                     uintptr_t *out);

// Fewest (`maximize == 0`) or most unit boxes met by a polyomino of `r`
// tiles containing the tile of the origin. `heuristic` is set to 1 when
// the value comes from the beam search above the exact guard.
//
// # Safety
// `t` must be a live handle; `value` and `heuristic` valid for writes.
enum VpStatus vp_extremal_box_count(const struct VpTessellation *t,
                                    uintptr_t r,
                                    int32_t maximize,
                                    uint64_t *value,
                                    int32_t *heuristic);

// Largest number of tiles met by a segment from the origin to a point of
// norm at most `s`.
//
// # Safety
// `t` must be a live handle and `out` valid for writes.
enum VpStatus vp_max_segment_tiles(const struct VpTessellation *t, double s, uintptr_t *out);

// Counts of planar lattice animals containing the origin of sizes
// `1..=s_max`, written to `out[0..s_max]`.
//
// # Safety
// `out` must be valid for `s_max` writes.
enum VpStatus vp_count_animals(uintptr_t s_max, uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VORPOLY_H */

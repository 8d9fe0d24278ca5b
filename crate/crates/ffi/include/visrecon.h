#ifndef VISRECON_H
#define VISRECON_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum VrStatus {
  VR_STATUS_OK = 0,
  VR_STATUS_NULL_POINTER = 1,
  VR_STATUS_INVALID_INPUT = 2,
  VR_STATUS_INTERNAL = 3,
  VR_STATUS_PANIC = 4,
} VrStatus;

/**
 * Opaque colormap.
 */
typedef struct VrColormap VrColormap;

/**
 * Opaque 2D scalar grid.
 */
typedef struct VrGrid2D VrGrid2D;

/**
 * Opaque 3D scalar grid.
 */
typedef struct VrGrid3D VrGrid3D;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call on the same thread.
 */
const char *vr_last_error(void);

/**
 * CIEDE2000 difference between two CIELAB colors given as `[L, a, b]`.
 *
 * # Safety
 * `lab1` and `lab2` must each point to three doubles.
 */
enum VrStatus vr_ciede2000(const double *lab1, const double *lab2, double *out);

/**
 * Grid with `nx * ny` values in x-fastest order over `[0, 1]²`.
 *
 * # Safety
 * `values` must point to `nx * ny` doubles; `out` must be writable.
 */
enum VrStatus vr_grid2d_new(uintptr_t nx,
                            uintptr_t ny,
                            const double *values,
                            struct VrGrid2D **out);

/**
 * # Safety
 * `g` must be null or a handle from [`vr_grid2d_new`] not yet freed.
 */
void vr_grid2d_free(struct VrGrid2D *g);

/**
 * The synthetic plume on an `n³` grid.
 *
 * # Safety
 * `out` must be writable.
 */
enum VrStatus vr_grid3d_plume(uintptr_t n, struct VrGrid3D **out);

/**
 * Writes the value range of a 3D grid.
 *
 * # Safety
 * `g` must be a live handle; `min` and `max` must be writable.
 */
enum VrStatus vr_grid3d_range(const struct VrGrid3D *g, double *min, double *max);

/**
 * # Safety
 * `g` must be null or a handle not yet freed.
 */
void vr_grid3d_free(struct VrGrid3D *g);

/**
 * Bundled colormap by name.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum VrStatus vr_colormap_bundled(const char *name, struct VrColormap **out);

/**
 * Colormap from `{"name": ..., "colors": [[r, g, b], ...]}` JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum VrStatus vr_colormap_from_json(const char *json, struct VrColormap **out);

/**
 * # Safety
 * `cm` must be null or a handle not yet freed.
 */
void vr_colormap_free(struct VrColormap *cm);

/**
 * sRGB color at legend position `t` in [0, 1], written as three doubles.
 *
 * # Safety
 * `cm` must be a live handle; `rgb` must point to three writable doubles.
 */
enum VrStatus vr_colormap_sample(const struct VrColormap *cm, double t, double *rgb);

/**
 * Number of just-noticeable steps along the colormap.
 *
 * # Safety
 * `cm` must be a live handle; `out` must be writable.
 */
enum VrStatus vr_colormap_discriminative_power(const struct VrColormap *cm, double *out);

/**
 * L2 error of decoding the plain colormapped rendering of `g`.
 *
 * # Safety
 * `g` and `cm` must be live handles; `l2` must be writable.
 */
enum VrStatus vr_evaluate_colormap_2d(const struct VrGrid2D *g,
                                      const struct VrColormap *cm,
                                      double *l2);

/**
 * Reconstruction-selected isovalue among `k` evenly spaced candidates plus
 * the three reference selectors' values, with its L2 error.
 *
 * # Safety
 * `g` must be a live handle; `isovalue` and `error` must be writable.
 */
enum VrStatus vr_select_isovalue(const struct VrGrid2D *g,
                                 uintptr_t k,
                                 uint64_t seed,
                                 double *isovalue,
                                 double *error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VISRECON_H */

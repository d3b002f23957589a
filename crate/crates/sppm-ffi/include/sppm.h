#ifndef SPPM_H
#define SPPM_H

/* Generated by cbindgen from sppm-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of the C API.
 */
typedef enum SppmStatus {
  SPPM_STATUS_OK = 0,
  /**
   * A pointer was null or a parameter out of range.
   */
  SPPM_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Cell generation did not converge.
   */
  SPPM_STATUS_GENERATION_FAILED = 2,
  /**
   * File input/output failed.
   */
  SPPM_STATUS_IO = 3,
  /**
   * Numerical analysis failed.
   */
  SPPM_STATUS_ANALYSIS = 4,
  /**
   * An internal invariant was violated.
   */
  SPPM_STATUS_INTERNAL = 5,
} SppmStatus;

/**
 * Opaque unit-cell handle: the generated geometry plus its implicit field.
 */
typedef struct SppmUnit SppmUnit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message of the current thread. Valid until the next failing
 * call on this thread; never null.
 */
const char *sppm_last_error_message(void);

/**
 * Generates one unit cell at a target porosity.
 *
 * `resolution` is the porosity measurement resolution per axis (64 in the
 * reference pipeline; smaller is faster and coarser). Returns null on
 * failure.
 *
 * # Safety
 *
 * `status` must be null or point to writable memory.
 */
struct SppmUnit *sppm_unit_generate(double target_porosity,
                                    double omega,
                                    double mu,
                                    double level_c,
                                    uint64_t seed,
                                    uint32_t resolution,
                                    enum SppmStatus *status);

/**
 * Loads a unit cell from a design file.
 *
 * # Safety
 *
 * `path` must be a valid NUL-terminated string; `status` null or writable.
 */
struct SppmUnit *sppm_unit_load(const char *path, enum SppmStatus *status);

/**
 * Writes a unit cell to a design file (byte-stable for a given cell).
 *
 * # Safety
 *
 * `unit` must be a live handle or null; `path` a valid NUL-terminated string.
 */
enum SppmStatus sppm_unit_save(const struct SppmUnit *unit, const char *path);

/**
 * Measured porosity of the cell.
 *
 * # Safety
 *
 * `unit` must be a live handle or null.
 */
double sppm_unit_porosity(const struct SppmUnit *unit);

/**
 * Surface-to-interior band depth the design settled on.
 *
 * # Safety
 *
 * `unit` must be a live handle or null.
 */
double sppm_unit_band_depth(const struct SppmUnit *unit);

/**
 * # Safety
 *
 * `unit` must be a live handle or null.
 */
uintptr_t sppm_unit_pore_count(const struct SppmUnit *unit);

/**
 * # Safety
 *
 * `unit` must be a live handle or null.
 */
uintptr_t sppm_unit_tunnel_count(const struct SppmUnit *unit);

/**
 * Combined implicit field value at a point in cell coordinates.
 *
 * # Safety
 *
 * `unit` must be a live handle or null.
 */
double sppm_unit_field_value(const struct SppmUnit *unit, double x, double y, double z);

/**
 * 1 when the point classifies as solid material, 0 otherwise.
 *
 * # Safety
 *
 * `unit` must be a live handle or null.
 */
int32_t sppm_unit_is_solid(const struct SppmUnit *unit, double x, double y, double z);

/**
 * Effective stiffness by periodic voxel homogenization.
 *
 * `out_tensor` receives the 6x6 matrix row-major in engineering (Voigt)
 * order (11, 22, 33, 23, 13, 12).
 *
 * # Safety
 *
 * `unit` must be a live handle or null; `out_tensor` null or a 36-element
 * writable array.
 */
enum SppmStatus sppm_unit_homogenize(const struct SppmUnit *unit,
                                     double young,
                                     double poisson,
                                     uint32_t resolution,
                                     double *out_tensor);

/**
 * Frees a handle; null is a no-op.
 *
 * # Safety
 *
 * `unit` must have come from this library and not be freed twice.
 */
void sppm_unit_free(struct SppmUnit *unit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPPM_H */

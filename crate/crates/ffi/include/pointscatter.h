/* Generated by cbindgen from src/lib.rs; do not edit. */

#ifndef POINTSCATTER_H
#define POINTSCATTER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_INVALID_ARGUMENT = 2,
  PS_STATUS_NUMERICAL = 3,
  PS_STATUS_PANIC = 4,
} PsStatus;

typedef enum {
  PS_GEOMETRY_KIND_LINE = 0,
  PS_GEOMETRY_KIND_HALF_LINE = 1,
  PS_GEOMETRY_KIND_BOX = 2,
  PS_GEOMETRY_KIND_RING = 3,
} PsGeometryKind;

typedef enum {
  PS_WALL_DIRICHLET = 0,
  PS_WALL_NEUMANN = 1,
} PsWall;

/**
 * Opaque lattice.
 */
typedef struct PsLattice PsLattice;

/**
 * Opaque list of roots: eigen-wavenumbers or bound-state `kappa`.
 */
typedef struct PsRoots PsRoots;

typedef struct {
  double a;
  double b;
  double c;
  double d;
  double omega_phase;
  double y;
} PsInteraction;

typedef struct {
  double r_plus_re;
  double r_plus_im;
  double r_minus_re;
  double r_minus_im;
  double t_plus_re;
  double t_plus_im;
  double t_minus_re;
  double t_minus_im;
} PsAmplitudes;

/**
 * `length` is read for boxes and rings, `left_wall` for half-lines and
 * boxes, `right_wall` for boxes.
 */
typedef struct {
  PsGeometryKind kind;
  double length;
  PsWall left_wall;
  PsWall right_wall;
} PsGeometry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *ps_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ps_version(void);

/**
 * Builds a lattice from `count` interactions. Positions need not be sorted.
 *
 * # Safety
 * `items` must point to `count` values and `out` must be writable.
 */
PsStatus ps_lattice_new(const PsInteraction *items, size_t count, PsLattice **out);

/**
 * # Safety
 * `lattice` must be null or a handle from `ps_lattice_new` not yet freed.
 */
void ps_lattice_free(PsLattice *lattice);

/**
 * # Safety
 * `lattice` must be a live handle.
 */
size_t ps_lattice_len(const PsLattice *lattice);

/**
 * Reflection and transmission of the whole lattice at real `k`, with
 * reflections referenced at the outermost sites.
 *
 * # Safety
 * `lattice` must be a live handle and `out` writable.
 */
PsStatus ps_amplitudes(const PsLattice *lattice, double k, PsAmplitudes *out);

/**
 * `G(x_f, x_i; k)` with complex `k = k_re + i k_im`.
 *
 * # Safety
 * `lattice` must be a live handle; `out_re` and `out_im` writable.
 */
PsStatus ps_green(PsGeometry geometry_,
                  const PsLattice *lattice,
                  double x_f,
                  double x_i,
                  double k_re,
                  double k_im,
                  double *out_re,
                  double *out_im);

/**
 * Box or ring eigen-wavenumbers in `(k_min, k_max)`.
 *
 * # Safety
 * `lattice` must be a live handle and `out` writable.
 */
PsStatus ps_find_eigenvalues(PsGeometry geometry_,
                             const PsLattice *lattice,
                             double k_min,
                             double k_max,
                             PsRoots **out);

/**
 * Bound states `E = -kappa^2`, one entry per state, with `kappa` in
 * `(0, kappa_max]`.
 *
 * # Safety
 * `lattice` must be a live handle and `out` writable.
 */
PsStatus ps_find_bound_states(PsGeometry geometry_,
                              const PsLattice *lattice,
                              double kappa_max,
                              PsRoots **out);

/**
 * # Safety
 * `roots` must be a live handle.
 */
size_t ps_roots_len(const PsRoots *roots);

/**
 * Reads entry `index`; any output pointer may be null.
 *
 * # Safety
 * `roots` must be a live handle; non-null outputs writable.
 */
PsStatus ps_roots_get(const PsRoots *roots,
                      size_t index,
                      double *value,
                      size_t *multiplicity,
                      double *residual);

/**
 * # Safety
 * `roots` must be null or a handle not yet freed.
 */
void ps_roots_free(PsRoots *roots);

/**
 * `rho(E)` over `[x_lo, x_hi]` at `count` energies with broadening `eta`.
 *
 * # Safety
 * `energies` and `out` must each hold `count` values.
 */
PsStatus ps_density_of_states(PsGeometry geometry_,
                              const PsLattice *lattice,
                              const double *energies,
                              size_t count,
                              double eta,
                              double x_lo,
                              double x_hi,
                              double *out);

/**
 * Evolves a Gaussian packet; `out_re`/`out_im` receive `n_times * n_grid`
 * values in time-major order.
 *
 * # Safety
 * Input arrays must hold the stated counts; outputs `n_times * n_grid`.
 */
PsStatus ps_evolve(PsGeometry geometry_,
                   const PsLattice *lattice,
                   double x0,
                   double k0,
                   double sigma,
                   const double *times,
                   size_t n_times,
                   const double *grid,
                   size_t n_grid,
                   double *out_re,
                   double *out_im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POINTSCATTER_H */

#ifndef MINSEC_H
#define MINSEC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MinsecStatus {
  MINSEC_STATUS_OK = 0,
  MINSEC_STATUS_NULL_POINTER = 1,
  MINSEC_STATUS_INVALID_ARGUMENT = 2,
  MINSEC_STATUS_MESH = 3,
  MINSEC_STATUS_SOLVER = 4,
  MINSEC_STATUS_BUFFER_TOO_SMALL = 5,
  MINSEC_STATUS_PANIC = 6,
} MinsecStatus;

/**
 * Opaque triangle mesh.
 */
typedef struct MinsecMesh MinsecMesh;

/**
 * Opaque solve result.
 */
typedef struct MinsecSolution MinsecSolution;

/**
 * Solver parameters; start from [`minsec_params_default`].
 */
typedef struct MinsecParams {
  uint32_t degree;
  double lambda;
  double radius;
  size_t fiber_n;
  double epsilon;
  size_t max_iters;
  double mu;
  double nu;
} MinsecParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *minsec_last_error(void);

const char *minsec_version(void);

struct MinsecParams minsec_params_default(void);

/**
 * Builds a mesh from `3·n_vertices` coordinates and `3·n_faces` indices.
 *
 * # Safety
 * `positions` and `triangles` must point to arrays of the stated lengths;
 * `out` must be writable.
 */
enum MinsecStatus minsec_mesh_from_arrays(const double *positions,
                                          size_t n_vertices,
                                          const uint32_t *triangles,
                                          size_t n_faces,
                                          struct MinsecMesh **out);

/**
 * Loads an OBJ file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum MinsecStatus minsec_mesh_load_obj(const char *path, struct MinsecMesh **out);

/**
 * # Safety
 * `mesh` must come from this library and not be freed twice. NULL is ignored.
 */
void minsec_mesh_free(struct MinsecMesh *mesh);

/**
 * # Safety
 * `mesh` must be a live handle or NULL (returns 0).
 */
size_t minsec_mesh_vertex_count(const struct MinsecMesh *mesh);

/**
 * # Safety
 * `mesh` must be a live handle or NULL (returns 0).
 */
size_t minsec_mesh_face_count(const struct MinsecMesh *mesh);

/**
 * Full bundle solve with tangent boundary alignment. A run that hits the
 * iteration cap still returns `MINSEC_STATUS_OK`; query
 * [`minsec_solution_converged`].
 *
 * # Safety
 * `mesh` and `params` must be valid; `out` must be writable.
 */
enum MinsecStatus minsec_solve(const struct MinsecMesh *mesh,
                               const struct MinsecParams *params,
                               struct MinsecSolution **out);

/**
 * Reduced (vertically symmetric) solve; only Γ and singularities are
 * filled, angles are empty.
 *
 * # Safety
 * Same as [`minsec_solve`].
 */
enum MinsecStatus minsec_solve_reduced(const struct MinsecMesh *mesh,
                                       const struct MinsecParams *params,
                                       struct MinsecSolution **out);

/**
 * # Safety
 * `sol` must come from this library and not be freed twice. NULL is ignored.
 */
void minsec_solution_free(struct MinsecSolution *sol);

/**
 * # Safety
 * `sol` must be a live handle or NULL.
 */
bool minsec_solution_converged(const struct MinsecSolution *sol);

/**
 * # Safety
 * `sol` must be a live handle or NULL.
 */
size_t minsec_solution_iterations(const struct MinsecSolution *sol);

/**
 * # Safety
 * `sol` must be a live handle or NULL (returns NaN).
 */
double minsec_solution_objective(const struct MinsecSolution *sol);

/**
 * # Safety
 * `sol` must be a live handle or NULL.
 */
size_t minsec_solution_vertex_count(const struct MinsecSolution *sol);

/**
 * # Safety
 * `sol` must be a live handle or NULL.
 */
size_t minsec_solution_singularity_count(const struct MinsecSolution *sol);

/**
 * # Safety
 * `sol` must be a live handle or NULL.
 */
size_t minsec_solution_edge_count(const struct MinsecSolution *sol);

/**
 * Per-vertex degree-d field angle in the vertex frame, radians; NaN at
 * vertices where the field is undefined.
 *
 * # Safety
 * `out` must hold `len` doubles.
 */
enum MinsecStatus minsec_solution_angles(const struct MinsecSolution *sol, double *out, size_t len);

/**
 * # Safety
 * `out` must hold `len` doubles.
 */
enum MinsecStatus minsec_solution_confidence(const struct MinsecSolution *sol,
                                             double *out,
                                             size_t len);

/**
 * Γ per interior edge.
 *
 * # Safety
 * `out` must hold `len` doubles.
 */
enum MinsecStatus minsec_solution_gamma(const struct MinsecSolution *sol, double *out, size_t len);

/**
 * Five doubles per singularity: `x y z index residual`.
 *
 * # Safety
 * `out` must hold `len` doubles.
 */
enum MinsecStatus minsec_solution_singularities(const struct MinsecSolution *sol,
                                                double *out,
                                                size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MINSEC_H */

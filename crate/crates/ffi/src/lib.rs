//! C ABI over `minsec-core`.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `*_free`. Every fallible call returns a [`MinsecStatus`] and
//! leaves a message for [`minsec_last_error`] on failure. Panics are caught
//! at the boundary and reported as `MINSEC_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use minsec_core::bundle::BoundarySpec;
use minsec_core::extract::{extract_field, extract_singularities, ClusterParams};
use minsec_core::mesh::{load_mesh, TriMesh, Vec3};
use minsec_core::reduced::{effective_lambda, solve_reduced_on_mesh, ReducedConfig};
use minsec_core::solver::{run_admm, Lambda, SolverConfig};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MinsecStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Mesh = 3,
    Solver = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Solver parameters; start from [`minsec_params_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinsecParams {
    pub degree: u32,
    pub lambda: f64,
    pub radius: f64,
    pub fiber_n: usize,
    pub epsilon: f64,
    pub max_iters: usize,
    pub mu: f64,
    pub nu: f64,
}

/// Opaque triangle mesh.
pub struct MinsecMesh {
    mesh: TriMesh,
}

/// Opaque solve result.
pub struct MinsecSolution {
    angles: Vec<f64>,
    confidence: Vec<f64>,
    /// `x y z index residual` per cluster.
    singularities: Vec<[f64; 5]>,
    gamma: Vec<f64>,
    converged: bool,
    iterations: usize,
    objective: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn guard(f: impl FnOnce() -> Result<(), (MinsecStatus, String)>) -> MinsecStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MinsecStatus::Ok,
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            MinsecStatus::Panic
        }
    }
}

fn null() -> (MinsecStatus, String) {
    (MinsecStatus::NullPointer, "null pointer argument".into())
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn minsec_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn minsec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn minsec_params_default() -> MinsecParams {
    let s = SolverConfig::default();
    MinsecParams {
        degree: s.d,
        lambda: 1.0,
        radius: s.r,
        fiber_n: s.n,
        epsilon: s.epsilon,
        max_iters: s.max_iters,
        mu: s.mu,
        nu: s.nu,
    }
}

/// Builds a mesh from `3·n_vertices` coordinates and `3·n_faces` indices.
///
/// # Safety
/// `positions` and `triangles` must point to arrays of the stated lengths;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn minsec_mesh_from_arrays(
    positions: *const f64,
    n_vertices: usize,
    triangles: *const u32,
    n_faces: usize,
    out: *mut *mut MinsecMesh,
) -> MinsecStatus {
    guard(|| {
        if positions.is_null() || triangles.is_null() || out.is_null() {
            return Err(null());
        }
        let p = std::slice::from_raw_parts(positions, 3 * n_vertices);
        let t = std::slice::from_raw_parts(triangles, 3 * n_faces);
        let pos = p.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
        let tri = t
            .chunks_exact(3)
            .map(|c| [c[0] as usize, c[1] as usize, c[2] as usize])
            .collect();
        let mesh = TriMesh::new(pos, tri).map_err(|e| (MinsecStatus::Mesh, e.to_string()))?;
        *out = Box::into_raw(Box::new(MinsecMesh { mesh }));
        Ok(())
    })
}

/// Loads an OBJ file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn minsec_mesh_load_obj(path: *const c_char, out: *mut *mut MinsecMesh) -> MinsecStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return Err(null());
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (MinsecStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        let mesh = load_mesh(path).map_err(|e| (MinsecStatus::Mesh, e.to_string()))?;
        *out = Box::into_raw(Box::new(MinsecMesh { mesh }));
        Ok(())
    })
}

/// # Safety
/// `mesh` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn minsec_mesh_free(mesh: *mut MinsecMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// # Safety
/// `mesh` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn minsec_mesh_vertex_count(mesh: *const MinsecMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.n_vertices())
}

/// # Safety
/// `mesh` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn minsec_mesh_face_count(mesh: *const MinsecMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.n_faces())
}

/// Full bundle solve with tangent boundary alignment. A run that hits the
/// iteration cap still returns `MINSEC_STATUS_OK`; query
/// [`minsec_solution_converged`].
///
/// # Safety
/// `mesh` and `params` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn minsec_solve(
    mesh: *const MinsecMesh,
    params: *const MinsecParams,
    out: *mut *mut MinsecSolution,
) -> MinsecStatus {
    guard(|| {
        let (Some(m), Some(p)) = (mesh.as_ref(), params.as_ref()) else {
            return Err(null());
        };
        if out.is_null() {
            return Err(null());
        }
        let cfg = SolverConfig {
            lambda: Lambda::Uniform(p.lambda),
            r: p.radius,
            d: p.degree,
            n: p.fiber_n,
            epsilon: p.epsilon,
            max_iters: p.max_iters,
            mu: p.mu,
            nu: p.nu,
            ..SolverConfig::default()
        };
        cfg.validate().map_err(|e| (MinsecStatus::InvalidArgument, e.to_string()))?;
        let run = run_admm(&m.mesh, &cfg, &BoundarySpec::Tangent).map_err(|e| (MinsecStatus::Solver, e.to_string()))?;
        let field = extract_field(&run.problem, &run.state);
        let sing = extract_singularities(&m.mesh, &run.problem.ops.cr, &run.state.gamma, p.degree, &ClusterParams::default());
        let sol = MinsecSolution {
            angles: (0..field.len()).map(|v| field.angle(v).unwrap_or(f64::NAN)).collect(),
            confidence: field.confidence.clone(),
            singularities: sing
                .clusters
                .iter()
                .map(|c| [c.center.x, c.center.y, c.center.z, c.index, c.rounding_residual()])
                .collect(),
            gamma: run.state.gamma.clone(),
            converged: run.report.converged,
            iterations: run.report.iterations,
            objective: run.problem.objective(&run.state),
        };
        *out = Box::into_raw(Box::new(sol));
        Ok(())
    })
}

/// Reduced (vertically symmetric) solve; only Γ and singularities are
/// filled, angles are empty.
///
/// # Safety
/// Same as [`minsec_solve`].
#[no_mangle]
pub unsafe extern "C" fn minsec_solve_reduced(
    mesh: *const MinsecMesh,
    params: *const MinsecParams,
    out: *mut *mut MinsecSolution,
) -> MinsecStatus {
    guard(|| {
        let (Some(m), Some(p)) = (mesh.as_ref(), params.as_ref()) else {
            return Err(null());
        };
        if out.is_null() {
            return Err(null());
        }
        if !(p.radius > 0.0) || p.degree == 0 {
            return Err((MinsecStatus::InvalidArgument, "radius and degree must be positive".into()));
        }
        let cfg = ReducedConfig {
            lambda_eff: effective_lambda(p.lambda, p.radius),
            nu: p.nu,
            max_iters: p.max_iters.max(1),
            ..ReducedConfig::default()
        };
        cfg.validate().map_err(|e| (MinsecStatus::InvalidArgument, e.to_string()))?;
        let (cr, _, r) = solve_reduced_on_mesh(&m.mesh, p.degree, &cfg).map_err(|e| (MinsecStatus::Solver, e.to_string()))?;
        let sing = extract_singularities(&m.mesh, &cr, &r.gamma, p.degree, &ClusterParams::default());
        let sol = MinsecSolution {
            angles: Vec::new(),
            confidence: Vec::new(),
            singularities: sing
                .clusters
                .iter()
                .map(|c| [c.center.x, c.center.y, c.center.z, c.index, c.rounding_residual()])
                .collect(),
            gamma: r.gamma,
            converged: r.converged,
            iterations: r.iterations,
            objective: r.objective,
        };
        *out = Box::into_raw(Box::new(sol));
        Ok(())
    })
}

/// # Safety
/// `sol` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn minsec_solution_free(sol: *mut MinsecSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// # Safety
/// `sol` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn minsec_solution_converged(sol: *const MinsecSolution) -> bool {
    sol.as_ref().is_some_and(|s| s.converged)
}

/// # Safety
/// `sol` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn minsec_solution_iterations(sol: *const MinsecSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.iterations)
}

/// # Safety
/// `sol` must be a live handle or NULL (returns NaN).
#[no_mangle]
pub unsafe extern "C" fn minsec_solution_objective(sol: *const MinsecSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.objective)
}

/// # Safety
/// `sol` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn minsec_solution_vertex_count(sol: *const MinsecSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.angles.len())
}

/// # Safety
/// `sol` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn minsec_solution_singularity_count(sol: *const MinsecSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.singularities.len())
}

/// # Safety
/// `sol` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn minsec_solution_edge_count(sol: *const MinsecSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.gamma.len())
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), (MinsecStatus, String)> {
    if out.is_null() && !src.is_empty() {
        return Err(null());
    }
    if len < src.len() {
        return Err((MinsecStatus::BufferTooSmall, format!("buffer holds {len} values, {} needed", src.len())));
    }
    if !src.is_empty() {
        ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    }
    Ok(())
}

/// Per-vertex degree-d field angle in the vertex frame, radians; NaN at
/// vertices where the field is undefined.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn minsec_solution_angles(sol: *const MinsecSolution, out: *mut f64, len: usize) -> MinsecStatus {
    guard(|| copy_out(&sol.as_ref().ok_or_else(null)?.angles, out, len))
}

/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn minsec_solution_confidence(
    sol: *const MinsecSolution,
    out: *mut f64,
    len: usize,
) -> MinsecStatus {
    guard(|| copy_out(&sol.as_ref().ok_or_else(null)?.confidence, out, len))
}

/// Γ per interior edge.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn minsec_solution_gamma(sol: *const MinsecSolution, out: *mut f64, len: usize) -> MinsecStatus {
    guard(|| copy_out(&sol.as_ref().ok_or_else(null)?.gamma, out, len))
}

/// Five doubles per singularity: `x y z index residual`.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn minsec_solution_singularities(
    sol: *const MinsecSolution,
    out: *mut f64,
    len: usize,
) -> MinsecStatus {
    guard(|| {
        let s = sol.as_ref().ok_or_else(null)?;
        let flat: Vec<f64> = s.singularities.iter().flatten().copied().collect();
        copy_out(&flat, out, len)
    })
}

//! Operator property checks shared by the operator suite and the acceptance
//! run. Each returns the largest violation found.

use std::f64::consts::{PI, TAU};

use minsec_core::bundle::{fejer_delta, make_boundary_data, BoundarySpec};
use minsec_core::mesh::{build_transport, TransportAtlas, TriMesh};
use minsec_core::operators::{assemble_cr, assemble_dirichlet, assemble_l, assemble_linear_fem};
use minsec_core::sparse::{apply, triplets, SpC};
use num_complex::Complex64;
use rand::Rng;

pub fn dense(a: &SpC) -> Vec<Vec<Complex64>> {
    let mut d = vec![vec![Complex64::new(0.0, 0.0); a.ncols()]; a.nrows()];
    for (i, j, v) in triplets(a) {
        d[i][j] += v;
    }
    d
}

/// `max_k ‖L_k − L_k†‖_max` over `|k| ≤ k_max`.
pub fn hermitian_error(mesh: &TriMesh, d: u32, r: f64, k_max: i64) -> f64 {
    let atlas = build_transport(mesh).unwrap();
    let fem = assemble_linear_fem(mesh, &atlas);
    let mut worst: f64 = 0.0;
    for k in -k_max..=k_max {
        let l = dense(&assemble_l(mesh, &atlas, &fem, k, d, r).unwrap());
        for i in 0..l.len() {
            for j in 0..l.len() {
                worst = worst.max((l[i][j] - l[j][i].conj()).norm());
            }
        }
    }
    worst
}

/// `max_k ‖L_{−k} − conj(L_k)‖_max`.
pub fn conjugation_error(mesh: &TriMesh, d: u32, r: f64, k_max: i64) -> f64 {
    let atlas = build_transport(mesh).unwrap();
    let fem = assemble_linear_fem(mesh, &atlas);
    let mut worst: f64 = 0.0;
    for k in 1..=k_max {
        let a = dense(&assemble_l(mesh, &atlas, &fem, k, d, r).unwrap());
        let b = dense(&assemble_l(mesh, &atlas, &fem, -k, d, r).unwrap());
        for (ra, rb) in a.iter().zip(&b) {
            for (x, y) in ra.iter().zip(rb) {
                worst = worst.max((y - x.conj()).norm());
            }
        }
    }
    worst
}

fn energy(s: &SpC, f: &[Complex64]) -> f64 {
    let sf = apply(s, f);
    f.iter().zip(&sf).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Covariant Dirichlet energy of a globally constant direction of degree
/// `d`, in randomly rotated vertex frames, relative to the energy of a
/// random field. `None` for curved meshes.
pub fn planar_zero_energy(mesh: &TriMesh, atlas: &TransportAtlas, alphas: &[f64], d: u32, seed: u64) -> Option<f64> {
    if !super::is_planar(mesh) {
        return None;
    }
    let fem = assemble_linear_fem(mesh, atlas);
    let psi = 0.7;
    let df = d as f64;
    // degree-d value of the direction ψ seen in frame a
    let z: Vec<Complex64> = alphas.iter().map(|a| Complex64::from_polar(1.0, df * (psi - a))).collect();
    let mut rng = super::rng(seed);
    let noise: Vec<Complex64> = (0..z.len()).map(|_| Complex64::from_polar(1.0, rng.gen_range(-PI..PI))).collect();
    let mut worst: f64 = 0.0;
    // P_{-1} carries ρ^{d}: the field itself; P_1 carries ρ^{-d}: its conjugate
    for (k, f) in [(-1, z.clone()), (1, z.iter().map(|x| x.conj()).collect::<Vec<_>>())] {
        let s = assemble_dirichlet(mesh, atlas, &fem, k, d);
        let e = energy(&s, &f);
        let scale = energy(&s, &noise).max(1e-300);
        worst = worst.max(e.abs() / scale);
    }
    Some(worst)
}

/// Discrete Stokes: for random per-face constant fields `v`,
/// `Σ_T A_T ⟨(J Ĝ 1)_T, v_T⟩` against minus the boundary circulation of
/// `v` summed edge by edge from positions.
pub fn cr_stokes_error(mesh: &TriMesh, seed: u64) -> f64 {
    let atlas = build_transport(mesh).unwrap();
    let fem = assemble_linear_fem(mesh, &atlas);
    let nf = mesh.n_faces();
    let mut rng = super::rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let v: Vec<[f64; 2]> = (0..nf).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let lhs = match assemble_cr(mesh, &fem) {
            Ok(cr) => {
                let ones = vec![1.0; cr.m_hat.len()];
                let g = apply(&cr.g_hat, &ones);
                let jg = apply(&fem.j, &g);
                (0..nf)
                    .map(|f| fem.areas[f] * (jg[2 * f] * v[f][0] + jg[2 * f + 1] * v[f][1]))
                    .sum::<f64>()
            }
            // a lone face: Ĝ is empty and the circulation of a constant vanishes
            Err(_) => 0.0,
        };
        let mut circulation = 0.0;
        for be in mesh.boundary_edges() {
            let e = atlas.to_face(be.face, &(mesh.position(be.to) - mesh.position(be.from)));
            circulation += e[0] * v[be.face][0] + e[1] * v[be.face][1];
        }
        worst = worst.max((lhs + circulation).abs());
    }
    worst
}

/// Smallest Fejér kernel value on a `4N` grid over every boundary vertex of
/// the tangent boundary data.
pub fn fejer_min(mesh: &TriMesh, d: u32, n: usize) -> f64 {
    let atlas = build_transport(mesh).unwrap();
    let k_max = n / 2 - 1;
    let bd = make_boundary_data(mesh, &atlas, &BoundarySpec::Tangent, d, k_max).unwrap();
    let mut lo = f64::INFINITY;
    for v in 0..mesh.n_vertices() {
        let Some(g) = bd.gamma0(v) else { continue };
        for m in 0..4 * n {
            lo = lo.min(fejer_delta(g, k_max, TAU * m as f64 / (4 * n) as f64));
        }
    }
    lo
}

/// `|Σ_int κ_v A_v + Σ_∂ turning − 2πχ|`, with the turning angles measured
/// from the corner angles at each boundary vertex.
pub fn gauss_bonnet_error(mesh: &TriMesh) -> f64 {
    let atlas = build_transport(mesh).unwrap();
    let mut total = 0.0;
    for v in 0..mesh.n_vertices() {
        if !mesh.is_boundary_vertex(v) {
            total += atlas.vertex_curvature(v) * mesh.vertex_area(v);
        }
    }
    for lp in mesh.boundary_loops() {
        for &v in lp {
            let p = mesh.position(v);
            let inner: f64 = mesh
                .vertex_corners(v)
                .iter()
                .map(|&(f, j)| {
                    let t = mesh.triangles()[f];
                    (mesh.position(t[(j + 1) % 3]) - p).angle(&(mesh.position(t[(j + 2) % 3]) - p))
                })
                .sum();
            total += PI - inner;
        }
    }
    (total - TAU * mesh.euler_characteristic() as f64).abs()
}

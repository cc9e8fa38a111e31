//! Rounding the solved current to a directional field, singularity
//! clustering and diagnostics.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bundle::BoundaryData;
use crate::error::ExtractError;
use crate::mesh::{unit_power, TransportAtlas, TriMesh, Vec3};
use crate::operators::{assemble_dirichlet, vertex_mass, CrOperators, LinearFem};
use crate::solver::{BundleState, Problem};
use crate::sparse::{apply, split_block, triplets, Cholesky, from_triplets};

/// Coefficients at or below this magnitude leave the vertex undefined.
pub const UNDEFINED_FLOOR: f64 = 1e-12;

/// Per-vertex unit complex numbers in the vertex frames, degree-`d`
/// representation.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtractedField {
    pub d: u32,
    /// Zero where undefined.
    pub z: Vec<Complex64>,
    pub confidence: Vec<f64>,
}

impl ExtractedField {
    pub fn from_coefficients(f_minus1: &[Complex64], d: u32) -> Self {
        let mut z = Vec::with_capacity(f_minus1.len());
        let mut confidence = Vec::with_capacity(f_minus1.len());
        for &c in f_minus1 {
            let m = c.norm();
            confidence.push(m);
            z.push(if m > UNDEFINED_FLOOR { Complex64::new(0.0, -1.0) * c / m } else { Complex64::new(0.0, 0.0) });
        }
        ExtractedField { d, z, confidence }
    }

    /// Unit values everywhere, confidence 1.
    pub fn from_unit(z: Vec<Complex64>, d: u32) -> Self {
        let confidence = vec![1.0; z.len()];
        ExtractedField { d, z, confidence }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn is_defined(&self, v: usize) -> bool {
        self.confidence[v] > UNDEFINED_FLOOR
    }

    /// Degree-`d` angle in `(-π, π]`, or `None` where undefined.
    pub fn angle(&self, v: usize) -> Option<f64> {
        self.is_defined(v).then(|| self.z[v].arg())
    }

    /// The value seen from face `f` at its corner `j`.
    pub fn in_face(&self, atlas: &TransportAtlas, f: usize, j: usize, v: usize) -> Complex64 {
        self.z[v] * unit_power(atlas.rho(f, j), self.d as i64)
    }
}

pub fn extract_field(problem: &Problem, state: &BundleState) -> ExtractedField {
    let nv = problem.mesh.n_vertices();
    let f: Vec<Complex64> = (0..nv).map(|v| state.f_k(-1, v)).collect();
    ExtractedField::from_coefficients(&f, problem.config.d)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Singularity {
    /// `|Γ|`-weighted mean of the edge midpoints.
    pub center: Vec3,
    /// Integrated Γ over `d`.
    pub index: f64,
    /// Nearest multiple of `1/d`.
    pub rounded: f64,
    /// Integrated Γ.
    pub mass: f64,
    pub edges: Vec<usize>,
}

impl Singularity {
    pub fn rounding_residual(&self) -> f64 {
        self.index - self.rounded
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SingularitySet {
    pub clusters: Vec<Singularity>,
    /// Integrated Γ on edges outside every cluster.
    pub residual_mass: f64,
    pub total_mass: f64,
}

impl SingularitySet {
    pub fn index_sum(&self) -> f64 {
        self.clusters.iter().map(|c| c.index).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterParams {
    /// Edges with `|Γ_e| ≤ rel_threshold · max|Γ|` are left unclustered.
    pub rel_threshold: f64,
    /// Edges within this many face rings of each other join one cluster.
    pub rings: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams { rel_threshold: 1e-3, rings: 1 }
    }
}

/// Groups significant interior edges into connected clusters. Two edges are
/// neighbours when they lie on a common face; `rings > 1` widens that to
/// faces reachable through shared vertices.
pub fn extract_singularities(
    mesh: &TriMesh,
    cr: &CrOperators,
    gamma: &[f64],
    d: u32,
    params: &ClusterParams,
) -> SingularitySet {
    let ni = mesh.interior_edges().len();
    assert_eq!(gamma.len(), ni);
    let mass: Vec<f64> = gamma.iter().zip(&cr.m_hat).map(|(g, m)| g * m).collect();
    let total_mass: f64 = mass.iter().sum();
    let gmax = gamma.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    if gmax == 0.0 {
        return SingularitySet { clusters: Vec::new(), residual_mass: total_mass, total_mass };
    }
    let thr = params.rel_threshold * gmax;
    let active: Vec<bool> = gamma.iter().map(|g| g.abs() > thr).collect();

    // interior edges touching each face, and faces reachable from an edge
    let mut face_dofs: Vec<Vec<usize>> = vec![Vec::new(); mesh.n_faces()];
    for f in 0..mesh.n_faces() {
        for &e in &mesh.face_edges()[f] {
            if let Some(q) = mesh.edge_dof(e) {
                face_dofs[f].push(q);
            }
        }
    }
    let vertex_faces = |v: usize| mesh.vertex_corners(v).iter().map(|&(f, _)| f);
    let neighbourhood = |q: usize| -> Vec<usize> {
        let e = &mesh.edges()[mesh.interior_edges()[q]];
        let mut faces: Vec<usize> = vec![e.faces.0];
        faces.extend(e.faces.1);
        for _ in 1..params.rings.max(1) {
            let mut next = faces.clone();
            for &f in &faces {
                for &v in &mesh.triangles()[f] {
                    next.extend(vertex_faces(v));
                }
            }
            next.sort_unstable();
            next.dedup();
            faces = next;
        }
        let mut out: Vec<usize> = faces.iter().flat_map(|&f| face_dofs[f].iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        out
    };

    let mut label = vec![usize::MAX; ni];
    let mut clusters = Vec::new();
    let mut clustered_mass = 0.0;
    for seed in 0..ni {
        if !active[seed] || label[seed] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        label[seed] = id;
        let mut queue = VecDeque::from([seed]);
        let mut members = Vec::new();
        while let Some(q) = queue.pop_front() {
            members.push(q);
            for nb in neighbourhood(q) {
                if active[nb] && label[nb] == usize::MAX {
                    label[nb] = id;
                    queue.push_back(nb);
                }
            }
        }
        members.sort_unstable();
        let m: f64 = members.iter().map(|&q| mass[q]).sum();
        let wsum: f64 = members.iter().map(|&q| mass[q].abs()).sum();
        let center = members
            .iter()
            .map(|&q| mesh.edge_midpoint(mesh.interior_edges()[q]) * mass[q].abs())
            .fold(Vec3::zeros(), |a, b| a + b)
            / wsum;
        clustered_mass += m;
        let index = m / d as f64;
        clusters.push(Singularity {
            center,
            index,
            rounded: (index * d as f64).round() / d as f64,
            mass: m,
            edges: members,
        });
    }
    SingularitySet { clusters, residual_mass: total_mass - clustered_mass, total_mass }
}

/// The fiber mass of one vertex: offsets from the field angle in `(-π, π]`
/// and the `|Σ|_g` mass carried by each fiber sample.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FiberProfile {
    pub offsets: Vec<f64>,
    pub masses: Vec<f64>,
    /// Angular width of one fiber sample.
    pub bin: f64,
}

pub fn wrap_angle(a: f64) -> f64 {
    let mut x = (a + PI).rem_euclid(2.0 * PI) - PI;
    if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

impl FiberProfile {
    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Fraction of the mass within circular distance `theta`, each sample
    /// spread uniformly over its bin.
    pub fn fraction_within(&self, theta: f64) -> Option<f64> {
        let total = self.total();
        if !(total > 0.0) {
            return None;
        }
        let theta = theta.clamp(0.0, PI);
        let h = 0.5 * self.bin;
        let mut acc = 0.0;
        for (&t, &m) in self.offsets.iter().zip(&self.masses) {
            let mut overlap = 0.0;
            for s in [-2.0 * PI, 0.0, 2.0 * PI] {
                let lo = (t + s - h).max(-theta);
                let hi = (t + s + h).min(theta);
                overlap += (hi - lo).max(0.0);
            }
            acc += m * (overlap / self.bin).min(1.0);
        }
        Some((acc / total).min(1.0))
    }

    /// `W_2` to a Dirac at offset 0, samples as point masses.
    pub fn w2(&self) -> Option<f64> {
        let total = self.total();
        if !(total > 0.0) {
            return None;
        }
        let s: f64 = self.offsets.iter().zip(&self.masses).map(|(t, m)| m * t * t).sum();
        Some((s / total).sqrt())
    }
}

/// Fiber mass profiles around the extracted angle; `None` at undefined
/// vertices.
pub fn fiber_profiles(problem: &Problem, state: &BundleState, field: &ExtractedField) -> Vec<Option<FiberProfile>> {
    let mesh = &problem.mesh;
    let n = problem.fd.n;
    let inv_r2 = 1.0 / (problem.config.r * problem.config.r);
    let bin = 2.0 * PI / n as f64;
    (0..mesh.n_vertices())
        .into_par_iter()
        .map(|v| {
            let sigma = field.angle(v)?;
            let mut p = FiberProfile { offsets: Vec::new(), masses: Vec::new(), bin };
            for &(f, j) in mesh.vertex_corners(v) {
                let c = 3 * f + j;
                let centre = sigma + field.d as f64 * problem.atlas.rho(f, j).arg();
                let w = problem.corner_weight[c];
                for m in 0..n {
                    let s = state.sigma[c * n + m];
                    let g = (s[0] * s[0] + s[1] * s[1] + inv_r2 * s[2] * s[2]).sqrt();
                    p.offsets.push(wrap_angle(problem.fd.theta(m) - centre));
                    p.masses.push(w * g);
                }
            }
            Some(p)
        })
        .collect()
}

/// Area-weighted mean over vertices of the fiber mass fraction within each
/// `θ` of the field angle.
pub fn concentration_cdf(
    mesh: &TriMesh,
    profiles: &[Option<FiberProfile>],
    thetas: &[f64],
) -> Result<Vec<f64>, ExtractError> {
    let mut area = 0.0;
    let mut out = vec![0.0; thetas.len()];
    for (v, p) in profiles.iter().enumerate() {
        let Some(p) = p else { continue };
        if !(p.total() > 0.0) {
            continue;
        }
        let a = mesh.vertex_area(v);
        area += a;
        for (o, &t) in out.iter_mut().zip(thetas) {
            *o += a * p.fraction_within(t).unwrap_or(0.0);
        }
    }
    if !(area > 0.0) {
        return Err(ExtractError::ZeroMass);
    }
    for o in &mut out {
        *o /= area;
    }
    Ok(out)
}

/// `θ = πm/32`, `m = 0..=32`.
pub fn default_theta_grid() -> Vec<f64> {
    (0..=32).map(|m| PI * m as f64 / 32.0).collect()
}

/// Per-vertex `W_2`; `None` where the field or the fiber mass vanishes.
pub fn fiber_w2(profiles: &[Option<FiberProfile>]) -> Vec<Option<f64>> {
    profiles.iter().map(|p| p.as_ref().and_then(|p| p.w2())).collect()
}

/// Covariant gradient of the degree-`d` angle on each face, in the face
/// frame. Corner angles are unwrapped to the representative nearest the
/// first corner.
pub fn face_angle_gradients(
    mesh: &TriMesh,
    atlas: &TransportAtlas,
    fem: &LinearFem,
    field: &ExtractedField,
) -> Vec<Option<[f64; 2]>> {
    (0..mesh.n_faces())
        .map(|f| {
            let tri = mesh.triangles()[f];
            if tri.iter().any(|&v| !field.is_defined(v)) {
                return None;
            }
            let a0 = field.in_face(atlas, f, 0, tri[0]).arg();
            let mut g = [0.0; 2];
            for j in 0..3 {
                let a = a0 + wrap_angle(field.in_face(atlas, f, j, tri[j]).arg() - a0);
                g[0] += a * fem.grads[f][j][0];
                g[1] += a * fem.grads[f][j][1];
            }
            Some(g)
        })
        .collect()
}

/// `π(R√(R² + s²r²) + s²r² asinh(R/(sr)))`: area of the helicoid of winding
/// `s` over a disk of radius `R` in a fiber of radius `r`.
pub fn helicoid_area(r: f64, radius: f64, winding: f64) -> f64 {
    let s = winding.abs();
    if s == 0.0 {
        return PI * radius * radius;
    }
    let sr = s * r;
    PI * (radius * (radius * radius + sr * sr).sqrt() + sr * sr * (radius / sr).asinh())
}

/// Singular disks cut out of the graph-area integral.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Exclusion {
    /// Center and winding of the degree-`d` angle around it.
    pub centers: Vec<(Vec3, f64)>,
    pub radius: f64,
    /// Add the closed-form helicoid area for every excluded disk.
    pub add_helicoid: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphArea {
    pub area: f64,
    pub base_area: f64,
    pub helicoid: f64,
    pub excluded_faces: usize,
}

/// `Σ_T A_T sqrt(1 + r²|Dσ|²)` over faces whose centroid lies outside every
/// excluded disk.
pub fn graph_area(
    mesh: &TriMesh,
    atlas: &TransportAtlas,
    fem: &LinearFem,
    field: &ExtractedField,
    r: f64,
    exclusion: Option<&Exclusion>,
) -> Result<GraphArea, ExtractError> {
    let grads = face_angle_gradients(mesh, atlas, fem, field);
    let mut area = 0.0;
    let mut base_area = 0.0;
    let mut excluded_faces = 0;
    for f in 0..mesh.n_faces() {
        if let Some(ex) = exclusion {
            let c = mesh.face_centroid(f);
            if ex.centers.iter().any(|(p, _)| (c - p).norm() < ex.radius) {
                excluded_faces += 1;
                continue;
            }
        }
        let tri = mesh.triangles()[f];
        let g = grads[f].ok_or_else(|| {
            let v = *tri.iter().find(|&&v| !field.is_defined(v)).unwrap_or(&tri[0]);
            ExtractError::Undefined(v)
        })?;
        let a = mesh.face_area(f);
        base_area += a;
        area += a * (1.0 + r * r * (g[0] * g[0] + g[1] * g[1])).sqrt();
    }
    let helicoid = match exclusion {
        Some(ex) if ex.add_helicoid => ex.centers.iter().map(|(_, s)| helicoid_area(r, ex.radius, *s)).sum(),
        _ => 0.0,
    };
    Ok(GraphArea { area: area + helicoid, base_area, helicoid, excluded_faces })
}

#[derive(Clone, Debug)]
pub struct Baseline {
    pub field: ExtractedField,
    pub eigenvalue: f64,
    /// `‖S x − λ M x‖ / ‖x‖`.
    pub residual: f64,
    pub iterations: usize,
}

const EIGEN_MAX_STEPS: usize = 500;

/// Smoothest degree-`d` field: smallest generalized eigenvector of the
/// covariant Dirichlet energy against the vertex mass, by shifted inverse
/// iteration.
pub fn baseline_smoothest_field(
    mesh: &TriMesh,
    atlas: &TransportAtlas,
    fem: &LinearFem,
    d: u32,
) -> Result<Baseline, ExtractError> {
    let s = assemble_dirichlet(mesh, atlas, fem, -1, d);
    let m = vertex_mass(mesh);
    let n = mesh.n_vertices();
    let diag = |t: Vec<(usize, usize, f64)>| t.iter().filter(|e| e.0 == e.1).map(|e| e.2).sum::<f64>();
    let s_tr: f64 = triplets(&s).iter().filter(|e| e.0 == e.1).map(|e| e.2.re).sum();
    let shift = 1e-8 * s_tr / diag(triplets(&m));
    let mut t: Vec<(usize, usize, Complex64)> = triplets(&s);
    t.extend(triplets(&m).into_iter().map(|(i, j, v)| (i, j, Complex64::new(shift * v, 0.0))));
    let chol = Cholesky::new(&from_triplets(n, n, &t)).ok_or(ExtractError::NoConvergence(0))?;

    let m_norm = |x: &[Complex64]| -> f64 {
        let mx = apply(&m, x);
        x.iter().zip(&mx).map(|(a, b)| (a.conj() * b).re).sum::<f64>().sqrt()
    };
    let mut x: Vec<Complex64> = (0..n).map(|v| Complex64::from_polar(1.0, 0.37 * v as f64)).collect();
    let nx = m_norm(&x);
    x.iter_mut().for_each(|a| *a /= nx);
    let mut best = (f64::INFINITY, 0.0);
    for it in 1..=EIGEN_MAX_STEPS {
        let mut y = apply(&m, &x);
        chol.solve_in_place(&mut y);
        let ny = m_norm(&y);
        y.iter_mut().for_each(|a| *a /= ny);
        x = y;
        let sx = apply(&s, &x);
        let mx = apply(&m, &x);
        let lambda: f64 = x.iter().zip(&sx).map(|(a, b)| (a.conj() * b).re).sum();
        let xn = x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let res = sx
            .iter()
            .zip(&mx)
            .map(|(a, b)| (a - lambda * b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / xn;
        best = (res, lambda);
        if res <= 1e-10 {
            let z: Vec<Complex64> = x.iter().map(|a| a / a.norm()).collect();
            return Ok(Baseline { field: ExtractedField::from_unit(z, d), eigenvalue: lambda, residual: res, iterations: it });
        }
    }
    log::warn!("eigen iteration stalled at residual {:.3e} (eigenvalue {:.3e})", best.0, best.1);
    Err(ExtractError::NoConvergence(EIGEN_MAX_STEPS))
}

/// Smoothest degree-`d` field with boundary values pinned to the boundary
/// data angles.
pub fn baseline_aligned_field(
    mesh: &TriMesh,
    atlas: &TransportAtlas,
    fem: &LinearFem,
    bd: &BoundaryData,
) -> Result<ExtractedField, ExtractError> {
    let s = assemble_dirichlet(mesh, atlas, fem, -1, bd.d);
    let n = mesh.n_vertices();
    let keep: Vec<bool> = (0..n).map(|v| !mesh.is_boundary_vertex(v)).collect();
    let (ii, ib) = split_block(&s, &keep);
    let zb: Vec<Complex64> = (0..n)
        .filter(|&v| !keep[v])
        .map(|v| Complex64::from_polar(1.0, bd.gamma0(v).unwrap_or(0.0)))
        .collect();
    let mut rhs: Vec<Complex64> = apply(&ib, &zb).into_iter().map(|a| -a).collect();
    let chol = Cholesky::new(&ii).ok_or(ExtractError::NoConvergence(0))?;
    chol.solve_in_place(&mut rhs);
    let (mut zi, mut zbi) = (rhs.into_iter(), zb.into_iter());
    let z: Vec<Complex64> = (0..n)
        .map(|v| if keep[v] { zi.next().unwrap() } else { zbi.next().unwrap() })
        .collect();
    let f: Vec<Complex64> = z.iter().map(|a| Complex64::new(0.0, 1.0) * a).collect();
    Ok(ExtractedField::from_coefficients(&f, bd.d))
}

/// Circular difference of field angles (not degree-`d` angles) between two
/// fields at `v`, in `[0, π/d]`.
pub fn field_angle_difference(a: &ExtractedField, b: &ExtractedField, v: usize) -> Option<f64> {
    let (x, y) = (a.angle(v)?, b.angle(v)?);
    Some(wrap_angle(x - y).abs() / a.d as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sawtooth_inversion() {
        let k = 31.0;
        let c = Complex64::new(0.0, 1.0 - 1.0 / k);
        let f = ExtractedField::from_coefficients(&[c, c * Complex64::from_polar(1.0, PI / 3.0)], 4);
        assert_abs_diff_eq!(f.z[0].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.z[0].im, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.z[1].arg(), PI / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.confidence[0], 30.0 / 31.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_coefficient_is_undefined() {
        let f = ExtractedField::from_coefficients(&[Complex64::new(0.0, 0.0)], 1);
        assert!(!f.is_defined(0));
        assert_eq!(f.angle(0), None);
    }

    fn uniform(n: usize) -> FiberProfile {
        let bin = 2.0 * PI / n as f64;
        FiberProfile {
            offsets: (0..n).map(|m| wrap_angle(m as f64 * bin)).collect(),
            masses: vec![1.0; n],
            bin,
        }
    }

    #[test]
    fn profile_cdf_cases() {
        let u = uniform(16);
        for m in 0..=32 {
            let t = PI * m as f64 / 32.0;
            assert_abs_diff_eq!(u.fraction_within(t).unwrap(), t / PI, epsilon = 1e-12);
        }
        let n = 16;
        let delta = FiberProfile { offsets: vec![0.0], masses: vec![2.0], bin: 2.0 * PI / n as f64 };
        assert_abs_diff_eq!(delta.fraction_within(PI / n as f64).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(FiberProfile::default().fraction_within(1.0), None);
    }

    #[test]
    fn profile_w2_cases() {
        let delta = FiberProfile { offsets: vec![0.0], masses: vec![1.0], bin: 0.1 };
        assert_eq!(delta.w2(), Some(0.0));
        let two = FiberProfile { offsets: vec![PI / 2.0, -PI / 2.0], masses: vec![1.0, 1.0], bin: 0.1 };
        assert_abs_diff_eq!(two.w2().unwrap(), PI / 2.0, epsilon = 1e-15);
        // point samples of the uniform fiber approach π/√3
        let w = uniform(4096).w2().unwrap();
        assert_abs_diff_eq!(w, PI / 3f64.sqrt(), epsilon = 1e-5);
    }

    #[test]
    fn helicoid_closed_form() {
        let a = helicoid_area(1.0, 1.0, 1.0);
        assert_abs_diff_eq!(a, PI * (2f64.sqrt() + 1f64.asinh()), epsilon = 1e-14);
        assert_abs_diff_eq!(a, 7.2118, epsilon = 1e-4);
        // midpoint-rule quadrature of 2πρ sqrt(1 + r²/ρ²)
        let (r, big) = (0.3, 1.7);
        let n = 200_000;
        let h = big / n as f64;
        let q: f64 = (0..n)
            .map(|i| {
                let p = (i as f64 + 0.5) * h;
                2.0 * PI * p * (1.0 + r * r / (p * p)).sqrt() * h
            })
            .sum();
        assert_abs_diff_eq!(helicoid_area(r, big, 1.0), q, epsilon = 1e-6);
    }

    #[test]
    fn wrap_range() {
        assert_abs_diff_eq!(wrap_angle(3.0 * PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(0.5), 0.5, epsilon = 1e-15);
    }
}

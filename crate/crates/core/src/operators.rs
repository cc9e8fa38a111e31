//! Discrete operators: linear and Crouzeix–Raviart elements, covariant
//! corner-vertex incidence and the per-frequency Laplacians.
//!
//! Index conventions: corner `c = 3f + j`, face 2-vectors at `2f + axis`,
//! corner 2-vectors at `2c + axis`, CR degrees of freedom follow
//! [`TriMesh::interior_edges`], boundary rows follow
//! [`TriMesh::boundary_edges`].

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::OperatorError;
use crate::mesh::{unit_power, TransportAtlas, TriMesh};
use crate::sparse::{from_triplets, SpC, SpR};

/// Linear-element operators on corners and faces.
#[derive(Clone)]
pub struct LinearFem {
    /// Hat-function gradients per face corner, in the face frame.
    pub grads: Vec<[[f64; 2]; 3]>,
    pub areas: Vec<f64>,
    /// Corner values to face gradients, `2F × 3F`.
    pub g: SpR,
    /// Corner mass, `3F × 3F`.
    pub m: SpR,
    /// Corner 2-vectors averaged onto faces, `2F × 6F`.
    pub u: SpR,
    /// Quarter turn per face, `2F × 2F`.
    pub j: SpR,
}

impl LinearFem {
    /// Face areas repeated per 2-vector component.
    pub fn area_2(&self) -> SpR {
        let t: Vec<_> = (0..2 * self.areas.len()).map(|i| (i, i, self.areas[i / 2])).collect();
        from_triplets(t.len(), t.len(), &t)
    }
}

/// Crouzeix–Raviart operators over interior edges.
#[derive(Clone)]
pub struct CrOperators {
    /// `2F × E_int`.
    pub g_hat: SpR,
    /// Diagonal mass per interior edge.
    pub m_hat: Vec<f64>,
    /// `Ĝᵀ A Ĝ`.
    pub l_hat: SpR,
}

impl CrOperators {
    /// `L̂ M̂⁻¹ L̂`.
    pub fn l_hat_squared(&self) -> SpR {
        let ni = self.m_hat.len();
        let mut cols = vec![Vec::new(); ni];
        for (i, j, v) in crate::sparse::triplets(&self.l_hat) {
            cols[j].push((i, v));
        }
        let mut sq = Vec::new();
        for (e, col) in cols.iter().enumerate() {
            for &(i, a) in col {
                for &(j, b) in col {
                    sq.push((i, j, a * b / self.m_hat[e]));
                }
            }
        }
        from_triplets(ni, ni, &sq)
    }
}

#[derive(Clone)]
pub struct OperatorSet {
    pub d: u32,
    pub r: f64,
    pub k_max: usize,
    pub fem: LinearFem,
    /// `P_k` at index `k + K`.
    pub p: Vec<SpC>,
    /// `L_k` at index `k`, `0 ≤ k ≤ K`; negative frequencies are conjugates.
    pub l: Vec<SpC>,
    pub l0: SpR,
    pub cr: CrOperators,
    /// Boundary-edge restriction of face 2-vectors, `E_bd × 2F`.
    pub b: SpR,
}

pub fn assemble_linear_fem(mesh: &TriMesh, atlas: &TransportAtlas) -> LinearFem {
    let nf = mesh.n_faces();
    let mut grads = Vec::with_capacity(nf);
    let mut g = Vec::with_capacity(6 * nf);
    let mut m = Vec::with_capacity(9 * nf);
    let mut u = Vec::with_capacity(6 * nf);
    let mut j = Vec::with_capacity(2 * nf);
    for f in 0..nf {
        let t = mesh.triangles()[f];
        let x0 = mesh.position(t[0]);
        let q = [
            [0.0, 0.0],
            atlas.to_face(f, &(mesh.position(t[1]) - x0)),
            atlas.to_face(f, &(mesh.position(t[2]) - x0)),
        ];
        let area = mesh.face_area(f);
        let mut gr = [[0.0; 2]; 3];
        for c in 0..3 {
            let a = q[(c + 1) % 3];
            let b = q[(c + 2) % 3];
            // inward normal of the opposite edge over twice the area
            gr[c] = [-(b[1] - a[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)];
            for ax in 0..2 {
                g.push((2 * f + ax, 3 * f + c, gr[c][ax]));
                u.push((2 * f + ax, 2 * (3 * f + c) + ax, 1.0 / 3.0));
            }
            for c2 in 0..3 {
                let w = if c == c2 { area / 6.0 } else { area / 12.0 };
                m.push((3 * f + c, 3 * f + c2, w));
            }
        }
        j.push((2 * f + 1, 2 * f, 1.0));
        j.push((2 * f, 2 * f + 1, -1.0));
        grads.push(gr);
    }
    LinearFem {
        grads,
        areas: mesh.face_areas().to_vec(),
        g: from_triplets(2 * nf, 3 * nf, &g),
        m: from_triplets(3 * nf, 3 * nf, &m),
        u: from_triplets(2 * nf, 6 * nf, &u),
        j: from_triplets(2 * nf, 2 * nf, &j),
    }
}

/// Transport entry of corner `j` of face `f` at frequency `k`.
pub fn corner_phase(atlas: &TransportAtlas, f: usize, j: usize, k: i64, d: u32) -> Complex64 {
    if k == 0 {
        return Complex64::new(1.0, 0.0);
    }
    unit_power(atlas.rho(f, j), -k * d as i64)
}

pub fn assemble_p(mesh: &TriMesh, atlas: &TransportAtlas, k: i64, d: u32) -> SpC {
    let nf = mesh.n_faces();
    let mut t = Vec::with_capacity(3 * nf);
    for f in 0..nf {
        for (j, &v) in mesh.triangles()[f].iter().enumerate() {
            t.push((3 * f + j, v, corner_phase(atlas, f, j, k, d)));
        }
    }
    from_triplets(3 * nf, mesh.n_vertices(), &t)
}

/// `P_k† G† A G P_k + r⁻² k² P_k† M P_k`, assembled face by face.
pub fn assemble_l(
    mesh: &TriMesh,
    atlas: &TransportAtlas,
    fem: &LinearFem,
    k: i64,
    d: u32,
    r: f64,
) -> Result<SpC, OperatorError> {
    if !(r > 0.0) {
        return Err(OperatorError::BadRadius(r));
    }
    Ok(connection_laplacian(mesh, atlas, fem, k, d, (k * k) as f64 / (r * r)))
}

/// `P_k† G† A G P_k` alone.
pub fn assemble_dirichlet(mesh: &TriMesh, atlas: &TransportAtlas, fem: &LinearFem, k: i64, d: u32) -> SpC {
    connection_laplacian(mesh, atlas, fem, k, d, 0.0)
}

fn connection_laplacian(
    mesh: &TriMesh,
    atlas: &TransportAtlas,
    fem: &LinearFem,
    k: i64,
    d: u32,
    vert: f64,
) -> SpC {
    let nf = mesh.n_faces();
    let mut t = Vec::with_capacity(9 * nf);
    for f in 0..nf {
        let tri = mesh.triangles()[f];
        let a = fem.areas[f];
        let gr = &fem.grads[f];
        let ph: [Complex64; 3] = std::array::from_fn(|j| corner_phase(atlas, f, j, k, d));
        for i in 0..3 {
            for j in 0..3 {
                let stiff = a * (gr[i][0] * gr[j][0] + gr[i][1] * gr[j][1]);
                let mass = if i == j { a / 6.0 } else { a / 12.0 };
                let w = stiff + vert * mass;
                t.push((tri[i], tri[j], ph[i].conj() * w * ph[j]));
            }
        }
    }
    let n = mesh.n_vertices();
    from_triplets(n, n, &t)
}

/// Vertex mass `P_0† M P_0`.
pub fn vertex_mass(mesh: &TriMesh) -> SpR {
    let mut t = Vec::with_capacity(9 * mesh.n_faces());
    for (f, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.face_area(f);
        for i in 0..3 {
            for j in 0..3 {
                t.push((tri[i], tri[j], if i == j { a / 6.0 } else { a / 12.0 }));
            }
        }
    }
    let n = mesh.n_vertices();
    from_triplets(n, n, &t)
}

/// Real `L_0` (the scalar stiffness matrix).
pub fn assemble_l0(mesh: &TriMesh, fem: &LinearFem) -> SpR {
    let nf = mesh.n_faces();
    let mut t = Vec::with_capacity(9 * nf);
    for f in 0..nf {
        let tri = mesh.triangles()[f];
        let gr = &fem.grads[f];
        for i in 0..3 {
            for j in 0..3 {
                let w = fem.areas[f] * (gr[i][0] * gr[j][0] + gr[i][1] * gr[j][1]);
                t.push((tri[i], tri[j], w));
            }
        }
    }
    let n = mesh.n_vertices();
    from_triplets(n, n, &t)
}

pub fn assemble_cr(mesh: &TriMesh, fem: &LinearFem) -> Result<CrOperators, OperatorError> {
    let ni = mesh.interior_edges().len();
    if ni == 0 {
        return Err(OperatorError::NoInteriorEdges);
    }
    let nf = mesh.n_faces();
    let mut g = Vec::new();
    let mut l = Vec::new();
    let mut m_hat = vec![0.0; ni];
    for f in 0..nf {
        let a = fem.areas[f];
        let dofs: [Option<usize>; 3] = std::array::from_fn(|j| mesh.edge_dof(mesh.face_edges()[f][j]));
        // ψ_e = 1 − 2λ_opp on this face
        let gr: [[f64; 2]; 3] = std::array::from_fn(|j| [-2.0 * fem.grads[f][j][0], -2.0 * fem.grads[f][j][1]]);
        for i in 0..3 {
            let Some(qi) = dofs[i] else { continue };
            m_hat[qi] += a / 3.0;
            g.push((2 * f, qi, gr[i][0]));
            g.push((2 * f + 1, qi, gr[i][1]));
            for j in 0..3 {
                let Some(qj) = dofs[j] else { continue };
                l.push((qi, qj, a * (gr[i][0] * gr[j][0] + gr[i][1] * gr[j][1])));
            }
        }
    }
    Ok(CrOperators {
        g_hat: from_triplets(2 * nf, ni, &g),
        m_hat,
        l_hat: from_triplets(ni, ni, &l),
    })
}

/// Each boundary edge `from → to` dotted with its face's 2-vector.
pub fn assemble_b(mesh: &TriMesh, atlas: &TransportAtlas) -> SpR {
    let mut t = Vec::new();
    for (row, be) in mesh.boundary_edges().iter().enumerate() {
        let e = atlas.to_face(be.face, &(mesh.position(be.to) - mesh.position(be.from)));
        t.push((row, 2 * be.face, e[0]));
        t.push((row, 2 * be.face + 1, e[1]));
    }
    from_triplets(mesh.boundary_edges().len(), 2 * mesh.n_faces(), &t)
}

impl OperatorSet {
    pub fn new(
        mesh: &TriMesh,
        atlas: &TransportAtlas,
        d: u32,
        r: f64,
        k_max: usize,
    ) -> Result<Self, OperatorError> {
        if !(r > 0.0) {
            return Err(OperatorError::BadRadius(r));
        }
        let fem = assemble_linear_fem(mesh, atlas);
        let kk = k_max as i64;
        let p = (-kk..=kk)
            .into_par_iter()
            .map(|k| assemble_p(mesh, atlas, k, d))
            .collect();
        let l = (0..=kk)
            .into_par_iter()
            .map(|k| assemble_l(mesh, atlas, &fem, k, d, r))
            .collect::<Result<Vec<_>, _>>()?;
        let l0 = assemble_l0(mesh, &fem);
        let cr = assemble_cr(mesh, &fem)?;
        let b = assemble_b(mesh, atlas);
        Ok(OperatorSet {
            d,
            r,
            k_max,
            fem,
            p,
            l,
            l0,
            cr,
            b,
        })
    }

    pub fn p(&self, k: i64) -> &SpC {
        &self.p[(k + self.k_max as i64) as usize]
    }

    pub fn n_interior_edges(&self) -> usize {
        self.cr.m_hat.len()
    }

    pub fn n_boundary_rows(&self) -> usize {
        self.b.nrows()
    }
}

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use num_complex::Complex64;

use super::Problem;
use crate::bundle::{BoundaryData, TAU_BAR_V};
use crate::error::SolverError;
use crate::mesh::TriMesh;
use crate::operators::OperatorSet;
use crate::sparse::{apply, apply_adjoint, from_triplets, split_block, triplets, Cholesky, SpC, SpR};

fn norm_c(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn norm_r(x: &[f64]) -> f64 {
    x.iter().map(|z| z * z).sum::<f64>().sqrt()
}

/// Right-hand side `P_k† G† A U h − i k r⁻² P_k† M v` for one frequency.
pub fn rhs_k(ops: &OperatorSet, k: i64, coef: &[[Complex64; 3]]) -> Vec<Complex64> {
    let nc = coef.len();
    let mut h = Vec::with_capacity(2 * nc);
    let mut v = Vec::with_capacity(nc);
    for c in coef {
        h.push(c[0]);
        h.push(c[1]);
        v.push(c[2]);
    }
    let mut uh = apply(&ops.fem.u, &h);
    for (i, x) in uh.iter_mut().enumerate() {
        *x *= ops.fem.areas[i / 2];
    }
    let mut y = apply_adjoint(&ops.fem.g, &uh);
    let mv = apply(&ops.fem.m, &v);
    let s = Complex64::new(0.0, -(k as f64) / (ops.r * ops.r));
    for (a, b) in y.iter_mut().zip(&mv) {
        *a += s * b;
    }
    apply_adjoint(ops.p(k), &y)
}

/// Interior block of `L_k`, factored once, with the pinned boundary values.
pub struct KSystem {
    pub k: i64,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    chol: Option<Cholesky<Complex64>>,
    l_ii: SpC,
    /// Fixed boundary values `τ̄_V · f^{(k)}`.
    pub f_boundary: Vec<Complex64>,
    /// `L_IB f_B`.
    shift: Vec<Complex64>,
}

impl KSystem {
    pub fn new(mesh: &TriMesh, ops: &OperatorSet, bd: &BoundaryData, k: i64) -> Result<Self, SolverError> {
        let nv = mesh.n_vertices();
        let keep: Vec<bool> = (0..nv).map(|v| !mesh.is_boundary_vertex(v)).collect();
        let interior: Vec<usize> = (0..nv).filter(|&v| keep[v]).collect();
        let boundary: Vec<usize> = (0..nv).filter(|&v| !keep[v]).collect();
        let (l_ii, l_ib) = split_block(&ops.l[k as usize], &keep);
        let f_boundary: Vec<Complex64> = boundary.iter().map(|&v| bd.coefficient(v, k) * TAU_BAR_V).collect();
        let shift = apply(&l_ib, &f_boundary);
        let chol = if interior.is_empty() {
            None
        } else {
            Some(Cholesky::new(&l_ii).ok_or(SolverError::Factorization { k })?)
        };
        Ok(KSystem {
            k,
            interior,
            boundary,
            chol,
            l_ii,
            f_boundary,
            shift,
        })
    }

    /// Solves for `f_k` given the frequency-`k` components of `Σ − τ̄ + w`;
    /// returns the full vector and the relative residual of the interior rows.
    pub fn solve(&self, p: &Problem, coef: &[[Complex64; 3]]) -> (Vec<Complex64>, f64) {
        let rhs = rhs_k(&p.ops, self.k, coef);
        self.solve_rhs(&rhs, p.mesh.n_vertices())
    }

    pub fn solve_rhs(&self, rhs: &[Complex64], nv: usize) -> (Vec<Complex64>, f64) {
        let mut f = vec![Complex64::new(0.0, 0.0); nv];
        for (i, &v) in self.boundary.iter().enumerate() {
            f[v] = self.f_boundary[i];
        }
        let Some(chol) = &self.chol else {
            return (f, 0.0);
        };
        let b: Vec<Complex64> = self
            .interior
            .iter()
            .zip(&self.shift)
            .map(|(&v, s)| rhs[v] - s)
            .collect();
        let x = chol.solve(&b);
        let lx = apply(&self.l_ii, &x);
        let r: Vec<Complex64> = lx.iter().zip(&b).map(|(a, b)| a - b).collect();
        let scale = norm_c(&b).max(norm_c(&self.shift)).max(norm_c(&lx));
        let res = if scale > 0.0 { norm_c(&r) / scale } else { 0.0 };
        for (&v, xi) in self.interior.iter().zip(x) {
            f[v] = xi;
        }
        (f, res)
    }
}

struct PhiSystem {
    ratio_bits: u64,
    chol: Cholesky<f64>,
    /// `Kφ⁻¹ C2ᵀ`, column-major `E_int × E_bd`.
    z2: Vec<f64>,
    /// `C2 Kφ⁻¹ C2ᵀ`.
    s2: Vec<f64>,
}

struct SchurFactor {
    mu: f64,
    nu: f64,
    llt: faer::linalg::solvers::Llt<f64>,
}

/// Factorizations that depend on the current penalties.
#[derive(Default)]
pub struct K0Cache {
    phi: Vec<Arc<PhiSystem>>,
    schur: Option<SchurFactor>,
}

const PHI_CACHE: usize = 8;

pub struct K0Solution {
    pub f0: Vec<f64>,
    pub phi: Vec<f64>,
    pub beta: Vec<f64>,
    pub residual: f64,
    pub conservation: f64,
}

/// The frequency-0 saddle-point system in `(f_0, φ, β)`.
pub struct K0System {
    /// Vertex whose `f_0` is fixed at zero (constant gauge).
    pub pin: usize,
    free: Vec<usize>,
    l0_ff: Cholesky<f64>,
    c1_free: SpR,
    /// `B G P_0`, all vertex columns.
    pub c1: SpR,
    /// `B J Ĝ`.
    pub c2: SpR,
    /// `L̂ M̂⁻¹ L̂`.
    l_hat_sq: SpR,
    z1: Vec<f64>,
    s1: Vec<f64>,
    ell: f64,
}

/// Dense `C Z` for sparse `C` (`nr × n`) and column-major `Z` (`n × m`).
fn sparse_times_dense(c: &SpR, z: &[f64], m: usize) -> Vec<f64> {
    let nr = c.nrows();
    let n = c.ncols();
    let mut out = vec![0.0; nr * m];
    for (i, j, v) in triplets(c) {
        for col in 0..m {
            out[i + col * nr] += v * z[j + col * n];
        }
    }
    out
}

fn dense_columns(c: &SpR) -> Vec<f64> {
    // column-major Cᵀ: n × nr
    let n = c.ncols();
    let mut out = vec![0.0; n * c.nrows()];
    for (i, j, v) in triplets(c) {
        out[j + i * n] += v;
    }
    out
}

fn dense_matvec(z: &[f64], nrows: usize, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; nrows];
    for (col, &xc) in x.iter().enumerate() {
        if xc == 0.0 {
            continue;
        }
        for (o, zv) in out.iter_mut().zip(&z[col * nrows..(col + 1) * nrows]) {
            *o += zv * xc;
        }
    }
    out
}

impl K0System {
    pub fn new(mesh: &TriMesh, ops: &OperatorSet, ell: f64) -> Result<Self, SolverError> {
        let nv = mesh.n_vertices();
        let pin = mesh.boundary_loops()[0][0];
        let keep: Vec<bool> = (0..nv).map(|v| v != pin).collect();
        let free: Vec<usize> = (0..nv).filter(|&v| keep[v]).collect();
        let (l0_ff, _) = split_block(&ops.l0, &keep);
        let l0_ff = Cholesky::new(&l0_ff).ok_or(SolverError::Factorization { k: 0 })?;

        // B G P_0 and B J Ĝ, by composing the assembled factors
        let nb = ops.n_boundary_rows();
        let mut c1 = Vec::new();
        let mut c2 = Vec::new();
        let bt = triplets(&ops.b);
        let g = &ops.fem.grads;
        let g_hat_rows = rows_of(&ops.cr.g_hat);
        for &(row, col, e) in &bt {
            let f = col / 2;
            let ax = col % 2;
            for j in 0..3 {
                c1.push((row, mesh.triangles()[f][j], e * g[f][j][ax]));
            }
            // (J Ĝ)[2f] = −Ĝ[2f+1], (J Ĝ)[2f+1] = Ĝ[2f]
            let (src, sign) = if ax == 0 { (2 * f + 1, -1.0) } else { (2 * f, 1.0) };
            for &(q, v) in &g_hat_rows[src] {
                c2.push((row, q, sign * e * v));
            }
        }
        let c1 = from_triplets(nb, nv, &c1);
        let c2 = from_triplets(nb, ops.n_interior_edges(), &c2);
        let mut free_index = vec![usize::MAX; nv];
        for (i, &v) in free.iter().enumerate() {
            free_index[v] = i;
        }
        let c1_free: Vec<_> = triplets(&c1)
            .into_iter()
            .filter(|t| t.1 != pin)
            .map(|(i, j, v)| (i, free_index[j], v))
            .collect();
        let c1_free = from_triplets(nb, free.len(), &c1_free);

        let mut z1 = dense_columns(&c1_free);
        l0_ff.solve_block_in_place(&mut z1, nb);
        let s1 = sparse_times_dense(&c1_free, &z1, nb);

        let l_hat_sq = ops.cr.l_hat_squared();

        Ok(K0System {
            pin,
            free,
            l0_ff,
            c1_free,
            c1,
            c2,
            l_hat_sq,
            z1,
            s1,
            ell,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.c1.nrows()
    }

    /// `G P_0 f_0 + J Ĝ φ` per face.
    pub fn horizontal(&self, ops: &OperatorSet, f0: &[Complex64], phi: &[f64]) -> Vec<f64> {
        let corner: Vec<f64> = apply(ops.p(0), f0).iter().map(|z| z.re).collect();
        let mut h = apply(&ops.fem.g, &corner);
        let gp = apply(&ops.cr.g_hat, phi);
        let jg = apply(&ops.fem.j, &gp);
        for (a, b) in h.iter_mut().zip(&jg) {
            *a += b;
        }
        h
    }

    fn phi_system(&self, ops: &OperatorSet, cache: &mut K0Cache, ratio: f64) -> Result<Arc<PhiSystem>, SolverError> {
        let bits = ratio.to_bits();
        if let Some(s) = cache.phi.iter().find(|s| s.ratio_bits == bits) {
            return Ok(s.clone());
        }
        let c = ratio * self.ell;
        let mut t = triplets(&self.l_hat_sq);
        t.extend(triplets(&ops.cr.l_hat).into_iter().map(|(i, j, v)| (i, j, c * v)));
        let ni = ops.n_interior_edges();
        let k = from_triplets(ni, ni, &t);
        let chol = Cholesky::new(&k).ok_or(SolverError::Factorization { k: 0 })?;
        let nb = self.n_rows();
        let mut z2 = dense_columns(&self.c2);
        chol.solve_block_in_place(&mut z2, nb);
        let s2 = sparse_times_dense(&self.c2, &z2, nb);
        let sys = Arc::new(PhiSystem {
            ratio_bits: bits,
            chol,
            z2,
            s2,
        });
        if cache.phi.len() >= PHI_CACHE {
            cache.phi.remove(0);
        }
        cache.phi.push(sys.clone());
        Ok(sys)
    }

    /// Solves the saddle-point system for the current penalties.
    /// `coef0` holds the frequency-0 components of `Σ − τ̄ + w` per corner
    /// and `g = Γ − κ̄ + z`.
    pub fn solve(
        &self,
        p: &Problem,
        cache: &mut K0Cache,
        coef0: &[[Complex64; 3]],
        g: &[f64],
        mu: f64,
        nu: f64,
    ) -> Result<K0Solution, SolverError> {
        let ops = &p.ops;
        let nb = self.n_rows();
        let nv = p.mesh.n_vertices();
        let mul = mu * self.ell;
        let ratio = mu / nu;
        let c = mul / nu;
        let phi_sys = self.phi_system(ops, cache, ratio)?;

        let need = match &cache.schur {
            Some(s) => s.mu != mu || s.nu != nu,
            None => true,
        };
        if need {
            let s = Mat::<f64>::from_fn(nb, nb, |i, j| self.s1[i + j * nb] / mul + phi_sys.s2[i + j * nb] / nu);
            let llt = s.llt(Side::Lower).map_err(|_| SolverError::SingularSchur)?;
            cache.schur = Some(SchurFactor { mu, nu, llt });
        }
        let schur = cache.schur.as_ref().unwrap();

        // A U h_0 per face
        let mut h = Vec::with_capacity(2 * coef0.len());
        for cf in coef0 {
            h.push(cf[0].re);
            h.push(cf[1].re);
        }
        let mut auh = apply(&ops.fem.u, &h);
        for (i, x) in auh.iter_mut().enumerate() {
            *x *= ops.fem.areas[i / 2];
        }
        let b1_unit = apply_adjoint(&ops.fem.g, &auh); // per corner
        let b1_unit: Vec<f64> = {
            let pc: Vec<Complex64> = b1_unit.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            apply_adjoint(ops.p(0), &pc).iter().map(|z| z.re).collect()
        };
        let jt = apply_adjoint(&ops.fem.j, &auh);
        let b2_unit = apply_adjoint(&ops.cr.g_hat, &jt);
        let lg = apply(&ops.cr.l_hat, g);

        let rhs1: Vec<f64> = self.free.iter().map(|&v| b1_unit[v]).collect();
        let y1 = self.l0_ff.solve(&rhs1);
        let rhs2: Vec<f64> = b2_unit.iter().zip(&lg).map(|(a, b)| c * a + b).collect();
        let y2 = phi_sys.chol.solve(&rhs2);

        let mut rs = apply(&self.c1_free, &y1);
        let c2y = apply(&self.c2, &y2);
        for ((a, b), g0) in rs.iter_mut().zip(&c2y).zip(&p.g0) {
            *a += b - g0;
        }
        let beta_m = schur.llt.solve(Mat::<f64>::from_fn(nb, 1, |i, _| rs[i]));
        let beta: Vec<f64> = (0..nb).map(|i| beta_m[(i, 0)]).collect();

        let z1b = dense_matvec(&self.z1, self.free.len(), &beta);
        let z2b = dense_matvec(&phi_sys.z2, g.len(), &beta);
        let mut f0 = vec![0.0; nv];
        for (i, &v) in self.free.iter().enumerate() {
            f0[v] = y1[i] - z1b[i] / mul;
        }
        let phi: Vec<f64> = y2.iter().zip(&z2b).map(|(a, b)| a - b / nu).collect();

        // residual of the full three-block system
        let l0f = apply(&ops.l0, &f0);
        let c1tb = apply_adjoint(&self.c1, &beta);
        let r1: Vec<f64> = (0..nv).map(|v| mul * l0f[v] + c1tb[v] - mul * b1_unit[v]).collect();
        let lphi = apply(&ops.cr.l_hat, &phi);
        let sqphi = apply(&self.l_hat_sq, &phi);
        let c2tb = apply_adjoint(&self.c2, &beta);
        let b2: Vec<f64> = b2_unit.iter().zip(&lg).map(|(a, b)| mul * a + nu * b).collect();
        let r2: Vec<f64> = (0..phi.len())
            .map(|q| nu * (c * lphi[q] + sqphi[q]) + c2tb[q] - b2[q])
            .collect();
        let c1f = apply(&self.c1, &f0);
        let c2p = apply(&self.c2, &phi);
        let r3: Vec<f64> = (0..nb).map(|i| c1f[i] + c2p[i] - p.g0[i]).collect();
        let rn = (norm_r(&r1).powi(2) + norm_r(&r2).powi(2) + norm_r(&r3).powi(2)).sqrt();
        let b1n = mul * norm_r(&b1_unit);
        let bn = (b1n.powi(2) + norm_r(&b2).powi(2) + norm_r(&p.g0).powi(2)).sqrt();
        let lhs_n = (mul * norm_r(&l0f)).max(norm_r(&c1tb)).max(norm_r(&c2tb));
        let scale = bn.max(lhs_n);
        let residual = if scale > 0.0 { rn / scale } else { 0.0 };

        let conservation = (lphi.iter().sum::<f64>() + p.g0.iter().sum::<f64>()).abs();
        Ok(K0Solution {
            f0,
            phi,
            beta,
            residual,
            conservation,
        })
    }
}

fn rows_of(a: &SpR) -> Vec<Vec<(usize, f64)>> {
    let mut rows = vec![Vec::new(); a.nrows()];
    for (i, j, v) in triplets(a) {
        rows[i].push((j, v));
    }
    rows
}

//! Fiber sampling, vertical Fourier transforms, and the fixed data of the
//! problem: τ̄, κ̄ and the Fejér boundary values.
//!
//! Fourier convention: `c_k = (1/N) Σ_m x_m e^{-ikθ_m}` with `θ_m = 2πm/N`,
//! inverse `x_m = Σ_{|k|≤K} c_k e^{ikθ_m}`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::BundleError;
use crate::mesh::{TransportAtlas, TriMesh};

/// Vertical component of τ̄.
pub const TAU_BAR_V: f64 = 1.0 / TAU;

#[derive(Clone, Debug)]
pub struct FiberDiscretization {
    pub n: usize,
    pub k_max: usize,
    pub r: f64,
    /// `e^{-ikθ_m}` at `k·N + m`, `0 ≤ k ≤ K`.
    table: Vec<Complex64>,
}

impl FiberDiscretization {
    pub fn new(n: usize, r: f64) -> Result<Self, BundleError> {
        if n < 8 || n % 2 != 0 {
            return Err(BundleError::BadFiberCount(n));
        }
        let k_max = n / 2 - 1;
        let mut table = Vec::with_capacity((k_max + 1) * n);
        for k in 0..=k_max {
            for m in 0..n {
                // reduce k·m first so large grids keep full accuracy
                let phase = TAU * ((k * m) % n) as f64 / n as f64;
                table.push(Complex64::from_polar(1.0, -phase));
            }
        }
        Ok(FiberDiscretization { n, k_max, r, table })
    }

    pub fn theta(&self, m: usize) -> f64 {
        TAU * m as f64 / self.n as f64
    }

    /// Fiber length `2πr`.
    pub fn ell(&self) -> f64 {
        TAU * self.r
    }

    fn e(&self, k: usize, m: usize) -> Complex64 {
        self.table[k * self.n + m]
    }

    /// Coefficients `c_{-K..K}` at index `k + K`.
    pub fn forward(&self, x: &[Complex64]) -> Result<Vec<Complex64>, BundleError> {
        self.check(x.len())?;
        let kk = self.k_max as i64;
        let inv = 1.0 / self.n as f64;
        Ok((-kk..=kk)
            .map(|k| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, xm) in x.iter().enumerate() {
                    let e = self.e(k.unsigned_abs() as usize, m);
                    acc += xm * if k >= 0 { e } else { e.conj() };
                }
                acc * inv
            })
            .collect())
    }

    pub fn inverse(&self, c: &[Complex64]) -> Result<Vec<Complex64>, BundleError> {
        if c.len() != 2 * self.k_max + 1 {
            return Err(BundleError::LengthMismatch {
                expected: 2 * self.k_max + 1,
                got: c.len(),
            });
        }
        let kk = self.k_max as i64;
        Ok((0..self.n)
            .map(|m| {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in -kk..=kk {
                    let e = self.e(k.unsigned_abs() as usize, m);
                    // e^{ikθ} is the conjugate of the stored e^{-ikθ} for k ≥ 0
                    acc += c[(k + kk) as usize] * if k >= 0 { e.conj() } else { e };
                }
                acc
            })
            .collect())
    }

    /// Nonnegative-frequency coefficients `c_0..c_K` of a real sequence.
    pub fn forward_real_into(&self, x: &[f64], out: &mut [Complex64]) {
        let inv = 1.0 / self.n as f64;
        for (k, o) in out.iter_mut().enumerate().take(self.k_max + 1) {
            let row = &self.table[k * self.n..(k + 1) * self.n];
            let mut acc = Complex64::new(0.0, 0.0);
            for (xm, e) in x.iter().zip(row) {
                acc += e * *xm;
            }
            *o = acc * inv;
        }
    }

    /// Real sequence from `c_0..c_K`, using `c_{-k} = conj(c_k)`.
    pub fn inverse_real_into(&self, c: &[Complex64], out: &mut [f64]) {
        for (m, o) in out.iter_mut().enumerate().take(self.n) {
            let mut acc = c[0].re;
            for k in 1..=self.k_max {
                // Re(c e^{ikθ}) = Re(c · conj(e^{-ikθ}))
                let e = self.e(k, m);
                acc += 2.0 * (c[k].re * e.re + c[k].im * e.im);
            }
            *o = acc;
        }
    }

    /// Three interleaved real sequences at once; `out` holds `c_0..c_K`.
    pub fn forward3(&self, x: &[[f64; 3]], out: &mut [[Complex64; 3]]) {
        let inv = 1.0 / self.n as f64;
        for (k, o) in out.iter_mut().enumerate().take(self.k_max + 1) {
            let row = &self.table[k * self.n..(k + 1) * self.n];
            let mut acc = [Complex64::new(0.0, 0.0); 3];
            for (xm, e) in x.iter().zip(row) {
                for (a, xc) in acc.iter_mut().zip(xm) {
                    *a += e * *xc;
                }
            }
            *o = acc.map(|a| a * inv);
        }
    }

    pub fn inverse3(&self, c: &[[Complex64; 3]], out: &mut [[f64; 3]]) {
        for (m, o) in out.iter_mut().enumerate().take(self.n) {
            let mut acc = [c[0][0].re, c[0][1].re, c[0][2].re];
            for (k, ck) in c.iter().enumerate().take(self.k_max + 1).skip(1) {
                let e = self.e(k, m);
                for (a, z) in acc.iter_mut().zip(ck) {
                    *a += 2.0 * (z.re * e.re + z.im * e.im);
                }
            }
            *o = acc;
        }
    }

    fn check(&self, len: usize) -> Result<(), BundleError> {
        if len != self.n {
            return Err(BundleError::LengthMismatch {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }
}

pub fn fourier_forward(fd: &FiberDiscretization, x: &[Complex64]) -> Result<Vec<Complex64>, BundleError> {
    fd.forward(x)
}

pub fn fourier_inverse(fd: &FiberDiscretization, c: &[Complex64]) -> Result<Vec<Complex64>, BundleError> {
    fd.inverse(c)
}

/// `Σ_{|k|≤K} (1 − |k|/K) e^{ik(θ−γ0)}`.
pub fn fejer_delta(gamma0: f64, k_max: usize, theta: f64) -> f64 {
    let x = theta - gamma0;
    let kf = k_max as f64;
    let mut s = 1.0;
    for k in 1..=k_max {
        s += 2.0 * (1.0 - k as f64 / kf) * (k as f64 * x).cos();
    }
    s
}

/// Horizontal and vertical parts of τ̄.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauBar {
    pub h: [f64; 2],
    pub v: f64,
}

pub fn make_tau_bar(_fd: &FiberDiscretization) -> TauBar {
    TauBar {
        h: [0.0, 0.0],
        v: TAU_BAR_V,
    }
}

/// `d·κ_e/(2π)` on interior edges.
pub fn make_kappa_bar(mesh: &TriMesh, atlas: &TransportAtlas, d: u32) -> Vec<f64> {
    mesh.interior_edges()
        .iter()
        .map(|&e| d as f64 * atlas.edge_curvature(e) / TAU)
        .collect()
}

#[derive(Clone, Debug, Default)]
pub enum BoundarySpec {
    #[default]
    Tangent,
    /// Field angles (not multiplied by `d`) in the vertex frames.
    Explicit(Vec<(usize, f64)>),
}

/// Lines of `vertex_index angle_radians`; `#` starts a comment.
pub fn parse_boundary_angles(text: &str) -> Result<Vec<(usize, f64)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let v = it.next().and_then(|s| s.parse().ok());
        let a = it.next().and_then(|s| s.parse().ok());
        match (v, a, it.next()) {
            (Some(v), Some(a), None) => out.push((v, a)),
            _ => return Err(format!("line {}: expected \"vertex_index angle\"", i + 1)),
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct BoundaryData {
    pub d: u32,
    pub k_max: usize,
    /// Degree-d angle per vertex; `None` inside.
    gamma0: Vec<Option<f64>>,
}

fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

pub fn make_boundary_data(
    mesh: &TriMesh,
    atlas: &TransportAtlas,
    spec: &BoundarySpec,
    d: u32,
    k_max: usize,
) -> Result<BoundaryData, BundleError> {
    let nv = mesh.n_vertices();
    let mut gamma0 = vec![None; nv];
    let df = d as f64;
    match spec {
        BoundarySpec::Tangent => {
            for lp in mesh.boundary_loops() {
                let n = lp.len();
                for i in 0..n {
                    let (p, v, q) = (lp[(i + n - 1) % n], lp[i], lp[(i + 1) % n]);
                    let t_in = atlas.to_vertex(v, &(mesh.position(v) - mesh.position(p))).arg();
                    let t_out = atlas.to_vertex(v, &(mesh.position(q) - mesh.position(v))).arg();
                    let s = Complex64::from_polar(1.0, df * t_in) + Complex64::from_polar(1.0, df * t_out);
                    let g = if s.norm() > 1e-8 { s.arg() } else { df * t_out };
                    gamma0[v] = Some(g.rem_euclid(TAU));
                }
            }
        }
        BoundarySpec::Explicit(list) => {
            for &(v, a) in list {
                if v >= nv || !mesh.is_boundary_vertex(v) {
                    return Err(BundleError::NotBoundary(v));
                }
                gamma0[v] = Some((df * a).rem_euclid(TAU));
            }
            if let Some(v) = (0..nv).find(|&v| mesh.is_boundary_vertex(v) && gamma0[v].is_none()) {
                return Err(BundleError::MissingBoundaryAngle(v));
            }
        }
    }
    Ok(BoundaryData { d, k_max, gamma0 })
}

impl BoundaryData {
    pub fn gamma0(&self, v: usize) -> Option<f64> {
        self.gamma0[v]
    }

    /// `(1 − |k|/K) e^{-ikγ0}/(ik)` for `0 < |k| ≤ K`; zero at `k = 0` and
    /// away from the boundary.
    pub fn coefficient(&self, v: usize, k: i64) -> Complex64 {
        let Some(g) = self.gamma0[v] else {
            return Complex64::new(0.0, 0.0);
        };
        if k == 0 || k.unsigned_abs() as usize > self.k_max {
            return Complex64::new(0.0, 0.0);
        }
        let w = 1.0 - k.unsigned_abs() as f64 / self.k_max as f64;
        Complex64::from_polar(w, -(k as f64) * g) / Complex64::new(0.0, k as f64)
    }

    /// Frequency-0 right-hand side per boundary edge: minus the change of
    /// the boundary angle along the edge, measured in its face, over 2π.
    pub fn frequency0_rows(&self, mesh: &TriMesh, atlas: &TransportAtlas) -> Vec<f64> {
        let df = self.d as f64;
        mesh.boundary_edges()
            .iter()
            .map(|be| {
                let f = be.face;
                let ja = mesh.corner_of(f, be.from).unwrap();
                let jb = mesh.corner_of(f, be.to).unwrap();
                let ga = self.gamma0[be.from].unwrap() + df * atlas.rho(f, ja).arg();
                let gb = self.gamma0[be.to].unwrap() + df * atlas.rho(f, jb).arg();
                -wrap_angle(gb - ga) / TAU
            })
            .collect()
    }
}

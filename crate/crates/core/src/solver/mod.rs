//! ADMM for the minimal-section problem.
//!
//! Each iteration runs the global linear step (one Hermitian solve per
//! frequency `k ≥ 1`, plus the saddle-point system at `k = 0`), the
//! pointwise shrinkage steps for Σ and Γ, and the scaled dual updates.

mod global;
mod local;

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bundle::{
    make_boundary_data, make_kappa_bar, BoundaryData, BoundarySpec, FiberDiscretization, TAU_BAR_V,
};
use crate::error::SolverError;
use crate::mesh::{build_transport, TransportAtlas, TriMesh};
use crate::operators::OperatorSet;

pub use global::{rhs_k, K0Cache, K0Solution, K0System, KSystem};
pub use local::{adapt_penalty, local_step_gamma, local_step_sigma, shrink_sample, PenaltyChange};

#[derive(Clone, Debug, PartialEq)]
pub enum Lambda {
    Uniform(f64),
    /// One value per interior edge.
    PerEdge(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub lambda: Lambda,
    pub r: f64,
    pub d: u32,
    pub n: usize,
    pub epsilon: f64,
    pub max_iters: usize,
    pub mu: f64,
    pub nu: f64,
    pub adapt_ratio: f64,
    pub adapt_scale: f64,
    /// Interior edges (by interior index) where Γ is pinned to zero.
    pub mask: Vec<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: Lambda::Uniform(1.0),
            r: 1.0,
            d: 1,
            n: 64,
            epsilon: 5e-4,
            max_iters: 2000,
            mu: 1.0,
            nu: 1.0,
            adapt_ratio: 10.0,
            adapt_scale: 2.0,
            mask: Vec::new(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::Config(m.to_string()));
        match &self.lambda {
            Lambda::Uniform(l) if !(*l >= 0.0) => return bad("lambda must be nonnegative"),
            Lambda::PerEdge(v) if v.iter().any(|l| !(*l >= 0.0)) => return bad("lambda must be nonnegative"),
            _ => {}
        }
        if !(self.r > 0.0) {
            return bad("radius must be positive");
        }
        if self.d == 0 {
            return bad("degree must be positive");
        }
        if self.n < 8 || self.n % 2 != 0 {
            return bad("N must be even and ≥ 8");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.mu > 0.0) || !(self.nu > 0.0) {
            return bad("penalties must be positive");
        }
        if !(self.adapt_ratio > 1.0) || !(self.adapt_scale > 1.0) {
            return bad("adaptive factors must exceed 1");
        }
        Ok(())
    }
}

/// ADMM iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct BundleState {
    /// Covector samples `(h_x, h_y, v)` at `corner·N + m`; `h` in the face frame.
    pub sigma: Vec<[f64; 3]>,
    pub gamma: Vec<f64>,
    /// `f_k` for `0 ≤ k ≤ K`; `f_{-k} = conj(f_k)`.
    pub f: Vec<Vec<Complex64>>,
    pub phi: Vec<f64>,
    pub w: Vec<[f64; 3]>,
    pub z: Vec<f64>,
    pub mu: f64,
    pub nu: f64,
    pub iteration: usize,
}

impl BundleState {
    pub fn f_k(&self, k: i64, v: usize) -> Complex64 {
        let z = self.f[k.unsigned_abs() as usize][v];
        if k < 0 {
            z.conj()
        } else {
            z
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Residuals {
    pub primal_mu: f64,
    pub dual_mu: f64,
    pub primal_nu: f64,
    pub dual_nu: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal_mu.max(self.dual_mu).max(self.primal_nu).max(self.dual_nu)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PhaseTimings {
    pub setup: Duration,
    pub global: Duration,
    pub local: Duration,
    pub dual: Duration,
    pub residuals: Duration,
}

#[derive(Clone, Debug, Default)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub iterations: usize,
    pub history: Vec<Residuals>,
    pub objective: Vec<f64>,
    pub penalties: Vec<(f64, f64)>,
    /// Largest relative residual of any `k ≠ 0` solve.
    pub k_residual_max: f64,
    /// Largest relative residual of the frequency-0 saddle-point system.
    pub kkt_residual_max: f64,
    pub kkt_residual_last: f64,
    /// Largest violation of `Σ L̂φ = −Σ g_0` over all iterations.
    pub conservation_max: f64,
    pub timings: PhaseTimings,
}

/// Everything fixed for one (mesh, config, boundary) triple.
pub struct Problem {
    pub mesh: TriMesh,
    pub atlas: TransportAtlas,
    pub ops: OperatorSet,
    pub fd: FiberDiscretization,
    pub bd: BoundaryData,
    pub kappa_bar: Vec<f64>,
    pub lambda: Vec<f64>,
    pub masked: Vec<bool>,
    /// Frequency-0 boundary rows.
    pub g0: Vec<f64>,
    /// Corner weights `A_T/3`.
    pub corner_weight: Vec<f64>,
    pub config: SolverConfig,
    pub k_systems: Vec<KSystem>,
    pub k0: K0System,
}

impl Problem {
    pub fn new(mesh: &TriMesh, config: &SolverConfig, spec: &BoundarySpec) -> Result<Self, SolverError> {
        let atlas = build_transport(mesh)?;
        Self::with_atlas(mesh, atlas, config, spec)
    }

    pub fn with_atlas(
        mesh: &TriMesh,
        atlas: TransportAtlas,
        config: &SolverConfig,
        spec: &BoundarySpec,
    ) -> Result<Self, SolverError> {
        config.validate()?;
        let fd = FiberDiscretization::new(config.n, config.r)?;
        let ops = OperatorSet::new(mesh, &atlas, config.d, config.r, fd.k_max)?;
        let bd = make_boundary_data(mesh, &atlas, spec, config.d, fd.k_max)?;
        let kappa_bar = make_kappa_bar(mesh, &atlas, config.d);
        let ni = ops.n_interior_edges();
        let lambda = match &config.lambda {
            Lambda::Uniform(l) => vec![*l; ni],
            Lambda::PerEdge(v) => {
                if v.len() != ni {
                    return Err(SolverError::Shape(format!(
                        "lambda field has {} entries for {ni} interior edges",
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        let mut masked = vec![false; ni];
        for &q in &config.mask {
            if q >= ni {
                return Err(SolverError::Shape(format!("mask edge {q} out of range")));
            }
            masked[q] = true;
        }
        let g0 = bd.frequency0_rows(mesh, &atlas);
        let corner_weight = (0..mesh.n_corners()).map(|c| mesh.face_area(c / 3) / 3.0).collect();
        let k_systems = (1..=fd.k_max as i64)
            .into_par_iter()
            .map(|k| KSystem::new(mesh, &ops, &bd, k))
            .collect::<Result<Vec<_>, _>>()?;
        let k0 = K0System::new(mesh, &ops, fd.ell())?;
        Ok(Problem {
            mesh: mesh.clone(),
            atlas,
            ops,
            fd,
            bd,
            kappa_bar,
            lambda,
            masked,
            g0,
            corner_weight,
            config: config.clone(),
            k_systems,
            k0,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.mesh.n_corners() * self.fd.n
    }

    pub fn init_state(&self) -> BundleState {
        let ns = self.n_samples();
        let nv = self.mesh.n_vertices();
        let ni = self.ops.n_interior_edges();
        BundleState {
            sigma: vec![[0.0, 0.0, TAU_BAR_V]; ns],
            gamma: self.kappa_bar.clone(),
            f: vec![vec![Complex64::new(0.0, 0.0); nv]; self.fd.k_max + 1],
            phi: vec![0.0; ni],
            w: vec![[0.0; 3]; ns],
            z: vec![0.0; ni],
            mu: self.config.mu,
            nu: self.config.nu,
            iteration: 0,
        }
    }

    /// Frequency components `c_0..c_K` of `Σ − τ̄ + w`, frequency-major.
    pub fn alpha_coefficients(&self, state: &BundleState) -> Vec<Vec<[Complex64; 3]>> {
        let n = self.fd.n;
        let kk = self.fd.k_max;
        let nc = self.mesh.n_corners();
        let mut tmp = vec![[Complex64::new(0.0, 0.0); 3]; nc * (kk + 1)];
        tmp.par_chunks_mut(kk + 1).enumerate().for_each_init(
            || vec![[0.0; 3]; n],
            |buf, (c, out)| {
                for m in 0..n {
                    let s = state.sigma[c * n + m];
                    let w = state.w[c * n + m];
                    buf[m] = [s[0] + w[0], s[1] + w[1], s[2] - TAU_BAR_V + w[2]];
                }
                self.fd.forward3(buf, out);
            },
        );
        (0..=kk)
            .into_par_iter()
            .map(|k| (0..nc).map(|c| tmp[c * (kk + 1) + k]).collect())
            .collect()
    }

    /// Frequency components of `τ̄ + df + ⋆dφ` at the corners.
    pub fn target_coefficients(&self, state: &BundleState) -> Vec<Vec<[Complex64; 3]>> {
        let kk = self.fd.k_max;
        let nf = self.mesh.n_faces();
        let grads = &self.ops.fem.grads;
        let tris = self.mesh.triangles();
        let mut out: Vec<Vec<[Complex64; 3]>> = (1..=kk)
            .into_par_iter()
            .map(|k| {
                let f = &state.f[k];
                let kf = k as f64;
                let mut col = vec![[Complex64::new(0.0, 0.0); 3]; 3 * nf];
                for t in 0..nf {
                    let pf: [Complex64; 3] = std::array::from_fn(|j| {
                        crate::operators::corner_phase(&self.atlas, t, j, k as i64, self.ops.d) * f[tris[t][j]]
                    });
                    let mut h = [Complex64::new(0.0, 0.0); 2];
                    for j in 0..3 {
                        h[0] += pf[j] * grads[t][j][0];
                        h[1] += pf[j] * grads[t][j][1];
                    }
                    for j in 0..3 {
                        col[3 * t + j] = [h[0], h[1], Complex64::new(0.0, kf) * pf[j]];
                    }
                }
                col
            })
            .collect();
        let h0 = self.k0.horizontal(&self.ops, &state.f[0], &state.phi);
        let mut col0 = vec![[Complex64::new(0.0, 0.0); 3]; 3 * nf];
        for t in 0..nf {
            for j in 0..3 {
                col0[3 * t + j] = [
                    Complex64::new(h0[2 * t], 0.0),
                    Complex64::new(h0[2 * t + 1], 0.0),
                    Complex64::new(TAU_BAR_V, 0.0),
                ];
            }
        }
        out.insert(0, col0);
        out
    }

    /// Samples of `τ̄ + df + ⋆dφ` (before the dual is subtracted).
    pub fn target_samples(&self, coef: &[Vec<[Complex64; 3]>]) -> Vec<[f64; 3]> {
        let n = self.fd.n;
        let kk = self.fd.k_max;
        let mut out = vec![[0.0; 3]; self.n_samples()];
        out.par_chunks_mut(n).enumerate().for_each_init(
            || vec![[Complex64::new(0.0, 0.0); 3]; kk + 1],
            |buf, (c, o)| {
                for k in 0..=kk {
                    buf[k] = coef[k][c];
                }
                self.fd.inverse3(buf, o);
            },
        );
        out
    }

    /// `Σ̂ = τ̄ + df + ⋆dφ − w`.
    pub fn reconstruct_sigma_hat(&self, state: &BundleState) -> Vec<[f64; 3]> {
        let mut t = self.target_samples(&self.target_coefficients(state));
        for (s, w) in t.iter_mut().zip(&state.w) {
            for i in 0..3 {
                s[i] -= w[i];
            }
        }
        t
    }

    /// `M̂⁻¹ L̂ φ + κ̄`.
    pub fn gamma_target(&self, phi: &[f64]) -> Vec<f64> {
        let lp = crate::sparse::apply(&self.ops.cr.l_hat, phi);
        lp.iter()
            .zip(&self.ops.cr.m_hat)
            .zip(&self.kappa_bar)
            .map(|((l, m), k)| l / m + k)
            .collect()
    }

    /// Sample weight `(A_T/3)·(ℓ/N)` times the fiber metric.
    pub fn sigma_norm_sq(&self, x: &[[f64; 3]]) -> f64 {
        let n = self.fd.n;
        let inv_r2 = 1.0 / (self.config.r * self.config.r);
        let dw = self.fd.ell() / n as f64;
        let mut total = 0.0;
        for (c, chunk) in x.chunks(n).enumerate() {
            let mut s = 0.0;
            for v in chunk {
                s += v[0] * v[0] + v[1] * v[1] + inv_r2 * v[2] * v[2];
            }
            total += self.corner_weight[c] * dw * s;
        }
        total
    }

    pub fn gamma_norm_sq(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.ops.cr.m_hat).map(|(g, m)| m * g * g).sum()
    }

    /// `M(Σ) + Σ_e λ_e M̂_e |Γ_e|`.
    pub fn objective(&self, state: &BundleState) -> f64 {
        self.sigma_mass(&state.sigma) + self.gamma_mass(&state.gamma)
    }

    pub fn sigma_mass(&self, sigma: &[[f64; 3]]) -> f64 {
        let n = self.fd.n;
        let inv_r2 = 1.0 / (self.config.r * self.config.r);
        let dw = self.fd.ell() / n as f64;
        let mut total = 0.0;
        for (c, chunk) in sigma.chunks(n).enumerate() {
            let mut s = 0.0;
            for v in chunk {
                s += (v[0] * v[0] + v[1] * v[1] + inv_r2 * v[2] * v[2]).sqrt();
            }
            total += self.corner_weight[c] * dw * s;
        }
        total
    }

    pub fn gamma_mass(&self, gamma: &[f64]) -> f64 {
        gamma
            .iter()
            .zip(&self.ops.cr.m_hat)
            .zip(&self.lambda)
            .map(|((g, m), l)| l * m * g.abs())
            .sum()
    }
}

/// Runs ADMM from the initial state.
pub struct Solver {
    pub problem: Problem,
    cache: global::K0Cache,
}

pub struct AdmmRun {
    pub problem: Problem,
    pub state: BundleState,
    pub report: ConvergenceReport,
}

pub fn run_admm(mesh: &TriMesh, config: &SolverConfig, spec: &BoundarySpec) -> Result<AdmmRun, SolverError> {
    let t0 = Instant::now();
    let problem = Problem::new(mesh, config, spec)?;
    let setup = t0.elapsed();
    let mut solver = Solver::new(problem);
    let mut state = solver.problem.init_state();
    let mut report = solver.run(&mut state)?;
    report.timings.setup = setup;
    Ok(AdmmRun {
        problem: solver.problem,
        state,
        report,
    })
}

impl Solver {
    pub fn new(problem: Problem) -> Self {
        Solver {
            problem,
            cache: global::K0Cache::default(),
        }
    }

    /// Iterates until every residual is below `ε` or the cap is hit.
    pub fn run(&mut self, state: &mut BundleState) -> Result<ConvergenceReport, SolverError> {
        let mut report = ConvergenceReport::default();
        let cap = self.problem.config.max_iters;
        let eps = self.problem.config.epsilon;
        while state.iteration < cap {
            let res = self.step(state, &mut report)?;
            if res.max() < eps {
                report.converged = true;
                break;
            }
        }
        report.iterations = state.iteration;
        if !report.converged {
            log::warn!("ADMM stopped at the iteration cap ({cap}) before reaching ε = {eps:e}");
        }
        Ok(report)
    }

    /// One global → local → dual → residual → penalty pass.
    pub fn step(&mut self, state: &mut BundleState, report: &mut ConvergenceReport) -> Result<Residuals, SolverError> {
        let p = &self.problem;

        let t = Instant::now();
        let alpha = p.alpha_coefficients(state);
        let solved: Vec<(Vec<Complex64>, f64)> = p
            .k_systems
            .par_iter()
            .map(|ks| ks.solve(p, &alpha[ks.k as usize]))
            .collect();
        for (k, (f, res)) in solved.into_iter().enumerate() {
            state.f[k + 1] = f;
            report.k_residual_max = report.k_residual_max.max(res);
        }
        let g: Vec<f64> = (0..state.gamma.len())
            .map(|q| state.gamma[q] - p.kappa_bar[q] + state.z[q])
            .collect();
        let sol = p.k0.solve(p, &mut self.cache, &alpha[0], &g, state.mu, state.nu)?;
        state.f[0] = sol.f0.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        state.phi = sol.phi;
        report.kkt_residual_max = report.kkt_residual_max.max(sol.residual);
        report.kkt_residual_last = sol.residual;
        report.conservation_max = report.conservation_max.max(sol.conservation);
        let target = p.target_samples(&p.target_coefficients(state));
        let gamma_target = p.gamma_target(&state.phi);
        report.timings.global += t.elapsed();

        let t = Instant::now();
        let sigma_old = std::mem::take(&mut state.sigma);
        let mut sigma: Vec<[f64; 3]> = target
            .par_iter()
            .zip(&state.w)
            .map(|(x, w)| [x[0] - w[0], x[1] - w[1], x[2] - w[2]])
            .collect();
        local_step_sigma(&mut sigma, state.mu, p.config.r);
        state.sigma = sigma;
        let gamma_old = std::mem::take(&mut state.gamma);
        let gamma_hat: Vec<f64> = gamma_target.iter().zip(&state.z).map(|(t, z)| t - z).collect();
        state.gamma = local_step_gamma(&gamma_hat, state.nu, &p.lambda, &p.masked);
        report.timings.local += t.elapsed();

        let t = Instant::now();
        let primal_sigma: Vec<[f64; 3]> = state
            .sigma
            .par_iter()
            .zip(&target)
            .map(|(s, x)| [s[0] - x[0], s[1] - x[1], s[2] - x[2]])
            .collect();
        state.w.par_iter_mut().zip(&primal_sigma).for_each(|(w, r)| {
            for i in 0..3 {
                w[i] += r[i];
            }
        });
        let primal_gamma: Vec<f64> = state.gamma.iter().zip(&gamma_target).map(|(g, t)| g - t).collect();
        for (z, r) in state.z.iter_mut().zip(&primal_gamma) {
            *z += r;
        }
        report.timings.dual += t.elapsed();

        let t = Instant::now();
        let dsig: Vec<[f64; 3]> = state
            .sigma
            .par_iter()
            .zip(&sigma_old)
            .map(|(a, b)| [a[0] - b[0], a[1] - b[1], a[2] - b[2]])
            .collect();
        let dgam: Vec<f64> = state.gamma.iter().zip(&gamma_old).map(|(a, b)| a - b).collect();
        let res = Residuals {
            primal_mu: p.sigma_norm_sq(&primal_sigma).sqrt(),
            dual_mu: p.sigma_norm_sq(&dsig).sqrt(),
            primal_nu: p.gamma_norm_sq(&primal_gamma).sqrt(),
            dual_nu: p.gamma_norm_sq(&dgam).sqrt(),
        };
        report.history.push(res);
        report.objective.push(p.objective(state));
        report.timings.residuals += t.elapsed();

        let ratio = p.config.adapt_ratio;
        let scale = p.config.adapt_scale;
        match adapt_penalty(res.primal_mu, res.dual_mu, ratio) {
            PenaltyChange::Keep => {}
            ch => {
                let s = ch.factor(scale);
                state.mu *= s;
                state.w.par_iter_mut().for_each(|w| {
                    for x in w.iter_mut() {
                        *x /= s;
                    }
                });
            }
        }
        match adapt_penalty(res.primal_nu, res.dual_nu, ratio) {
            PenaltyChange::Keep => {}
            ch => {
                let s = ch.factor(scale);
                state.nu *= s;
                for z in state.z.iter_mut() {
                    *z /= s;
                }
            }
        }
        report.penalties.push((state.mu, state.nu));
        state.iteration += 1;
        Ok(res)
    }
}

//! Vertically symmetric limit of the minimal-section problem: an
//! L1-regularized inverse Poisson problem on the Crouzeix–Raviart edges,
//!
//! `min φᵀ L̂ φ + λ_eff Σ_e M̂_e |Γ_e|` subject to `L̂ φ = M̂ (Γ − κ̄)`,
//!
//! with `φ = 0` on the boundary. Its singularities are not quantized.

use std::f64::consts::TAU;

use crate::bundle::make_kappa_bar;
use crate::error::SolverError;
use crate::mesh::{build_transport, TriMesh};
use crate::operators::{assemble_cr, assemble_linear_fem, CrOperators};
use crate::solver::{adapt_penalty, local_step_gamma, PenaltyChange};
use crate::sparse::{apply, from_triplets, triplets, Cholesky, SpR};

/// `2λ/ℓ²` with `ℓ = 2πr`.
pub fn effective_lambda(lambda: f64, r: f64) -> f64 {
    let ell = TAU * r;
    2.0 * lambda / (ell * ell)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedConfig {
    pub lambda_eff: f64,
    pub nu: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub adapt_ratio: f64,
    pub adapt_scale: f64,
}

impl Default for ReducedConfig {
    fn default() -> Self {
        ReducedConfig {
            lambda_eff: effective_lambda(1.0, 1.0),
            nu: 1.0,
            epsilon: 1e-8,
            max_iters: 20_000,
            adapt_ratio: 10.0,
            adapt_scale: 2.0,
        }
    }
}

impl ReducedConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.lambda_eff >= 0.0) || !self.lambda_eff.is_finite() {
            return Err(SolverError::Config("lambda must be nonnegative".into()));
        }
        if !(self.nu > 0.0) {
            return Err(SolverError::Config("nu must be positive".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(SolverError::Config("epsilon must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReducedResiduals {
    pub primal: f64,
    pub dual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedSolution {
    pub phi: Vec<f64>,
    pub gamma: Vec<f64>,
    pub objective: f64,
    pub history: Vec<ReducedResiduals>,
    pub converged: bool,
    pub iterations: usize,
    /// `Σ_e (L̂φ)_e`: the flux through the boundary that makes `∫Γ` differ
    /// from `∫κ̄`.
    pub boundary_flux: f64,
    /// `‖M̂⁻¹L̂φ − (Γ − κ̄)‖` in the `M̂` norm.
    pub feasibility: f64,
}

impl ReducedSolution {
    /// `Σ_e M̂_e |Γ_e|`.
    pub fn gamma_mass(&self, cr: &CrOperators) -> f64 {
        self.gamma.iter().zip(&cr.m_hat).map(|(g, m)| m * g.abs()).sum()
    }
}

struct Factor {
    nu_bits: u64,
    chol: Cholesky<f64>,
}

fn m_norm(x: &[f64], m: &[f64]) -> f64 {
    x.iter().zip(m).map(|(a, w)| w * a * a).sum::<f64>().sqrt()
}

/// ADMM on the reduced problem.
pub fn solve_reduced(
    cr: &CrOperators,
    kappa_bar: &[f64],
    cfg: &ReducedConfig,
) -> Result<ReducedSolution, SolverError> {
    cfg.validate()?;
    let ni = cr.m_hat.len();
    if kappa_bar.len() != ni {
        return Err(SolverError::Shape(format!(
            "curvature has {} entries for {ni} interior edges",
            kappa_bar.len()
        )));
    }
    let m = &cr.m_hat;
    let l_sq = cr.l_hat_squared();
    let factor_for = |nu: f64| -> Result<Factor, SolverError> {
        let mut t: Vec<(usize, usize, f64)> = triplets(&l_sq).into_iter().map(|(i, j, v)| (i, j, nu * v)).collect();
        t.extend(triplets(&cr.l_hat).into_iter().map(|(i, j, v)| (i, j, 2.0 * v)));
        let a: SpR = from_triplets(ni, ni, &t);
        let chol = Cholesky::new(&a).ok_or(SolverError::Factorization { k: 0 })?;
        Ok(Factor { nu_bits: nu.to_bits(), chol })
    };
    let lambda = vec![cfg.lambda_eff; ni];
    let masked = vec![false; ni];

    let mut nu = cfg.nu;
    let mut factors: Vec<Factor> = vec![factor_for(nu)?];
    let mut phi = vec![0.0; ni];
    let mut gamma = kappa_bar.to_vec();
    let mut z = vec![0.0; ni];
    let mut history = Vec::new();
    let mut converged = false;
    let mut target = vec![0.0; ni];

    while history.len() < cfg.max_iters {
        let g: Vec<f64> = (0..ni).map(|q| gamma[q] - kappa_bar[q] + z[q]).collect();
        let mut rhs: Vec<f64> = apply(&cr.l_hat, &g).into_iter().map(|x| nu * x).collect();
        let bits = nu.to_bits();
        let idx = match factors.iter().position(|f| f.nu_bits == bits) {
            Some(i) => i,
            None => {
                if factors.len() >= 8 {
                    factors.remove(0);
                }
                factors.push(factor_for(nu)?);
                factors.len() - 1
            }
        };
        factors[idx].chol.solve_in_place(&mut rhs);
        phi = rhs;

        let lp = apply(&cr.l_hat, &phi);
        target = (0..ni).map(|q| lp[q] / m[q] + kappa_bar[q]).collect();
        let hat: Vec<f64> = target.iter().zip(&z).map(|(t, z)| t - z).collect();
        let old = std::mem::replace(&mut gamma, local_step_gamma(&hat, nu, &lambda, &masked));
        let primal: Vec<f64> = gamma.iter().zip(&target).map(|(g, t)| g - t).collect();
        for (z, r) in z.iter_mut().zip(&primal) {
            *z += r;
        }
        let diff: Vec<f64> = gamma.iter().zip(&old).map(|(a, b)| a - b).collect();
        let res = ReducedResiduals { primal: m_norm(&primal, m), dual: m_norm(&diff, m) };
        history.push(res);
        if res.primal < cfg.epsilon && res.dual < cfg.epsilon {
            converged = true;
            break;
        }
        match adapt_penalty(res.primal, res.dual, cfg.adapt_ratio) {
            PenaltyChange::Keep => {}
            ch => {
                let s = ch.factor(cfg.adapt_scale);
                nu *= s;
                z.iter_mut().for_each(|x| *x /= s);
            }
        }
    }
    if !converged {
        log::warn!("reduced ADMM stopped at the iteration cap ({})", cfg.max_iters);
    }
    let lp = apply(&cr.l_hat, &phi);
    let objective = phi.iter().zip(&lp).map(|(a, b)| a * b).sum::<f64>()
        + cfg.lambda_eff * gamma.iter().zip(m).map(|(g, w)| w * g.abs()).sum::<f64>();
    let resid: Vec<f64> = gamma.iter().zip(&target).map(|(g, t)| g - t).collect();
    Ok(ReducedSolution {
        iterations: history.len(),
        feasibility: m_norm(&resid, m),
        boundary_flux: lp.iter().sum(),
        phi,
        gamma,
        objective,
        history,
        converged,
    })
}

/// Builds the edge operators and curvature for `mesh` at degree `d`, then
/// solves.
pub fn solve_reduced_on_mesh(
    mesh: &TriMesh,
    d: u32,
    cfg: &ReducedConfig,
) -> Result<(CrOperators, Vec<f64>, ReducedSolution), SolverError> {
    let atlas = build_transport(mesh)?;
    let fem = assemble_linear_fem(mesh, &atlas);
    let cr = assemble_cr(mesh, &fem)?;
    let kappa_bar = make_kappa_bar(mesh, &atlas, d);
    let sol = solve_reduced(&cr, &kappa_bar, cfg)?;
    Ok((cr, kappa_bar, sol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgen;

    #[test]
    fn effective_lambda_value() {
        let l = effective_lambda(1.0, 1.0);
        assert!((l - 2.0 / (TAU * TAU)).abs() < 1e-15);
    }

    #[test]
    fn planar_gives_zero() {
        let mesh = meshgen::mesh(meshgen::disk(4, 1.0)).unwrap();
        let (_, _, sol) = solve_reduced_on_mesh(&mesh, 1, &ReducedConfig::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.gamma.iter().all(|g| g.abs() < 1e-10));
        assert!(sol.phi.iter().all(|p| p.abs() < 1e-10));
        assert!(sol.objective.abs() < 1e-10);
    }

    #[test]
    fn rejects_negative_lambda() {
        let cfg = ReducedConfig { lambda_eff: -1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}

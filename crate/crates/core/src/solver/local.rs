use rayon::prelude::*;

/// Positivity clamp on the vertical part, then shrinkage in the fiber metric
/// `|h|² + r⁻² v²`.
pub fn shrink_sample(s: [f64; 3], mu: f64, r: f64) -> [f64; 3] {
    let v = s[2].max(0.0);
    let norm = (s[0] * s[0] + s[1] * s[1] + v * v / (r * r)).sqrt();
    let t = 1.0 / mu;
    if norm <= t {
        return [0.0; 3];
    }
    let a = 1.0 - t / norm;
    [a * s[0], a * s[1], a * v]
}

pub fn local_step_sigma(samples: &mut [[f64; 3]], mu: f64, r: f64) {
    samples.par_iter_mut().for_each(|s| *s = shrink_sample(*s, mu, r));
}

/// Scalar shrinkage by `λ_e/ν`, with masked edges forced to zero.
pub fn local_step_gamma(gamma_hat: &[f64], nu: f64, lambda: &[f64], masked: &[bool]) -> Vec<f64> {
    gamma_hat
        .iter()
        .zip(lambda)
        .zip(masked)
        .map(|((&g, &l), &m)| {
            if m {
                return 0.0;
            }
            let t = l / nu;
            if g.abs() <= t {
                0.0
            } else {
                g - t * g.signum()
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PenaltyChange {
    Increase,
    Decrease,
    Keep,
}

impl PenaltyChange {
    /// Multiplier applied to the penalty; the scaled dual is divided by it.
    pub fn factor(self, scale: f64) -> f64 {
        match self {
            PenaltyChange::Increase => scale,
            PenaltyChange::Decrease => 1.0 / scale,
            PenaltyChange::Keep => 1.0,
        }
    }
}

pub fn adapt_penalty(primal: f64, dual: f64, ratio: f64) -> PenaltyChange {
    if primal > ratio * dual {
        PenaltyChange::Increase
    } else if dual > ratio * primal {
        PenaltyChange::Decrease
    } else {
        PenaltyChange::Keep
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_shrink_examples() {
        // |Σ̄|_g = 2 with r = 1
        let s = shrink_sample([0.0, 2.0, 0.0], 1.0, 1.0);
        assert_eq!(s, [0.0, 1.0, 0.0]);
        let s = shrink_sample([1.2, -1.6, 0.0], 1.0, 1.0);
        assert!((s[0] - 0.6).abs() < 1e-15 && (s[1] + 0.8).abs() < 1e-15);
        assert_eq!(shrink_sample([0.3, 0.4, 0.0], 2.0, 1.0), [0.0; 3]);
        assert_eq!(shrink_sample([0.0, 0.0, -3.0], 1.0, 1.0), [0.0; 3]);
        // vertical part measured with r⁻²
        let s = shrink_sample([0.0, 0.0, 1.0], 1.0, 0.25);
        assert!((s[2] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn gamma_shrink_examples() {
        let g = local_step_gamma(&[0.5, -2.0, 10.0], 1.0, &[1.0; 3], &[false, false, true]);
        assert_eq!(g, vec![0.0, -1.0, 0.0]);
    }

    #[test]
    fn penalty_rule() {
        assert_eq!(adapt_penalty(1.0, 0.05, 10.0), PenaltyChange::Increase);
        assert_eq!(adapt_penalty(0.05, 1.0, 10.0), PenaltyChange::Decrease);
        assert_eq!(adapt_penalty(1.0, 1.0, 10.0), PenaltyChange::Keep);
        assert_eq!(PenaltyChange::Increase.factor(2.0), 2.0);
    }
}

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::Provenance;
use crate::error::{Error, Result};
use crate::gstate::{check_two_lens, CoherenceMatrix};
use crate::linalg::Complex64;

/// Above this ε the one-photon photon-counting model is flagged.
pub const PHOTON_COUNTING_EPS_WARN: f64 = 0.1;
const SUM_TOL: f64 = 1e-10;

/// Finite outcome distribution with per-parameter derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    labels: Vec<String>,
    probs: Vec<f64>,
    params: Vec<String>,
    /// `dprobs[i][k] = ∂p_k/∂params[i]`.
    dprobs: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    warning: Option<String>,
    provenance: Provenance,
}

impl DiscreteDistribution {
    pub fn new(
        labels: Vec<String>,
        probs: Vec<f64>,
        params: Vec<String>,
        dprobs: Vec<Vec<f64>>,
        provenance: Provenance,
    ) -> Result<Self> {
        if labels.len() != probs.len() {
            return Err(Error::Validation("labels and probabilities differ in length".into()));
        }
        if params.len() != dprobs.len() {
            return Err(Error::Validation("one derivative vector per parameter required".into()));
        }
        if let Some((k, p)) = probs.iter().enumerate().find(|(_, p)| !(**p >= -SUM_TOL)) {
            return Err(Error::Numerical(format!("negative probability {p:.3e} for outcome {}", labels[k])));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::Validation(format!("probabilities sum to {total}, not 1")));
        }
        for (name, d) in params.iter().zip(&dprobs) {
            if d.len() != probs.len() {
                return Err(Error::Validation(format!("derivative for {name} has wrong length")));
            }
            let s: f64 = d.iter().sum();
            if s.abs() > SUM_TOL {
                return Err(Error::Validation(format!("derivative for {name} sums to {s:.3e}, not 0")));
            }
        }
        Ok(Self { labels, probs, params, dprobs, warning: None, provenance })
    }

    pub fn with_warning(mut self, warning: impl Into<String>) -> Self {
        self.warning = Some(warning.into());
        self
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn dprobs(&self) -> &[Vec<f64>] {
        &self.dprobs
    }

    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Photon counting behind a phase delay δ and a 50:50 beam splitter, to
/// leading order in ε: outcomes `+`, `-` (one click at either port) and `vac`.
/// Parameters are `|g|` and `theta`.
pub fn photon_counting_two_mode(eps: f64, g_abs: f64, theta: f64, delta: f64) -> Result<DiscreteDistribution> {
    check_two_lens(eps, g_abs)?;
    if eps > 1.0 {
        return Err(Error::Domain(format!("one-photon model needs ε ≤ 1, got {eps}")));
    }
    let (s, c) = (theta + delta).sin_cos();
    let h = eps / 2.0;
    let probs = vec![h * (1.0 + g_abs * c), h * (1.0 - g_abs * c), 1.0 - eps];
    let d_g = vec![h * c, -h * c, 0.0];
    let d_t = vec![-h * g_abs * s, h * g_abs * s, 0.0];
    let dist = DiscreteDistribution::new(
        vec!["+".into(), "-".into(), "vac".into()],
        probs,
        vec!["|g|".into(), "theta".into()],
        vec![d_g, d_t],
        Provenance::new(
            "photon_counting_two_mode",
            &[("eps", eps), ("g_abs", g_abs), ("theta", theta), ("delta", delta)],
        ),
    )?;
    Ok(if eps > PHOTON_COUNTING_EPS_WARN {
        dist.with_warning(format!("ε = {eps} > {PHOTON_COUNTING_EPS_WARN}: multi-photon events neglected"))
    } else {
        dist
    })
}

/// Probability that exactly one photon arrives, in detector mode `j`:
/// `A_jj / det(I + Γ)` with `A = (I + Γ)⁻¹ Γ`.
pub fn single_photon_projection_probability(gamma: &CoherenceMatrix, j: usize) -> Result<f64> {
    let m = gamma.modes();
    if j >= m {
        return Err(Error::Validation(format!("detector index {j} out of range for {m} modes")));
    }
    let ipg = DMatrix::<Complex64>::identity(m, m) + gamma.matrix();
    let lu = ipg.clone().lu();
    let det = lu.determinant().re;
    let a = lu
        .solve(gamma.matrix())
        .ok_or_else(|| Error::Singular("I + Γ is singular".into()))?;
    Ok(a[(j, j)].re / det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn photon_counting_examples() {
        let d = photon_counting_two_mode(0.2, 1.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(d.probs()[0], 0.2, epsilon = 1e-15);
        assert_relative_eq!(d.probs()[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(d.probs()[2], 0.8, epsilon = 1e-15);
        assert!(d.warning().is_some());

        let d = photon_counting_two_mode(0.04, 0.0, 0.3, 1.2).unwrap();
        assert_relative_eq!(d.probs()[0], 0.02, epsilon = 1e-15);
        assert_relative_eq!(d.probs()[1], 0.02, epsilon = 1e-15);
        assert!(d.warning().is_none());

        let d = photon_counting_two_mode(0.1, 0.5, FRAC_PI_4, -FRAC_PI_4).unwrap();
        assert_relative_eq!(d.probs()[0], 0.05 * 1.5, epsilon = 1e-15);
        assert_relative_eq!(d.probs()[1], 0.05 * 0.5, epsilon = 1e-15);
        assert!(photon_counting_two_mode(0.1, 1.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn photon_counting_derivatives_match_differences() {
        let (eps, g, th, de) = (0.05, 0.4, 0.8, 0.3);
        let d = photon_counting_two_mode(eps, g, th, de).unwrap();
        let h = 1e-5;
        for (i, (gp, tp, gm, tm)) in [(g + h, th, g - h, th), (g, th + h, g, th - h)].into_iter().enumerate() {
            let p = photon_counting_two_mode(eps, gp, tp, de).unwrap();
            let m = photon_counting_two_mode(eps, gm, tm, de).unwrap();
            for k in 0..3 {
                let fd = (p.probs()[k] - m.probs()[k]) / (2.0 * h);
                let an = d.dprobs()[i][k];
                assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-12), "param {i} outcome {k}");
            }
        }
    }

    #[test]
    fn single_photon_examples() {
        let eps = 0.3;
        let g = CoherenceMatrix::from_real(DMatrix::from_element(1, 1, eps)).unwrap();
        assert_relative_eq!(single_photon_projection_probability(&g, 0).unwrap(), eps / (1.0 + eps).powi(2), epsilon = 1e-15);
        let z = CoherenceMatrix::zeros(3);
        assert_eq!(single_photon_projection_probability(&z, 2).unwrap(), 0.0);
        assert!(single_photon_projection_probability(&z, 3).is_err());
    }

    #[test]
    fn single_photon_close_to_diagonal_for_weak_light() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let eps = 0.01;
        for _ in 0..20 {
            let m = 4;
            let a = DMatrix::<Complex64>::from_fn(m, m, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let mut g = &a * a.adjoint();
            let tr: f64 = g.diagonal().iter().map(|z| z.re).sum();
            g *= Complex64::new(eps / tr, 0.0);
            let gamma = CoherenceMatrix::new(g).unwrap();
            for j in 0..m {
                let p = single_photon_projection_probability(&gamma, j).unwrap();
                assert!((p - gamma.matrix()[(j, j)].re).abs() <= 3.0 * eps * eps);
            }
        }
    }

    #[test]
    fn distribution_rejects_bad_normalization() {
        let r = DiscreteDistribution::new(vec!["a".into()], vec![0.5], vec![], vec![], Provenance::default());
        assert!(r.is_err());
        let r = DiscreteDistribution::new(
            vec!["a".into(), "b".into()],
            vec![0.5, 0.5],
            vec!["p".into()],
            vec![vec![1.0, 0.0]],
            Provenance::default(),
        );
        assert!(r.is_err());
    }
}

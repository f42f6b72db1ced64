use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{fim_gaussian, FisherMatrix};
use crate::error::{Error, Result};
use crate::gstate::{apply_symplectic, check_two_lens, two_lens_derivatives, two_lens_state, SymplecticOp};
use crate::measure::{heterodyne_measurement, homodyne_measurement, Quadrature};

const PARAMS: [&str; 2] = ["|g|", "theta"];

fn names() -> Vec<String> {
    PARAMS.iter().map(|s| s.to_string()).collect()
}

fn diag(a: f64, b: f64, n: usize) -> Result<FisherMatrix> {
    FisherMatrix::new(names(), DMatrix::from_row_slice(2, 2, &[a, 0.0, 0.0, b]), n)
}

/// Photon counting behind phase delay δ and a beam splitter, as printed:
/// `Nε/(1 - |g|²cos²φ) [[cos²φ, -|g| sinφ cosφ], [-|g| sinφ cosφ, |g|² sin²φ]]`
/// with `φ = θ + δ`. Always rank ≤ 1.
pub fn photon_counting_fim(eps: f64, g_abs: f64, theta: f64, delta: f64, n: usize) -> Result<FisherMatrix> {
    check_two_lens(eps, g_abs)?;
    let (s, c) = (theta + delta).sin_cos();
    let den = 1.0 - g_abs * g_abs * c * c;
    if den <= 4.0 * f64::EPSILON {
        return Err(Error::Singular(format!(
            "photon-counting information diverges at |g|cos(θ+δ) = {:.3}",
            g_abs * c
        )));
    }
    let k = n as f64 * eps / den;
    let off = -k * g_abs * s * c;
    let m = DMatrix::from_row_slice(2, 2, &[k * c * c, off, off, k * g_abs * g_abs * s * s]);
    Ok(FisherMatrix::new(names(), m, n)?.with_note("rank-deficient; combine two phase delays δ for full rank"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HomodyneVariant {
    Xx,
    Pp,
    Xp,
    Px,
}

impl HomodyneVariant {
    pub fn selection(self) -> [Quadrature; 2] {
        use Quadrature::{P, X};
        match self {
            HomodyneVariant::Xx => [X, X],
            HomodyneVariant::Pp => [P, P],
            HomodyneVariant::Xp => [X, P],
            HomodyneVariant::Px => [P, X],
        }
    }

    pub fn all() -> [HomodyneVariant; 4] {
        [HomodyneVariant::Xx, HomodyneVariant::Pp, HomodyneVariant::Xp, HomodyneVariant::Px]
    }
}

/// Homodyne detection at both beam-splitter outputs, as printed.
pub fn homodyne_fim_closed_form(eps: f64, g_abs: f64, theta: f64, n: usize, variant: HomodyneVariant) -> Result<FisherMatrix> {
    check_two_lens(eps, g_abs)?;
    let nn = n as f64;
    let g2 = g_abs * g_abs;
    match variant {
        HomodyneVariant::Xx | HomodyneVariant::Pp => {
            let (s, c) = theta.sin_cos();
            let num = 2.0 + eps * (4.0 + eps * (2.0 + g2)) + eps * eps * g2 * (2.0 * theta).cos();
            let den = ((1.0 + eps).powi(2) - eps * eps * g2 * c * c).powi(2);
            let k = nn * eps * eps * num / den;
            let off = -k * (2.0 * theta).sin();
            let m = DMatrix::from_row_slice(2, 2, &[k * c * c, off, off, k * s * s]);
            FisherMatrix::new(names(), m, n)
        }
        HomodyneVariant::Xp | HomodyneVariant::Px => {
            let fgg = nn * eps * eps * ((1.0 + eps - eps * g_abs).powi(-2) + (1.0 + eps + eps * g_abs).powi(-2));
            let ftt = 2.0 * nn * eps * eps * g2 / (1.0 + eps * (2.0 + eps - eps * g2));
            diag(fgg, ftt, n)
        }
    }
}

/// Heterodyne detection at both beam-splitter outputs, as printed.
pub fn heterodyne_fim_closed_form(eps: f64, g_abs: f64, n: usize) -> Result<FisherMatrix> {
    check_two_lens(eps, g_abs)?;
    let nn = n as f64;
    let fgg = 2.0 * nn * eps * eps * ((2.0 + eps - eps * g_abs).powi(-2) + (2.0 + eps + eps * g_abs).powi(-2));
    let ftt = 4.0 * nn * eps * eps * g_abs * g_abs / (4.0 + eps * (4.0 + eps - eps * g_abs * g_abs));
    diag(fgg, ftt, n)
}

/// Fisher information of xx (or pp) homodyne after the beam splitter, in closed
/// form: `ε²(A² + ε²c²)/D² [[cos²θ, -|g| sinθ cosθ], [-|g| sinθ cosθ, |g|² sin²θ]]`
/// with `A = 1 + ε`, `c = |g| cosθ`, `D = A² - ε²c²`.
pub fn homodyne_xx_exact(eps: f64, g_abs: f64, theta: f64, n: usize) -> Result<FisherMatrix> {
    check_two_lens(eps, g_abs)?;
    let (s, c) = theta.sin_cos();
    let a = 1.0 + eps;
    let gc = g_abs * c;
    let d = a * a - eps * eps * gc * gc;
    let k = n as f64 * eps * eps * (a * a + eps * eps * gc * gc) / (d * d);
    let off = -k * g_abs * s * c;
    FisherMatrix::new(names(), DMatrix::from_row_slice(2, 2, &[k * c * c, off, off, k * g_abs * g_abs * s * s]), n)
}

/// The two-lens state after the beam splitter and the homodyne selection.
pub fn homodyne_fim_numeric(eps: f64, g_abs: f64, theta: f64, n: usize, variant: HomodyneVariant) -> Result<FisherMatrix> {
    let bs = SymplecticOp::beam_splitter(2, 0, 1);
    let st = apply_symplectic(&two_lens_state(eps, g_abs, theta)?, &bs)?;
    let meas = homodyne_measurement(&variant.selection())?;
    let (_, c) = meas.outcome_moments(st.mean(), st.covariance())?;
    let d: Vec<DMatrix<f64>> = two_lens_derivatives(eps, g_abs, theta)
        .iter()
        .map(|dv| meas.project_derivative(&(bs.matrix() * dv * bs.matrix().transpose())))
        .collect::<Result<_>>()?;
    fim_gaussian(&c, &d, &PARAMS, n)
}

/// `fim_gaussian` of heterodyne detection on both lens modes.
pub fn heterodyne_fim_numeric(eps: f64, g_abs: f64, theta: f64, n: usize) -> Result<FisherMatrix> {
    let st = two_lens_state(eps, g_abs, theta)?;
    let meas = heterodyne_measurement(2)?;
    let (_, c) = meas.outcome_moments(st.mean(), st.covariance())?;
    let d: Vec<DMatrix<f64>> = two_lens_derivatives(eps, g_abs, theta)
        .iter()
        .map(|dv| meas.project_derivative(dv))
        .collect::<Result<_>>()?;
    fim_gaussian(&c, &d, &PARAMS, n)
}

/// Printed xx homodyne form against the Gaussian FIM of the marginal outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XxDiscrepancy {
    pub printed: FisherMatrix,
    pub numeric: FisherMatrix,
    pub max_abs_diff: f64,
    pub max_rel_diff: f64,
    pub agrees: bool,
    pub printed_min_eigenvalue: f64,
}

pub fn homodyne_xx_discrepancy(eps: f64, g_abs: f64, theta: f64, n: usize) -> Result<XxDiscrepancy> {
    let printed = homodyne_fim_closed_form(eps, g_abs, theta, n, HomodyneVariant::Xx)?;
    let numeric = homodyne_fim_numeric(eps, g_abs, theta, n, HomodyneVariant::Xx)?;
    let diff = printed.matrix() - numeric.matrix();
    let max_abs_diff = diff.abs().max();
    let scale = numeric.matrix().abs().max();
    let max_rel_diff = if scale > 0.0 { max_abs_diff / scale } else { max_abs_diff };
    Ok(XxDiscrepancy {
        printed_min_eigenvalue: printed.min_eigenvalue(),
        agrees: max_rel_diff <= 1e-8,
        printed,
        numeric,
        max_abs_diff,
        max_rel_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::fim_discrete;
    use crate::measure::photon_counting_two_mode;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn printed_values() {
        let f = homodyne_fim_closed_form(0.1, 0.5, 0.3, 1, HomodyneVariant::Xp).unwrap();
        assert_relative_eq!(f.get(0, 0), 0.01 * (1.0 / 1.05f64.powi(2) + 1.0 / 1.15f64.powi(2)), max_relative = 1e-14);
        assert_relative_eq!(f.get(0, 0), 0.016632, max_relative = 1e-4);
        let f = heterodyne_fim_closed_form(0.1, 0.5, 1).unwrap();
        assert_relative_eq!(f.get(0, 0), 0.0090857, max_relative = 1e-4);
        assert_eq!(heterodyne_fim_closed_form(0.1, 0.0, 1).unwrap().get(1, 1), 0.0);
        assert_eq!(homodyne_fim_closed_form(0.1, 0.0, 0.4, 1, HomodyneVariant::Px).unwrap().get(1, 1), 0.0);
    }

    #[test]
    fn photon_counting_examples() {
        let (eps, g, n) = (0.03, 0.6, 5);
        let f = photon_counting_fim(eps, g, 0.2, FRAC_PI_2 - 0.2, n).unwrap();
        assert_relative_eq!(f.get(1, 1), n as f64 * eps * g * g, max_relative = 1e-12);
        assert!(f.get(0, 0).abs() < 1e-18);
        let f = photon_counting_fim(eps, 0.0, 0.4, 0.1, n).unwrap();
        assert_relative_eq!(f.get(0, 0), n as f64 * eps * 0.5f64.cos().powi(2), max_relative = 1e-14);
        assert_eq!(f.rank(), 1);
        assert!(photon_counting_fim(eps, 1.0, 0.0, 0.0, n).is_err());
    }

    #[test]
    fn photon_counting_agrees_with_discrete() {
        for &(g, th, de) in &[(0.3, 0.1, 0.2), (0.9, 1.0, -0.4), (0.5, 2.0, 0.7), (0.0, 0.5, 0.5)] {
            let a = photon_counting_fim(0.02, g, th, de, 3).unwrap();
            let b = fim_discrete(&photon_counting_two_mode(0.02, g, th, de).unwrap(), 3).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert_relative_eq!(a.get(i, j), b.get(i, j), max_relative = 1e-10, epsilon = 1e-300);
                }
            }
        }
    }

    #[test]
    fn numeric_is_half_of_printed() {
        for &(eps, g, th) in &[(0.1, 0.5, 0.3), (0.02, 0.9, 1.1), (0.2, 0.3, -0.6)] {
            let het = {
                let bs = SymplecticOp::beam_splitter(2, 0, 1);
                let st = apply_symplectic(&two_lens_state(eps, g, th).unwrap(), &bs).unwrap();
                let c = st.covariance() + DMatrix::identity(4, 4) * 0.5;
                let d: Vec<DMatrix<f64>> = two_lens_derivatives(eps, g, th)
                    .iter()
                    .map(|dv| bs.matrix() * dv * bs.matrix().transpose())
                    .collect();
                fim_gaussian(&c, &d, &PARAMS, 1).unwrap()
            };
            let direct = heterodyne_fim_numeric(eps, g, th, 1).unwrap();
            assert!((direct.matrix() - het.matrix()).abs().max() < 1e-14);
            let printed = heterodyne_fim_closed_form(eps, g, 1).unwrap();
            assert_relative_eq!(printed.get(0, 0) / het.get(0, 0), 2.0, max_relative = 1e-12);
            assert_relative_eq!(printed.get(1, 1) / het.get(1, 1), 2.0, max_relative = 1e-12);
            for v in [HomodyneVariant::Xp, HomodyneVariant::Px] {
                let num = homodyne_fim_numeric(eps, g, th, 1, v).unwrap();
                let pr = homodyne_fim_closed_form(eps, g, th, 1, v).unwrap();
                assert_relative_eq!(pr.get(0, 0) / num.get(0, 0), 2.0, max_relative = 1e-12);
                assert_relative_eq!(pr.get(1, 1) / num.get(1, 1), 2.0, max_relative = 1e-12);
                assert!(num.get(0, 1).abs() < 1e-12 * num.get(0, 0));
            }
        }
    }

    #[test]
    fn xx_exact_form_matches_numeric() {
        for &(eps, g, th) in &[(0.1, 0.5, 0.3), (0.02, 0.9, 1.1), (0.2, 0.3, -0.6)] {
            let ex = homodyne_xx_exact(eps, g, th, 2).unwrap();
            for v in [HomodyneVariant::Xx, HomodyneVariant::Pp] {
                let num = homodyne_fim_numeric(eps, g, th, 2, v).unwrap();
                assert!((ex.matrix() - num.matrix()).abs().max() < 1e-12 * num.matrix().abs().max());
            }
            let rep = homodyne_xx_discrepancy(eps, g, th, 2).unwrap();
            assert!(!rep.agrees);
            assert!(rep.printed_min_eigenvalue < 0.0);
        }
    }
}

//! Gaussian and non-Gaussian measurements and their outcome distributions.

mod discrete;
mod spade;

pub use discrete::{
    photon_counting_two_mode, single_photon_projection_probability, DiscreteDistribution,
    PHOTON_COUNTING_EPS_WARN,
};
pub use spade::{spade_basis, spade_outcome_distribution, spade_scene_distribution, SpadeBasis, GS_PIVOT_TOL};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_check, Error, Result};
use crate::gstate::{random_symplectic, symplectic_form, GaussianState, SymplecticOp, HERMITIAN_TOL, PSD_TOL};
use crate::linalg::{asymmetry, herm_eigenvalues, principal_submatrix, subvector, sym_min_eigenvalue, Complex64};

/// Largest squeezing log-gain used by the random measurement family.
pub const RANDOM_MAX_LOG_GAIN: f64 = 2.0;

/// Which operation produced a distribution, and at what parameters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub operation: String,
    pub parameters: Vec<(String, f64)>,
}

impl Provenance {
    pub fn new(operation: &str, parameters: &[(&str, f64)]) -> Self {
        Self {
            operation: operation.into(),
            parameters: parameters.iter().map(|(k, v)| ((*k).into(), *v)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrature {
    X,
    P,
}

/// Gaussian POVM with covariance `V_Π`, optionally preceded by a symplectic
/// transformation of the measured modes.
///
/// Only the quadratures in `measured` are recorded; the rest are traced out.
/// For homodyne detection this is the exact infinite-variance limit of the
/// conjugate quadratures, and entries of `V_Π` outside the measured block are
/// ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasurement {
    v_pi: DMatrix<f64>,
    measured: Vec<usize>,
    pre: Option<DMatrix<f64>>,
}

impl GaussianMeasurement {
    pub fn new(v_pi: DMatrix<f64>, measured: Vec<usize>) -> Result<Self> {
        if !v_pi.is_square() || !v_pi.nrows().is_multiple_of(2) {
            return Err(Error::Validation("POVM covariance must be square with even size".into()));
        }
        let n = v_pi.nrows();
        if measured.is_empty() {
            return Err(Error::Validation("measurement records no quadrature".into()));
        }
        let mut seen = vec![false; n];
        for &i in &measured {
            if i >= n || seen[i] {
                return Err(Error::Validation(format!("measured index {i} out of range or repeated")));
            }
            seen[i] = true;
        }
        let block = principal_submatrix(&v_pi, &measured);
        let asym = asymmetry(&block);
        if asym > HERMITIAN_TOL {
            return Err(Error::Validation(format!("POVM covariance not symmetric (residual {asym:.3e})")));
        }
        let min_ev = sym_min_eigenvalue(&block);
        if min_ev < -PSD_TOL {
            return Err(Error::Validation(format!(
                "POVM covariance not positive semidefinite on measured block (min eigenvalue {min_ev:.3e})"
            )));
        }
        if measured.len() == n {
            let omega = symplectic_form(n / 2);
            let form = DMatrix::<Complex64>::from_fn(n, n, |i, j| Complex64::new(v_pi[(i, j)], 0.5 * omega[(i, j)]));
            let min_ev = herm_eigenvalues(&form)[0];
            if min_ev < -PSD_TOL {
                return Err(Error::Validation(format!(
                    "POVM covariance violates V_Π + iΩ/2 ≥ 0 (min eigenvalue {min_ev:.3e})"
                )));
            }
        }
        Ok(Self { v_pi, measured, pre: None })
    }

    /// Applies `op` to the state before this measurement.
    pub fn after(mut self, op: &SymplecticOp) -> Result<Self> {
        dim_check("measurement preprocessing", self.v_pi.nrows(), op.matrix().nrows())?;
        let s = op.matrix().clone();
        self.pre = Some(match self.pre.take() {
            Some(p) => p * s,
            None => s,
        });
        Ok(self)
    }

    pub fn modes(&self) -> usize {
        self.v_pi.nrows() / 2
    }

    pub fn v_pi(&self) -> &DMatrix<f64> {
        &self.v_pi
    }

    pub fn measured(&self) -> &[usize] {
        &self.measured
    }

    pub fn preprocessing(&self) -> Option<&DMatrix<f64>> {
        self.pre.as_ref()
    }

    /// Restricted outcome-covariance contribution of a state-covariance
    /// derivative `dV`.
    pub fn project_derivative(&self, dv: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        dim_check("covariance derivative", self.v_pi.nrows(), dv.nrows())?;
        let t = match &self.pre {
            Some(s) => s * dv * s.transpose(),
            None => dv.clone(),
        };
        Ok(principal_submatrix(&t, &self.measured))
    }

    /// Mean and covariance of the outcome for a state with moments `(mu, v)`.
    pub fn outcome_moments(&self, mu: &DVector<f64>, v: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        dim_check("measurement vs state", self.v_pi.nrows(), v.nrows())?;
        let (mu, v) = match &self.pre {
            Some(s) => (s * mu, s * v * s.transpose()),
            None => (mu.clone(), v.clone()),
        };
        let cov = principal_submatrix(&(v + &self.v_pi), &self.measured);
        Ok((subvector(&mu, &self.measured), crate::linalg::symmetrize(&cov)))
    }
}

/// Outcome distribution `N(mean, cov)` over the measured quadratures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeGaussian {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub measured: Vec<usize>,
    pub provenance: Provenance,
}

impl OutcomeGaussian {
    pub fn mean_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.mean)
    }

    pub fn cov_matrix(&self) -> DMatrix<f64> {
        let n = self.cov.len();
        DMatrix::from_fn(n, n, |i, j| self.cov[i][j])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

pub fn gaussian_outcome_distribution(state: &GaussianState, meas: &GaussianMeasurement) -> Result<OutcomeGaussian> {
    let (mean, cov) = meas.outcome_moments(state.mean(), state.covariance())?;
    let min_ev = sym_min_eigenvalue(&cov);
    if min_ev < -PSD_TOL {
        return Err(Error::Validation(format!(
            "outcome covariance not positive semidefinite (min eigenvalue {min_ev:.3e}); invalid V_Π"
        )));
    }
    Ok(OutcomeGaussian {
        mean: mean.iter().copied().collect(),
        cov: (0..cov.nrows()).map(|i| cov.row(i).iter().copied().collect()).collect(),
        measured: meas.measured.clone(),
        provenance: Provenance::new("gaussian_outcome_distribution", &[("modes", state.modes() as f64)]),
    })
}

/// Homodyne detection of one quadrature per mode.
pub fn homodyne_measurement(selection: &[Quadrature]) -> Result<GaussianMeasurement> {
    if selection.is_empty() {
        return Err(Error::Validation("homodyne selection is empty".into()));
    }
    let m = selection.len();
    let measured = selection
        .iter()
        .enumerate()
        .map(|(k, q)| match q {
            Quadrature::X => k,
            Quadrature::P => m + k,
        })
        .collect();
    GaussianMeasurement::new(DMatrix::zeros(2 * m, 2 * m), measured)
}

/// Heterodyne detection on `m` modes, `V_Π = I/2`.
pub fn heterodyne_measurement(m: usize) -> Result<GaussianMeasurement> {
    if m == 0 {
        return Err(Error::Validation("heterodyne needs at least one mode".into()));
    }
    GaussianMeasurement::new(DMatrix::identity(2 * m, 2 * m) * 0.5, (0..2 * m).collect())
}

/// Pure Gaussian POVM `V_Π = S Sᵀ/2`.
pub fn gaussian_measurement_from_symplectic(op: &SymplecticOp) -> Result<GaussianMeasurement> {
    let s = op.matrix();
    let n = s.nrows();
    GaussianMeasurement::new(crate::linalg::symmetrize(&(s * s.transpose() * 0.5)), (0..n).collect())
}

/// Draws `V_Π = S Sᵀ/2` with `S` a random symplectic (passive, squeezing with
/// log-gain in `[-2, 2]`, passive).
pub fn random_gaussian_measurement<R: rand::Rng + ?Sized>(m: usize, rng: &mut R) -> GaussianMeasurement {
    let op = random_symplectic(m, RANDOM_MAX_LOG_GAIN, rng);
    gaussian_measurement_from_symplectic(&op).expect("random symplectic yields a valid POVM")
}

/// Random homodyne of one quadrature per mode after a random symplectic.
pub fn random_rotated_homodyne<R: rand::Rng + ?Sized>(m: usize, rng: &mut R) -> GaussianMeasurement {
    let sel: Vec<Quadrature> = (0..m).map(|_| if rng.random_bool(0.5) { Quadrature::X } else { Quadrature::P }).collect();
    let op = random_symplectic(m, RANDOM_MAX_LOG_GAIN, rng);
    homodyne_measurement(&sel)
        .and_then(|h| h.after(&op))
        .expect("dimensions agree by construction")
}

pub fn random_valid_gaussian_measurement(m: usize, seed: u64) -> GaussianMeasurement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_gaussian_measurement(m, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gstate::{apply_symplectic, two_lens_state};
    use crate::linalg::sym_eigenvalues;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn vacuum_heterodyne_gives_identity() {
        let out = gaussian_outcome_distribution(&GaussianState::vacuum(1), &heterodyne_measurement(1).unwrap()).unwrap();
        assert!((out.cov_matrix() - DMatrix::identity(2, 2)).abs().max() < 1e-15);
    }

    #[test]
    fn homodyne_xx_restricts_state() {
        let (eps, g, th) = (0.2, 0.6, 0.4);
        let st = two_lens_state(eps, g, th).unwrap();
        let out = gaussian_outcome_distribution(&st, &homodyne_measurement(&[Quadrature::X, Quadrature::X]).unwrap()).unwrap();
        let c = out.cov_matrix();
        assert_relative_eq!(c[(0, 0)], (1.0 + eps) / 2.0, epsilon = 1e-15);
        assert_relative_eq!(c[(0, 1)], eps * g * th.cos() / 2.0, epsilon = 1e-15);
        assert_eq!(out.measured, vec![0, 1]);
    }

    #[test]
    fn heterodyne_adds_vacuum() {
        let st = two_lens_state(0.3, 0.2, 1.0).unwrap();
        let out = gaussian_outcome_distribution(&st, &heterodyne_measurement(2).unwrap()).unwrap();
        let expect = st.covariance() + DMatrix::identity(4, 4) * 0.5;
        assert!((out.cov_matrix() - expect).abs().max() < 1e-15);
        assert_eq!(heterodyne_measurement(2).unwrap().v_pi(), &(DMatrix::identity(4, 4) * 0.5));
    }

    #[test]
    fn homodyne_selection_indices() {
        assert_eq!(homodyne_measurement(&[Quadrature::X, Quadrature::P]).unwrap().measured(), &[0, 3]);
        assert!(homodyne_measurement(&[]).is_err());
    }

    #[test]
    fn pp_equals_xx_after_quarter_turns() {
        let st = two_lens_state(0.2, 0.5, 0.7).unwrap();
        let rot = SymplecticOp::phase_shift(2, 0, FRAC_PI_2).then(&SymplecticOp::phase_shift(2, 1, FRAC_PI_2));
        let pp = gaussian_outcome_distribution(&st, &homodyne_measurement(&[Quadrature::P, Quadrature::P]).unwrap()).unwrap();
        let xx = gaussian_outcome_distribution(
            &apply_symplectic(&st, &rot).unwrap(),
            &homodyne_measurement(&[Quadrature::X, Quadrature::X]).unwrap(),
        )
        .unwrap();
        // a ↦ i a sends x ↦ -p, so the covariances agree
        assert!((pp.cov_matrix() - xx.cov_matrix()).abs().max() < 1e-15);
    }

    #[test]
    fn beam_splitter_keeps_heterodyne() {
        let s = SymplecticOp::beam_splitter(2, 0, 1);
        let v = s.matrix() * heterodyne_measurement(2).unwrap().v_pi() * s.matrix().transpose();
        assert!((v - DMatrix::identity(4, 4) * 0.5).abs().max() < 1e-15);
    }

    #[test]
    fn squeezed_povm_eigenvalues() {
        let m = gaussian_measurement_from_symplectic(&SymplecticOp::squeezer(1, 0, 1.0)).unwrap();
        let ev = sym_eigenvalues(m.v_pi());
        assert_relative_eq!(ev[0], (-2.0f64).exp() / 2.0, epsilon = 1e-14);
        assert_relative_eq!(ev[1], 2.0f64.exp() / 2.0, epsilon = 1e-13);
        let id = gaussian_measurement_from_symplectic(&SymplecticOp::identity(2)).unwrap();
        assert_eq!(id, heterodyne_measurement(2).unwrap());
    }

    #[test]
    fn seeded_measurement_is_deterministic() {
        assert_eq!(random_valid_gaussian_measurement(3, 42), random_valid_gaussian_measurement(3, 42));
        assert_ne!(random_valid_gaussian_measurement(3, 42), random_valid_gaussian_measurement(3, 43));
    }

    #[test]
    fn rejects_unphysical_povm() {
        let err = GaussianMeasurement::new(DMatrix::identity(2, 2) * 0.1, vec![0, 1]).unwrap_err();
        assert!(err.to_string().contains("iΩ/2"));
        assert!(GaussianMeasurement::new(DMatrix::identity(2, 2) * -1.0, vec![0]).is_err());
    }

    #[test]
    fn marginal_independent_of_conjugate_variance() {
        let st = two_lens_state(0.1, 0.5, 0.3).unwrap();
        let base = gaussian_outcome_distribution(&st, &homodyne_measurement(&[Quadrature::X, Quadrature::P]).unwrap())
            .unwrap()
            .cov_matrix();
        for kappa in [0.0, 1.0, 1e6] {
            let v = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, kappa, kappa, 0.0]));
            let m = GaussianMeasurement::new(v, vec![0, 3]).unwrap();
            let c = gaussian_outcome_distribution(&st, &m).unwrap().cov_matrix();
            assert!((c - &base).abs().max() < 1e-15);
        }
    }
}

//! Fisher information for Gaussian and discrete outcome distributions,
//! printed closed forms, and Gaussian-measurement bounds.

mod bounds;
mod closed_form;

pub use bounds::{
    multi_lens_bounds, multi_lens_param_names, single_lens_gaussian_bound, single_lens_gaussian_bound_low_rank, theorem1_bounds, BoundReport,
    BoundRow, BoundSet, ElementBound, MatrixBoundRow,
};
pub use closed_form::{
    heterodyne_fim_closed_form, heterodyne_fim_numeric, homodyne_fim_closed_form, homodyne_fim_numeric, homodyne_xx_discrepancy, homodyne_xx_exact,
    photon_counting_fim, HomodyneVariant, XxDiscrepancy,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, decoupled_blocks, principal_submatrix, sym_eigenvalues, sym_min_eigenvalue};
use crate::measure::DiscreteDistribution;

/// Smallest covariance eigenvalue accepted by [`fim_gaussian`].
pub const MIN_COV_EIGENVALUE: f64 = 1e-12;
/// Rank threshold relative to the largest eigenvalue.
pub const RANK_TOL: f64 = 1e-10;

/// Fisher information over named parameters, already multiplied by the copy
/// count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix {
    params: Vec<String>,
    #[serde(with = "matrix_rows")]
    f: DMatrix<f64>,
    n_copies: usize,
    rank: usize,
    /// Parameters whose information diverges (zero-probability outcomes with
    /// nonzero derivative, or a singular closed-form prefactor).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    divergent: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(serde::de::Error::custom("Fisher matrix must be square"));
        }
        Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }
}

fn numeric_rank(f: &DMatrix<f64>) -> usize {
    if f.nrows() == 0 {
        return 0;
    }
    let ev = sym_eigenvalues(f);
    let top = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if top == 0.0 {
        return 0;
    }
    ev.iter().filter(|v| v.abs() > RANK_TOL * top).count()
}

impl FisherMatrix {
    pub fn new(params: Vec<String>, f: DMatrix<f64>, n_copies: usize) -> Result<Self> {
        if !f.is_square() || f.nrows() != params.len() {
            return Err(Error::Dimension { context: "Fisher matrix", expected: params.len(), got: f.nrows() });
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("Fisher matrix has non-finite entries".into()));
        }
        let scale = f.abs().max().max(f64::MIN_POSITIVE);
        let asym = asymmetry(&f);
        if asym > 1e-10 * scale.max(1.0) {
            return Err(Error::Numerical(format!("Fisher matrix not symmetric (residual {asym:.3e})")));
        }
        let rank = numeric_rank(&f);
        Ok(Self { params, f, n_copies, rank, divergent: Vec::new(), note: None })
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub(crate) fn with_divergent(mut self, divergent: Vec<String>) -> Self {
        self.divergent = divergent;
        self
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn n_copies(&self) -> usize {
        self.n_copies
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.params.len()
    }

    pub fn divergent(&self) -> &[String] {
        &self.divergent
    }

    pub fn note(&self) -> Option<&str> {
        self.note.as_deref()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.f[(i, j)]
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p == name)
    }

    pub fn element(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.f[(self.index(a)?, self.index(b)?)])
    }

    pub fn min_eigenvalue(&self) -> f64 {
        sym_min_eigenvalue(&self.f)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        sym_eigenvalues(&self.f).last().copied().unwrap_or(0.0)
    }

    /// Ratio of extreme eigenvalues; infinite when rank deficient.
    pub fn condition_number(&self) -> f64 {
        let ev = sym_eigenvalues(&self.f);
        match (ev.first(), ev.last()) {
            (Some(&lo), Some(&hi)) if lo > 0.0 => hi / lo,
            _ => f64::INFINITY,
        }
    }

    /// Whether the matrix is PSD up to `-1e-8` relative noise.
    pub fn is_psd(&self) -> bool {
        let scale = self.f.abs().max().max(f64::MIN_POSITIVE);
        self.min_eigenvalue() >= -1e-8 * scale
    }

    /// Information for `n` copies instead of the current count.
    pub fn with_copies(&self, n: usize) -> Self {
        let mut out = self.clone();
        out.f = &self.f * (n as f64 / self.n_copies.max(1) as f64);
        out.n_copies = n;
        out
    }

    pub fn select(&self, names: &[&str]) -> Result<Self> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.index(n).ok_or_else(|| Error::Validation(format!("unknown parameter {n}"))))
            .collect::<Result<_>>()?;
        let f = principal_submatrix(&self.f, &idx);
        let mut out = Self::new(names.iter().map(|s| s.to_string()).collect(), f, self.n_copies)?;
        out.divergent = self.divergent.iter().filter(|d| names.contains(&d.as_str())).cloned().collect();
        out.note = self.note.clone();
        Ok(out)
    }

    /// Cramér–Rao covariance bound `F⁻¹`.
    pub fn crb(&self) -> Result<DMatrix<f64>> {
        if !self.is_full_rank() {
            return Err(Error::Singular(format!(
                "Fisher matrix has rank {} < {}",
                self.rank,
                self.params.len()
            )));
        }
        self.f
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("Fisher matrix not invertible".into()))
    }
}

/// `F_ij = N · ½ tr(C⁻¹ ∂_iC C⁻¹ ∂_jC)` for a zero-mean Gaussian with
/// covariance `C`. Blocks of `C` that decouple from each other and from every
/// derivative are handled independently.
pub fn fim_gaussian(cov: &DMatrix<f64>, derivs: &[DMatrix<f64>], params: &[&str], n_copies: usize) -> Result<FisherMatrix> {
    let n = cov.nrows();
    if !cov.is_square() {
        return Err(Error::Validation("covariance must be square".into()));
    }
    if derivs.len() != params.len() {
        return Err(Error::Dimension { context: "fim_gaussian derivative count", expected: params.len(), got: derivs.len() });
    }
    for d in derivs {
        if d.shape() != (n, n) {
            return Err(Error::Dimension { context: "fim_gaussian derivative shape", expected: n, got: d.nrows() });
        }
    }
    let p = derivs.len();
    let mut mats: Vec<&DMatrix<f64>> = vec![cov];
    mats.extend(derivs.iter());
    let blocks = decoupled_blocks(n, &mats);
    let mut f = DMatrix::<f64>::zeros(p, p);
    for block in &blocks {
        let db: Vec<DMatrix<f64>> = derivs.iter().map(|d| principal_submatrix(d, block)).collect();
        let active: Vec<usize> = (0..p).filter(|&i| db[i].iter().any(|v| *v != 0.0)).collect();
        if active.is_empty() {
            continue;
        }
        let cb = principal_submatrix(cov, block);
        let chol = cb
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Singular("covariance is not positive definite".into()))?;
        let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |a, v| a.min(v * v));
        let min_ev = if block.len() <= 64 { sym_min_eigenvalue(&cb) } else { min_pivot };
        if !(min_ev > MIN_COV_EIGENVALUE) {
            return Err(Error::Singular(format!("covariance eigenvalue {min_ev:.3e} below {MIN_COV_EIGENVALUE:e}")));
        }
        let x: Vec<DMatrix<f64>> = active.iter().map(|&i| chol.solve(&db[i])).collect();
        for (a, &i) in active.iter().enumerate() {
            for (b, &j) in active.iter().enumerate().skip(a) {
                // tr(X_i X_j) = Σ_kl X_i[k,l] X_j[l,k]
                let v = x[a].component_mul(&x[b].transpose()).sum();
                f[(i, j)] += 0.5 * v;
                if i != j {
                    f[(j, i)] += 0.5 * v;
                }
            }
        }
    }
    FisherMatrix::new(params.iter().map(|s| s.to_string()).collect(), f * n_copies as f64, n_copies)
}

/// Default central-difference step for a parameter value.
pub fn default_step(x: f64) -> f64 {
    1e-5 * x.abs().max(1.0)
}

/// Central differences `(f(x + h e_i) - f(x - h e_i))/2h` for each parameter.
/// `step` overrides the default `1e-5·max(1, |x_i|)`.
pub fn numeric_jacobian<F>(f: F, at: &[f64], step: Option<f64>) -> Result<Vec<DMatrix<f64>>>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    if let Some(h) = step {
        if !(h > 0.0) {
            return Err(Error::Validation(format!("step must be positive, got {h}")));
        }
    }
    let mut out = Vec::with_capacity(at.len());
    for i in 0..at.len() {
        let h = step.unwrap_or_else(|| default_step(at[i]));
        let mut xp = at.to_vec();
        let mut xm = at.to_vec();
        xp[i] += h;
        xm[i] -= h;
        let d = (f(&xp)? - f(&xm)?) / (2.0 * h);
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite derivative for parameter {i}")));
        }
        out.push(d);
    }
    Ok(out)
}

/// [`fim_gaussian`] with derivatives from [`numeric_jacobian`].
pub fn fim_gaussian_numeric<F>(cov: F, at: &[f64], params: &[&str], n_copies: usize) -> Result<FisherMatrix>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    let c = cov(at)?;
    let d = numeric_jacobian(&cov, at, None)?;
    fim_gaussian(&c, &d, params, n_copies)
}

/// `F_ij = N Σ_k ∂_i p_k ∂_j p_k / p_k`.
pub fn fim_discrete(dist: &DiscreteDistribution, n_copies: usize) -> Result<FisherMatrix> {
    let p = dist.params().len();
    let mut f = DMatrix::<f64>::zeros(p, p);
    let mut divergent = vec![false; p];
    let d = dist.dprobs();
    for (k, &pk) in dist.probs().iter().enumerate() {
        if pk <= 0.0 {
            for i in 0..p {
                if d[i][k] != 0.0 {
                    divergent[i] = true;
                }
            }
            continue;
        }
        for i in 0..p {
            if d[i][k] == 0.0 {
                continue;
            }
            for j in i..p {
                let v = d[i][k] * d[j][k] / pk;
                f[(i, j)] += v;
                if i != j {
                    f[(j, i)] += v;
                }
            }
        }
    }
    let names: Vec<String> = dist.params().to_vec();
    let div: Vec<String> = names.iter().zip(&divergent).filter(|(_, d)| **d).map(|(n, _)| n.clone()).collect();
    Ok(FisherMatrix::new(names, f * n_copies as f64, n_copies)?.with_divergent(div))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gstate::{apply_symplectic, two_lens_derivatives, two_lens_state, SymplecticOp};
    use crate::measure::{heterodyne_measurement, photon_counting_two_mode, Provenance};
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn identity_covariance() {
        for d in 1..5 {
            let f = fim_gaussian(&DMatrix::identity(d, d), &[DMatrix::identity(d, d)], &["a"], 1).unwrap();
            assert_relative_eq!(f.get(0, 0), d as f64 / 2.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn scalar_thermal_example() {
        // C = (1+ε)I₂/2, ∂C = I₂/2: F = (1/(1+ε))²
        for eps in [0.0, 0.3] {
            let c = DMatrix::identity(2, 2) * ((1.0 + eps) / 2.0);
            let f = fim_gaussian(&c, &[DMatrix::identity(2, 2) * 0.5], &["eps"], 1).unwrap();
            assert_relative_eq!(f.get(0, 0), (1.0 / (1.0 + eps)).powi(2), epsilon = 1e-15);
        }
    }

    #[test]
    fn block_split_matches_dense() {
        let st = two_lens_state(0.2, 0.4, 0.6).unwrap();
        let bs = SymplecticOp::beam_splitter(2, 0, 1);
        let out = apply_symplectic(&st, &bs).unwrap();
        let c = out.covariance() + heterodyne_measurement(2).unwrap().v_pi();
        let d: Vec<DMatrix<f64>> = two_lens_derivatives(0.2, 0.4, 0.6)
            .iter()
            .map(|m| bs.matrix() * m * bs.matrix().transpose())
            .collect();
        let f = fim_gaussian(&c, &d, &["|g|", "theta"], 3).unwrap();
        let cinv = c.clone().try_inverse().unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let dense = 1.5 * (&cinv * &d[i] * &cinv * &d[j]).trace();
                assert_relative_eq!(f.get(i, j), dense, max_relative = 1e-12, epsilon = 1e-15);
            }
        }
        assert_eq!(f.n_copies(), 3);
    }

    #[test]
    fn singular_covariance_rejected() {
        let c = DMatrix::from_diagonal_element(2, 2, 0.0);
        assert!(matches!(fim_gaussian(&c, &[DMatrix::identity(2, 2)], &["a"], 1), Err(Error::Singular(_))));
        assert!(fim_gaussian(&DMatrix::identity(2, 2), &[DMatrix::identity(3, 3)], &["a"], 1).is_err());
    }

    #[test]
    fn jacobian_examples() {
        let lin = |x: &[f64]| Ok(DMatrix::from_element(1, 1, 3.0 * x[0] - 2.0 * x[1]));
        let d = numeric_jacobian(lin, &[0.4, 1.3], Some(1e-3)).unwrap();
        assert_relative_eq!(d[0][(0, 0)], 3.0, epsilon = 1e-12);
        assert_relative_eq!(d[1][(0, 0)], -2.0, epsilon = 1e-12);
        let quad = |x: &[f64]| Ok(DMatrix::from_element(1, 1, x[0] * x[0]));
        let d = numeric_jacobian(quad, &[0.7], Some(1e-5)).unwrap();
        assert_relative_eq!(d[0][(0, 0)], 1.4, max_relative = 1e-9);
        assert!(numeric_jacobian(quad, &[0.7], Some(0.0)).is_err());
        let bad = |x: &[f64]| Ok(DMatrix::from_element(1, 1, if x[0] > 0.0 { f64::NAN } else { 0.0 }));
        assert!(numeric_jacobian(bad, &[0.0], None).is_err());
    }

    #[test]
    fn jacobian_matches_analytic_two_lens() {
        let (eps, g) = (0.2, 0.5);
        let cov = |x: &[f64]| Ok(two_lens_state(eps, x[0], x[1])?.covariance().clone());
        let d = numeric_jacobian(cov, &[g, 0.0], None).unwrap();
        let an = two_lens_derivatives(eps, g, 0.0);
        for k in 0..2 {
            assert!((&d[k] - &an[k]).abs().max() < 1e-9);
        }
    }

    #[test]
    fn bernoulli() {
        for p in [0.1, 0.5, 0.8] {
            let d = DiscreteDistribution::new(
                vec!["1".into(), "0".into()],
                vec![p, 1.0 - p],
                vec!["p".into()],
                vec![vec![1.0, -1.0]],
                Provenance::default(),
            )
            .unwrap();
            assert_relative_eq!(fim_discrete(&d, 1).unwrap().get(0, 0), 1.0 / (p * (1.0 - p)), max_relative = 1e-14);
        }
    }

    #[test]
    fn photon_counting_quadrature_point() {
        let (eps, g, n) = (0.05, 0.5, 7);
        let d = photon_counting_two_mode(eps, g, 0.3, FRAC_PI_2 - 0.3).unwrap();
        let f = fim_discrete(&d, n).unwrap();
        assert_relative_eq!(f.element("theta", "theta").unwrap(), n as f64 * eps * g * g, max_relative = 1e-12);
        assert!(f.element("|g|", "|g|").unwrap().abs() < 1e-20);
        assert_eq!(f.rank(), 1);
    }

    #[test]
    fn zero_probability_flags_divergence() {
        let d = photon_counting_two_mode(0.1, 1.0, 0.0, 0.0).unwrap();
        let f = fim_discrete(&d, 1).unwrap();
        assert_eq!(f.divergent(), &["|g|".to_string()]);
    }

    #[test]
    fn json_roundtrip() {
        let f = FisherMatrix::new(vec!["a".into(), "b".into()], DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]), 4).unwrap();
        let back: FisherMatrix = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
        let crb = f.crb().unwrap();
        assert_relative_eq!(crb[(0, 0)], 1.0 / 1.75, max_relative = 1e-14);
    }
}

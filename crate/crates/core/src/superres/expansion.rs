//! Small-size expansion of the PSF about the source centroid.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::psf::{Grid, Psf};
use crate::error::{Error, Result};

/// Relative norm change tolerated when the grid resolution is halved.
pub const GRID_CONVERGENCE_TOL: f64 = 1e-6;

/// Normalized moments `t_n = Σ ζ_i ((y_i - y0)/L)^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MomentVector {
    t: Vec<f64>,
}

impl MomentVector {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        const TOL: f64 = 1e-12;
        if t.first().is_none_or(|t0| (t0 - 1.0).abs() > TOL) {
            return Err(Error::Validation("moment vector must start with t0 = 1".into()));
        }
        for (n, &v) in t.iter().enumerate() {
            if !v.is_finite() || v.abs() > 1.0 + TOL {
                return Err(Error::Validation(format!("|t_{n}| = {v} exceeds 1")));
            }
            if n % 2 == 0 && v < -TOL {
                return Err(Error::Validation(format!("even moment t_{n} = {v} is negative")));
            }
        }
        for n in 0..t.len() {
            for m in 0..t.len() {
                if 2 * n < t.len() && 2 * m < t.len() && n + m < t.len() {
                    let lhs = t[n + m] * t[n + m];
                    let rhs = t[2 * n] * t[2 * m];
                    if lhs > rhs + 1e-10 {
                        return Err(Error::Validation(format!(
                            "moments violate t_{}² ≤ t_{}·t_{}",
                            n + m,
                            2 * n,
                            2 * m
                        )));
                    }
                }
            }
        }
        Ok(Self { t })
    }

    /// Moments of point weights `zeta` at normalized offsets `s ∈ [-1/2, 1/2]`.
    pub fn from_offsets(offsets: &[f64], zeta: &[f64], n_max: usize) -> Self {
        let t = (0..=n_max)
            .map(|n| offsets.iter().zip(zeta).map(|(s, z)| z * s.powi(n as i32)).sum())
            .collect();
        Self { t }
    }

    pub fn centered_point(n_max: usize) -> Self {
        let mut t = vec![0.0; n_max + 1];
        t[0] = 1.0;
        Self { t }
    }

    pub fn values(&self) -> &[f64] {
        &self.t
    }

    pub fn get(&self, n: usize) -> f64 {
        self.t[n]
    }

    pub fn n_max(&self) -> usize {
        self.t.len() - 1
    }

    /// Hankel matrix `H_mn = t_{m+n}` for `m, n ≤ k`.
    pub fn hankel(&self, k: usize) -> Result<DMatrix<f64>> {
        if 2 * k > self.n_max() {
            return Err(Error::Dimension { context: "hankel moments", expected: 2 * k + 1, got: self.t.len() });
        }
        Ok(DMatrix::from_fn(k + 1, k + 1, |m, n| self.t[m + n]))
    }
}

impl TryFrom<Vec<f64>> for MomentVector {
    type Error = Error;
    fn try_from(t: Vec<f64>) -> Result<Self> {
        Self::new(t)
    }
}

impl From<MomentVector> for Vec<f64> {
    fn from(m: MomentVector) -> Self {
        m.t
    }
}

/// `ω⁽ⁿ⁾(x) = (Lⁿ/n!) ∂ⁿψ(x - y)/∂yⁿ` at `y = y0`, sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeVectors {
    grid: Grid,
    omega: Vec<Vec<f64>>,
    norms: Vec<f64>,
    y0: f64,
    size: f64,
}

impl DerivativeVectors {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n_max(&self) -> usize {
        self.omega.len() - 1
    }

    pub fn omega(&self, n: usize) -> &[f64] {
        &self.omega[n]
    }

    /// `√w ω⁽ⁿ⁾`, the mode-space representation.
    pub fn mode(&self, n: usize) -> DVector<f64> {
        self.grid.to_modes(&self.omega[n])
    }

    /// `‖ω⁽ⁿ⁾‖` under grid quadrature.
    pub fn norm(&self, n: usize) -> f64 {
        self.norms[n]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn inner(&self, m: usize, n: usize) -> f64 {
        self.grid.inner(&self.omega[m], &self.omega[n])
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn size(&self) -> f64 {
        self.size
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `Lⁿ/n! · ∂ⁿψ(x - y)/∂yⁿ |_{y0}` on the grid, plus the norm as computed on
/// every other grid point.
fn sampled(psf: &Psf, grid: &Grid, y0: f64, size: f64, n: usize) -> Vec<f64> {
    let c = size.powi(n as i32) / factorial(n);
    psf.sample_shift_derivative(grid, y0, n).into_iter().map(|v| c * v).collect()
}

fn coarse_norm_sq(grid: &Grid, f: &[f64]) -> Option<f64> {
    let n = grid.len();
    if n < 5 || !(n - 1).is_multiple_of(2) {
        return None;
    }
    let h = 2.0 * grid.step();
    let mut acc = 0.0;
    for (k, i) in (0..n).step_by(2).enumerate() {
        let w = if k == 0 || i == n - 1 { h / 2.0 } else { h };
        acc += w * f[i] * f[i];
    }
    Some(acc)
}

pub fn derivative_vectors(psf: &Psf, grid: &Grid, y0: f64, size: f64, n_max: usize) -> Result<DerivativeVectors> {
    if !(size >= 0.0) || !size.is_finite() {
        return Err(Error::Domain(format!("source size must be nonnegative, got {size}")));
    }
    let mut omega = Vec::with_capacity(n_max + 1);
    let mut norms = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let v = sampled(psf, grid, y0, size, n);
        let fine = grid.norm_sq(&v);
        // Unit-size vectors keep the resolution check meaningful at L = 0.
        let unit = if size > 0.0 { None } else { Some(sampled(psf, grid, y0, 1.0, n)) };
        let probe = unit.as_deref().unwrap_or(&v);
        let probe_fine = grid.norm_sq(probe);
        if let Some(coarse) = coarse_norm_sq(grid, probe) {
            if probe_fine > 0.0 && ((coarse - probe_fine) / probe_fine).abs() > GRID_CONVERGENCE_TOL {
                return Err(Error::Numerical(format!(
                    "grid too coarse: ‖ω^({n})‖² changes by {:.2e} relative at half resolution",
                    ((coarse - probe_fine) / probe_fine).abs()
                )));
            }
        }
        norms.push(fine.sqrt());
        omega.push(v);
    }
    Ok(DerivativeVectors { grid: grid.clone(), omega, norms, y0, size })
}

/// Which products `ω⁽ᵐ⁾ω⁽ⁿ⁾ᵀ` a truncated expansion keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Truncation {
    /// `m + n ≤ order`; error `O(L^{order+1})` but not always positive semidefinite.
    TotalDegree,
    /// `m, n ≤ order`; `ε Ωᵀ H Ω` with a Hankel `H`, positive semidefinite.
    PerIndex,
}

/// `Σ ε t_{m+n} ω⁽ᵐ⁾ω⁽ⁿ⁾ᵀ` in mode space.
pub fn gamma_expansion(
    t: &MomentVector,
    dv: &DerivativeVectors,
    eps: f64,
    order: usize,
    truncation: Truncation,
) -> Result<DMatrix<f64>> {
    let max_deg = match truncation {
        Truncation::TotalDegree => order,
        Truncation::PerIndex => 2 * order,
    };
    if order > dv.n_max() {
        return Err(Error::Dimension { context: "gamma_expansion derivative vectors", expected: order + 1, got: dv.n_max() + 1 });
    }
    if max_deg > t.n_max() {
        return Err(Error::Dimension { context: "gamma_expansion moments", expected: max_deg + 1, got: t.n_max() + 1 });
    }
    let modes: Vec<DVector<f64>> = (0..=order).map(|n| dv.mode(n)).collect();
    let w = dv.grid().len();
    let mut gamma = DMatrix::zeros(w, w);
    for m in 0..=order {
        for n in 0..=order {
            if truncation == Truncation::TotalDegree && m + n > order {
                continue;
            }
            let c = eps * t.get(m + n);
            if c != 0.0 {
                gamma.ger(c, &modes[m], &modes[n], 1.0);
            }
        }
    }
    Ok(gamma)
}

/// `∂Γ/∂t_k = ε Σ_{m+n=k} ω⁽ᵐ⁾ω⁽ⁿ⁾ᵀ` in mode space.
pub fn gamma_moment_derivative(dv: &DerivativeVectors, eps: f64, k: usize) -> Result<DMatrix<f64>> {
    if k > dv.n_max() {
        return Err(Error::Dimension { context: "moment derivative", expected: k + 1, got: dv.n_max() + 1 });
    }
    let w = dv.grid().len();
    let mut d = DMatrix::zeros(w, w);
    for m in 0..=k {
        d.ger(eps, &dv.mode(m), &dv.mode(k - m), 1.0);
    }
    Ok(d)
}

//! Upper bounds on Gaussian-measurement information for single-lens scenes.

use super::expansion::{derivative_vectors, DerivativeVectors};
use super::psf::{Grid, Psf};
use crate::error::{Error, Result};

fn check_common(eps: f64, n_copies: usize) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1], got {eps}")));
    }
    if n_copies == 0 {
        return Err(Error::Validation("need at least one copy".into()));
    }
    Ok(())
}

fn diagonal_moment_bound(n: usize, eps: f64, n_copies: usize, dv: &DerivativeVectors) -> f64 {
    let s: f64 = (0..=n).map(|a| dv.norm(a) * dv.norm(n - a)).sum();
    4.0 * n_copies as f64 * (n as f64 + 1.0) * eps * eps * s * s
}

/// Bound on `F[t_n, t_m]` for any Gaussian measurement. Off-diagonal entries
/// use `√(B_nn B_mm)`.
pub fn theorem2_bound(n: usize, m: usize, eps: f64, n_copies: usize, dv: &DerivativeVectors) -> Result<f64> {
    check_common(eps, n_copies)?;
    let top = n.max(m);
    if top > dv.n_max() {
        return Err(Error::Dimension { context: "moment bound order", expected: top, got: dv.n_max() });
    }
    let a = diagonal_moment_bound(n, eps, n_copies, dv);
    if n == m {
        Ok(a)
    } else {
        Ok((a * diagonal_moment_bound(m, eps, n_copies, dv)).sqrt())
    }
}

/// `F_LL ≤ N ε² L² (√3 + 1)² / (4σ⁴)` for two points under a Gaussian PSF.
pub fn two_point_gaussian_bound(eps: f64, size: f64, sigma: f64, n_copies: usize) -> Result<f64> {
    check_common(eps, n_copies)?;
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    let c = 3f64.sqrt() + 1.0;
    Ok(n_copies as f64 * eps * eps * size * size * c * c / (4.0 * sigma.powi(4)))
}

/// `F_LL ≤ 4 N ε² L² (‖e₁‖² + ‖e₀‖‖e₂‖)²` with `e_n = ∂ⁿψ`, for any PSF.
pub fn two_point_bound(eps: f64, size: f64, n_copies: usize, psf: &Psf, grid: &Grid) -> Result<f64> {
    check_common(eps, n_copies)?;
    let unit = derivative_vectors(psf, grid, grid.points()[grid.len() / 2], 1.0, 2)?;
    let (e0, e1, e2) = (unit.norm(0), unit.norm(1), 2.0 * unit.norm(2));
    let c = e1 * e1 + e0 * e2;
    Ok(4.0 * n_copies as f64 * eps * eps * size * size * c * c)
}

/// Two-lens interferometric two-point information `2 N ε² k² sin²(kL)`.
pub fn interferometric_two_point_bound(eps: f64, k: f64, size: f64, n_copies: usize) -> Result<f64> {
    check_common(eps, n_copies)?;
    Ok(2.0 * n_copies as f64 * eps * eps * k * k * (k * size).sin().powi(2))
}

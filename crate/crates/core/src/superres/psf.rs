//! Point-spread functions and the detection-plane quadrature grid.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{fornberg_weights, trapezoid_weights};

/// Default number of detection-plane samples.
pub const DEFAULT_GRID_POINTS: usize = 801;
/// Default grid half-width in units of σ, added to the source size.
pub const DEFAULT_HALF_WIDTH_SIGMAS: f64 = 10.0;

/// Uniform detection-plane grid with trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    x: Vec<f64>,
    w: Vec<f64>,
    sqrt_w: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub n_points: usize,
}

impl Grid {
    pub fn uniform(center: f64, half_width: f64, n_points: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::Validation(format!("grid half-width must be positive, got {half_width}")));
        }
        if n_points < 3 {
            return Err(Error::Validation(format!("grid needs at least 3 points, got {n_points}")));
        }
        let h = 2.0 * half_width / (n_points - 1) as f64;
        let x: Vec<f64> = (0..n_points).map(|i| center - half_width + h * i as f64).collect();
        let w = trapezoid_weights(n_points, h);
        let sqrt_w = w.iter().map(|v| v.sqrt()).collect();
        Ok(Self { x, w, sqrt_w })
    }

    /// 801 points over `y0 ± (10σ + L)`.
    pub fn for_psf(psf: &Psf, y0: f64, size: f64) -> Self {
        Self::uniform(y0, DEFAULT_HALF_WIDTH_SIGMAS * psf.sigma() + size, DEFAULT_GRID_POINTS)
            .expect("default grid parameters are valid")
    }

    pub fn from_spec(spec: GridSpec, center: f64) -> Result<Self> {
        Self::uniform(center, spec.half_width, spec.n_points)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.x
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn step(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.x[self.x.len() - 1] - self.x[0])
    }

    /// `Σ w u v`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.w.iter().zip(u).zip(v).map(|((w, a), b)| w * a * b).sum()
    }

    pub fn norm_sq(&self, u: &[f64]) -> f64 {
        self.inner(u, u)
    }

    /// Samples scaled by `√w`, so that the weighted inner product becomes the
    /// Euclidean one.
    pub fn to_modes(&self, f: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.len(), f.iter().zip(&self.sqrt_w).map(|(a, s)| a * s))
    }

    pub fn from_modes(&self, v: &DVector<f64>) -> Vec<f64> {
        v.iter().zip(&self.sqrt_w).map(|(a, s)| a / s).collect()
    }
}

type PsfFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Real amplitude point-spread function ψ with width scale σ.
#[derive(Clone)]
pub enum Psf {
    /// ψ(u) = (2πσ²)^{-1/4} exp(-u²/4σ²).
    Gaussian { sigma: f64 },
    /// Arbitrary real PSF; derivatives are taken by finite differences.
    Custom { sigma: f64, f: PsfFn },
}

impl fmt::Debug for Psf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psf::Gaussian { sigma } => f.debug_struct("Gaussian").field("sigma", sigma).finish(),
            Psf::Custom { sigma, .. } => f.debug_struct("Custom").field("sigma", sigma).finish_non_exhaustive(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsfSpec {
    Gaussian { sigma: f64 },
}

/// Probabilists' Hermite polynomial He_n(z).
pub fn hermite_he(n: usize, z: f64) -> f64 {
    let (mut a, mut b) = (1.0, z);
    if n == 0 {
        return a;
    }
    for k in 1..n {
        let c = z * b - k as f64 * a;
        a = b;
        b = c;
    }
    b
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("PSF width must be positive, got {sigma}")));
    }
    Ok(())
}

impl Psf {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(Psf::Gaussian { sigma })
    }

    pub fn custom(sigma: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(Psf::Custom { sigma, f: Arc::new(f) })
    }

    pub fn from_spec(spec: PsfSpec) -> Result<Self> {
        match spec {
            PsfSpec::Gaussian { sigma } => Self::gaussian(sigma),
        }
    }

    pub fn spec(&self) -> Option<PsfSpec> {
        match *self {
            Psf::Gaussian { sigma } => Some(PsfSpec::Gaussian { sigma }),
            Psf::Custom { .. } => None,
        }
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            Psf::Gaussian { sigma } | Psf::Custom { sigma, .. } => sigma,
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        match self {
            Psf::Gaussian { sigma } => {
                (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.25) * (-u * u / (4.0 * sigma * sigma)).exp()
            }
            Psf::Custom { f, .. } => f(u),
        }
    }

    /// `∂ⁿψ(x - y)/∂yⁿ` evaluated at `u = x - y`.
    pub fn shift_derivative(&self, u: f64, n: usize) -> f64 {
        if n == 0 {
            return self.value(u);
        }
        match self {
            Psf::Gaussian { sigma } => {
                let s = std::f64::consts::SQRT_2 * sigma;
                let z = u / s;
                self.value(u) * hermite_he(n, z) / s.powi(n as i32)
            }
            Psf::Custom { sigma, f } => {
                // O(h^4) central stencil in y; the step balances truncation
                // against roundoff for this order.
                let p = n.div_ceil(2) + 1;
                let h = sigma * f64::EPSILON.powf(1.0 / (n as f64 + 4.0));
                let offsets: Vec<f64> = (-(p as i64)..=p as i64).map(|k| k as f64).collect();
                let wts = fornberg_weights(n, &offsets);
                let acc: f64 = offsets.iter().zip(&wts).map(|(k, c)| c * f(u - k * h)).sum();
                acc / h.powi(n as i32)
            }
        }
    }

    /// ψ(x - y) sampled on the grid.
    pub fn sample(&self, grid: &Grid, y: f64) -> Vec<f64> {
        grid.points().iter().map(|x| self.value(x - y)).collect()
    }

    /// `∂ⁿψ(x - y)/∂yⁿ` sampled on the grid.
    pub fn sample_shift_derivative(&self, grid: &Grid, y: f64, n: usize) -> Vec<f64> {
        grid.points().iter().map(|x| self.shift_derivative(x - y, n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hermite_recurrence() {
        let z = 0.7;
        assert_eq!(hermite_he(0, z), 1.0);
        assert_eq!(hermite_he(1, z), z);
        assert_relative_eq!(hermite_he(2, z), z * z - 1.0, epsilon = 1e-15);
        assert_relative_eq!(hermite_he(3, z), z.powi(3) - 3.0 * z, epsilon = 1e-15);
        assert_relative_eq!(hermite_he(4, z), z.powi(4) - 6.0 * z * z + 3.0, epsilon = 1e-14);
    }

    #[test]
    fn gaussian_normalized_on_default_grid() {
        let psf = Psf::gaussian(1.3).unwrap();
        let grid = Grid::for_psf(&psf, 0.2, 0.1);
        let v = psf.sample(&grid, 0.2);
        assert_relative_eq!(grid.norm_sq(&v), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn custom_stencil_matches_analytic_derivatives() {
        let sigma = 0.8;
        let g = Psf::gaussian(sigma).unwrap();
        let c = Psf::custom(sigma, move |u| {
            (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.25) * (-u * u / (4.0 * sigma * sigma)).exp()
        })
        .unwrap();
        for n in 0..=4 {
            for &u in &[-1.1, -0.3, 0.0, 0.45, 1.7] {
                let a = g.shift_derivative(u, n);
                let b = c.shift_derivative(u, n);
                let scale = (0..=n).map(|k| g.shift_derivative(0.0, k).abs()).fold(1.0, f64::max);
                assert!((a - b).abs() < 1e-5 * scale, "n={n} u={u}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn shift_derivative_sign() {
        // ∂ψ(x - y)/∂y = -ψ'(x - y): positive for u > 0 for a decaying bump
        let g = Psf::gaussian(1.0).unwrap();
        assert!(g.shift_derivative(0.5, 1) > 0.0);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(Grid::uniform(0.0, -1.0, 801).is_err());
        assert!(Grid::uniform(0.0, 1.0, 2).is_err());
        assert!(Psf::gaussian(0.0).is_err());
    }
}

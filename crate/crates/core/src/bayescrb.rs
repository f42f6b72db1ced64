//! Bayesian Cramér–Rao quantities for the two-point separation: the `K[p]`
//! functional, its minimizing prior and worst-case bounds per detection family.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

pub const NORMALIZATION_TOL: f64 = 1e-8;
pub const MIN_EIGEN_GRID: usize = 200;
/// Domains shorter than this many `ω` flag the closed-form prior as truncated.
pub const TRUNCATION_WIDTHS: f64 = 8.0;

fn uniform(l_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(l_max > 0.0 && l_max.is_finite()) {
        return Err(Error::Domain(format!("L_max must be positive, got {l_max}")));
    }
    if n < 3 {
        return Err(Error::Validation(format!("grid needs at least 3 points, got {n}")));
    }
    let h = l_max / (n - 1) as f64;
    Ok((0..n).map(|i| i as f64 * h).collect())
}

fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    linalg::trapezoid_weights(grid.len(), step(grid))
}

fn step(grid: &[f64]) -> f64 {
    grid[1] - grid[0]
}

fn check_uniform(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return Err(Error::Validation("grid needs at least 3 points".into()));
    }
    let h = step(grid);
    if !(h > 0.0) || grid.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return Err(Error::Validation("grid must be uniform and increasing".into()));
    }
    Ok(())
}

/// Prior `p = q²` sampled on a uniform grid over `[0, L_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorFunction {
    grid: Vec<f64>,
    q: Vec<f64>,
}

impl PriorFunction {
    pub fn new(grid: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        check_uniform(&grid)?;
        if grid.len() != q.len() {
            return Err(Error::Dimension { context: "prior amplitude", expected: grid.len(), got: q.len() });
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("prior amplitude must be finite".into()));
        }
        let p = Self { grid, q };
        let norm = p.mass();
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Validation(format!("prior mass {norm} differs from 1")));
        }
        Ok(p)
    }

    /// Rescales `q` to unit mass.
    pub fn normalized(grid: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        check_uniform(&grid)?;
        if grid.len() != q.len() {
            return Err(Error::Dimension { context: "prior amplitude", expected: grid.len(), got: q.len() });
        }
        let mass: f64 = trapezoid_weights(&grid).iter().zip(&q).map(|(w, v)| w * v * v).sum();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Validation("prior amplitude has no mass".into()));
        }
        let s = mass.sqrt();
        Self::new(grid, q.into_iter().map(|v| v / s).collect())
    }

    /// `∫ q² dL` by the trapezoid rule.
    pub fn mass(&self) -> f64 {
        trapezoid_weights(&self.grid).iter().zip(&self.q).map(|(w, v)| w * v * v).sum()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn density(&self) -> Vec<f64> {
        self.q.iter().map(|v| v * v).collect()
    }

    pub fn l_max(&self) -> f64 {
        *self.grid.last().expect("grid is nonempty")
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("L,p\n");
        for (l, q) in self.grid.iter().zip(&self.q) {
            s.push_str(&format!("{l:.16e},{:.16e}\n", q * q));
        }
        s
    }
}

/// `F(L)` on a uniform grid; linearly interpolated elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherProfile {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl FisherProfile {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_uniform(&grid)?;
        if grid.len() != values.len() {
            return Err(Error::Dimension { context: "Fisher profile", expected: grid.len(), got: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Domain(format!("Fisher profile entries must be nonnegative, got {v}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(l_max: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let grid = uniform(l_max, n)?;
        let values = grid.iter().map(|&l| f(l)).collect();
        Self::new(grid, values)
    }

    /// `F(L) = k N L² / σ⁴`.
    pub fn quadratic(k: f64, n_copies: usize, sigma: f64, l_max: f64, n: usize) -> Result<Self> {
        check_quadratic(k, n_copies, sigma)?;
        let c = k * n_copies as f64 / sigma.powi(4);
        Self::from_fn(l_max, n, |l| c * l * l)
    }

    pub fn constant(value: f64, l_max: f64, n: usize) -> Result<Self> {
        Self::from_fn(l_max, n, |_| value)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|v| v + c).collect())
    }

    /// Linear interpolation, constant beyond the ends.
    pub fn at(&self, l: f64) -> f64 {
        let h = step(&self.grid);
        let x = (l - self.grid[0]) / h;
        if x <= 0.0 {
            return self.values[0];
        }
        let last = self.grid.len() - 1;
        if x >= last as f64 {
            return self.values[last];
        }
        let i = x.floor() as usize;
        let t = x - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    fn resampled(&self, grid: &[f64]) -> Vec<f64> {
        if grid.len() == self.grid.len() && grid.iter().zip(&self.grid).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b.abs())) {
            return self.values.clone();
        }
        grid.iter().map(|&l| self.at(l)).collect()
    }
}

fn check_quadratic(k: f64, n_copies: usize, sigma: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Domain(format!("k must be positive, got {k}")));
    }
    if n_copies == 0 {
        return Err(Error::Validation("need at least one copy".into()));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

/// `K[p] = ∫ (q² F + 4 q′²) dL`, with `q′` taken at cell midpoints.
pub fn k_functional(prior: &PriorFunction, f: &FisherProfile) -> Result<f64> {
    let mass = prior.mass();
    if (mass - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Validation(format!("prior mass {mass} differs from 1")));
    }
    let grid = prior.grid();
    let h = step(grid);
    let fv = f.resampled(grid);
    let w = trapezoid_weights(grid);
    let info: f64 = prior.q().iter().zip(&fv).zip(&w).map(|((q, f), w)| w * q * q * f).sum();
    let kinetic: f64 = prior.q().windows(2).map(|d| (d[1] - d[0]).powi(2) / h).sum();
    Ok(info + 4.0 * kinetic)
}

/// `K[p] = ∫ p F dL + ∫ p′²/p dL` directly from a positive density on a
/// uniform grid, with second-order differences for `p′`.
pub fn k_functional_density(grid: &[f64], p: &[f64], f: &FisherProfile) -> Result<f64> {
    check_uniform(grid)?;
    if grid.len() != p.len() {
        return Err(Error::Dimension { context: "prior density", expected: grid.len(), got: p.len() });
    }
    if p.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Domain("density form needs a strictly positive prior".into()));
    }
    let w = trapezoid_weights(grid);
    let mass: f64 = w.iter().zip(p).map(|(w, p)| w * p).sum();
    if (mass - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Validation(format!("prior mass {mass} differs from 1")));
    }
    let h = step(grid);
    let n = p.len();
    let dp = |i: usize| -> f64 {
        if i == 0 {
            (-3.0 * p[0] + 4.0 * p[1] - p[2]) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * p[n - 1] - 4.0 * p[n - 2] + p[n - 3]) / (2.0 * h)
        } else {
            (p[i + 1] - p[i - 1]) / (2.0 * h)
        }
    };
    let fv = f.resampled(grid);
    Ok((0..n).map(|i| w[i] * (p[i] * fv[i] + dp(i).powi(2) / p[i])).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSolution {
    pub prior: PriorFunction,
    pub lambda: f64,
    /// Eigenvalue on the grid with twice the spacing.
    pub lambda_coarse: f64,
    /// Richardson estimate `|λ_h − λ_2h| / 3` of the discretization error.
    pub error_estimate: f64,
}

/// Number of eigenvalues of the symmetric tridiagonal `(d, e)` below `x`.
fn sturm_count(d: &[f64], e: f64, x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for (i, di) in d.iter().enumerate() {
        let off = if i == 0 { 0.0 } else { e * e / q };
        q = di - x - off;
        if q == 0.0 {
            q = -f64::EPSILON * (di.abs() + e.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn smallest_eigenvalue(d: &[f64], e: f64) -> Result<f64> {
    let mut lo = d.iter().fold(f64::INFINITY, |a, v| a.min(*v)) - 2.0 * e.abs();
    let mut hi = d.iter().fold(f64::NEG_INFINITY, |a, v| a.max(*v)) + 2.0 * e.abs();
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(d, e, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(1.0) {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::Numerical("Sturm bisection did not converge".into()))
}

/// Solves `(T − s I) y = b` for symmetric tridiagonal `T` with constant
/// off-diagonal `e`.
fn tridiagonal_solve(d: &[f64], e: f64, s: f64, b: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut c = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut m = d[0] - s;
    c[0] = e / m;
    y[0] = b[0] / m;
    for i in 1..n {
        m = d[i] - s - e * c[i - 1];
        c[i] = e / m;
        y[i] = (b[i] - e * y[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        y[i] -= c[i] * y[i + 1];
    }
    y
}

fn ground_state(fv: &[f64], h: f64) -> Result<(f64, Vec<f64>)> {
    let d: Vec<f64> = fv.iter().map(|f| 8.0 / (h * h) + f).collect();
    let e = -4.0 / (h * h);
    let lambda = smallest_eigenvalue(&d, e)?;
    let scale = lambda.abs().max(1.0);
    let shift = lambda - 1e-10 * scale;
    let mut v = vec![1.0; d.len()];
    for _ in 0..4 {
        v = tridiagonal_solve(&d, e, shift, &v);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Numerical("inverse iteration broke down".into()));
        }
        v.iter_mut().for_each(|x| *x /= n);
    }
    let n = d.len();
    let resid = (0..n)
        .map(|i| {
            let mut t = d[i] * v[i] - lambda * v[i];
            if i > 0 {
                t += e * v[i - 1];
            }
            if i + 1 < n {
                t += e * v[i + 1];
            }
            t * t
        })
        .sum::<f64>()
        .sqrt();
    if resid > 1e-6 * (d.iter().fold(0.0f64, |a, x| a.max(x.abs())) + e.abs()) {
        return Err(Error::Numerical(format!("inverse iteration residual {resid:e}")));
    }
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Ok((lambda, v))
}

fn solve_on(f: &FisherProfile, l_max: f64, n_grid: usize) -> Result<(f64, PriorFunction)> {
    let grid = uniform(l_max, n_grid)?;
    let h = step(&grid);
    let fv = f.resampled(&grid);
    let (lambda, v) = ground_state(&fv[1..n_grid - 1], h)?;
    let mut q = vec![0.0; n_grid];
    q[1..n_grid - 1].copy_from_slice(&v);
    Ok((lambda, PriorFunction::normalized(grid, q)?))
}

/// Smallest eigenpair of `−4 d²/dL² + F(L)` on `[0, L_max]`.
pub fn eigen_solver(f: &FisherProfile, l_max: f64, n_grid: usize, boundary: Boundary) -> Result<EigenSolution> {
    let Boundary::Dirichlet = boundary;
    if n_grid < MIN_EIGEN_GRID {
        return Err(Error::Validation(format!("eigen grid needs at least {MIN_EIGEN_GRID} points, got {n_grid}")));
    }
    let (lambda, prior) = solve_on(f, l_max, n_grid)?;
    let (lambda_coarse, _) = solve_on(f, l_max, (n_grid - 1) / 2 + 1)?;
    Ok(EigenSolution { prior, lambda, lambda_coarse, error_estimate: (lambda - lambda_coarse).abs() / 3.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmaxSensitivity {
    pub l_max: f64,
    pub lambda: f64,
    pub lambda_extended: f64,
    pub relative_change: f64,
}

/// Eigenvalue at `L_max` and at `1.5 L_max` for an analytic profile.
pub fn l_max_sensitivity(f: impl Fn(f64) -> f64, l_max: f64, n_grid: usize) -> Result<LmaxSensitivity> {
    let a = eigen_solver(&FisherProfile::from_fn(l_max, n_grid, &f)?, l_max, n_grid, Boundary::Dirichlet)?;
    let ext = 1.5 * l_max;
    let n_ext = ((n_grid - 1) as f64 * 1.5).round() as usize + 1;
    let b = eigen_solver(&FisherProfile::from_fn(ext, n_ext, &f)?, ext, n_ext, Boundary::Dirichlet)?;
    Ok(LmaxSensitivity {
        l_max,
        lambda: a.lambda,
        lambda_extended: b.lambda,
        relative_change: (a.lambda - b.lambda).abs() / b.lambda.abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalPrior {
    pub prior: PriorFunction,
    pub lambda: f64,
    pub omega: f64,
    /// Set when `L_max < 8ω`; the sampled prior was then renormalized.
    pub truncated: bool,
}

/// `ω = σ / (kN)^{1/4}`.
pub fn prior_width(k: f64, n_copies: usize, sigma: f64) -> Result<f64> {
    check_quadratic(k, n_copies, sigma)?;
    Ok(sigma / (k * n_copies as f64).powf(0.25))
}

/// Closed-form minimizer for `F = kNL²/σ⁴`:
/// `q(L) = (2/π)^{1/4} L ω^{-3/2} exp(−L²/4ω²)`, `λ = 6/ω²`.
pub fn optimal_prior_quadratic_fi(k: f64, n_copies: usize, sigma: f64, l_max: f64, n_grid: usize) -> Result<OptimalPrior> {
    let omega = prior_width(k, n_copies, sigma)?;
    let grid = uniform(l_max, n_grid)?;
    let c = (2.0 / std::f64::consts::PI).powf(0.25) / omega.powf(1.5);
    let q: Vec<f64> = grid.iter().map(|&l| c * l * (-l * l / (4.0 * omega * omega)).exp()).collect();
    let truncated = l_max < TRUNCATION_WIDTHS * omega;
    let prior = if truncated { PriorFunction::normalized(grid, q)? } else { PriorFunction::new(grid, q)? };
    Ok(OptimalPrior { prior, lambda: 6.0 / (omega * omega), omega, truncated })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum DetectionFamily {
    Spade,
    Direct,
    Gaussian { k: f64 },
}

impl DetectionFamily {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Spade => "spade",
            Self::Direct => "direct",
            Self::Gaussian { .. } => "gaussian",
        }
    }

    /// Leading-order per-experiment information `F(L)` for this family.
    pub fn fisher_profile(&self, n_copies: usize, sigma: f64, l_max: f64, n: usize) -> Result<FisherProfile> {
        match *self {
            Self::Spade => FisherProfile::constant(n_copies as f64 / (4.0 * sigma * sigma), l_max, n),
            Self::Direct => FisherProfile::quadratic(0.125, n_copies, sigma, l_max, n),
            Self::Gaussian { k } => FisherProfile::quadratic(k, n_copies, sigma, l_max, n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseBound {
    pub family: DetectionFamily,
    pub n_copies: usize,
    pub sigma: f64,
    pub k_bound: f64,
    /// `1 / K`, the lower bound on worst-case mean-square error.
    pub mse_lower_bound: f64,
}

pub fn worst_case_bounds(family: DetectionFamily, n_copies: usize, sigma: f64) -> WorstCaseBound {
    let n = n_copies as f64;
    let s2 = sigma * sigma;
    let k_bound = match family {
        DetectionFamily::Spade => n / (4.0 * s2),
        DetectionFamily::Direct => 3.0 * n.sqrt() / (std::f64::consts::SQRT_2 * s2),
        DetectionFamily::Gaussian { k } => 6.0 * (k * n).sqrt() / s2,
    };
    WorstCaseBound { family, n_copies, sigma, k_bound, mse_lower_bound: 1.0 / k_bound }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn quad_profile(l_max: f64, n: usize) -> FisherProfile {
        FisherProfile::quadratic(1.0, 1, 1.0, l_max, n).unwrap()
    }

    #[test]
    fn box_mode_energy() {
        let grid = uniform(PI, 4001).unwrap();
        let q: Vec<f64> = grid.iter().map(|l| (2.0 / PI).sqrt() * l.sin()).collect();
        let p = PriorFunction::normalized(grid, q).unwrap();
        let f = FisherProfile::constant(0.0, PI, 11).unwrap();
        assert_relative_eq!(k_functional(&p, &f).unwrap(), 4.0, max_relative = 1e-6);
        let s = eigen_solver(&f, PI, 1001, Boundary::Dirichlet).unwrap();
        assert!((s.lambda - 4.0).abs() < 0.01);
    }

    #[test]
    fn closed_form_prior() {
        let o = optimal_prior_quadratic_fi(1.0, 1, 1.0, 12.0, 4001).unwrap();
        assert_eq!(o.omega, 1.0);
        assert_eq!(o.lambda, 6.0);
        assert!(!o.truncated);
        assert!((o.prior.mass() - 1.0).abs() < 1e-8);
        let dens = o.prior.density();
        let imax = (0..dens.len()).max_by(|a, b| dens[*a].total_cmp(&dens[*b])).unwrap();
        assert!((o.prior.grid()[imax] - 2f64.sqrt()).abs() <= 12.0 / 4000.0);
        let k = k_functional(&o.prior, &quad_profile(12.0, 4001)).unwrap();
        assert_relative_eq!(k, 6.0, max_relative = 1e-5);
        assert!(optimal_prior_quadratic_fi(1.0, 1, 1.0, 6.0, 1001).unwrap().truncated);
    }

    #[test]
    fn eigen_matches_closed_form() {
        let s = eigen_solver(&quad_profile(12.0, 2001), 12.0, 2001, Boundary::Dirichlet).unwrap();
        assert!((s.lambda - 6.0).abs() < 0.05);
        assert!(s.error_estimate < 1e-3);
        let o = optimal_prior_quadratic_fi(1.0, 1, 1.0, 12.0, 2001).unwrap();
        let w = trapezoid_weights(s.prior.grid());
        let l2: f64 = s.prior.q().iter().zip(o.prior.q()).zip(&w).map(|((a, b), w)| w * (a - b).powi(2)).sum();
        assert!(l2.sqrt() < 1e-3);
        let k = k_functional(&s.prior, &quad_profile(12.0, 2001)).unwrap();
        assert_relative_eq!(k, s.lambda, max_relative = 1e-4);
    }

    #[test]
    fn density_form_agrees_on_smooth_prior() {
        let grid = uniform(1.0, 20001).unwrap();
        let raw: Vec<f64> = grid.iter().map(|l| 1.0 + 0.5 * (2.0 * PI * l).cos() + 0.2 * l).collect();
        let w = trapezoid_weights(&grid);
        let mass: f64 = w.iter().zip(&raw).map(|(w, p)| w * p).sum();
        let p: Vec<f64> = raw.iter().map(|v| v / mass).collect();
        let q: Vec<f64> = p.iter().map(|v| v.sqrt()).collect();
        let f = FisherProfile::from_fn(1.0, 101, |l| 3.0 * l * l).unwrap();
        let a = k_functional(&PriorFunction::new(grid.clone(), q).unwrap(), &f).unwrap();
        let b = k_functional_density(&grid, &p, &f).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-6);
    }

    #[test]
    fn eigen_prior_beats_random_trials() {
        let f = quad_profile(12.0, 1001);
        let s = eigen_solver(&f, 12.0, 1001, Boundary::Dirichlet).unwrap();
        let grid = s.prior.grid().to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let c: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let q: Vec<f64> = grid
                .iter()
                .map(|l| c.iter().enumerate().map(|(j, cj)| cj * ((j + 1) as f64 * PI * l / 12.0).sin()).sum())
                .collect();
            let trial = PriorFunction::normalized(grid.clone(), q).unwrap();
            assert!(k_functional(&trial, &f).unwrap() >= s.lambda * (1.0 - 1e-12));
        }
    }

    #[test]
    fn richardson_pattern() {
        let l: Vec<f64> = [201, 401, 801]
            .iter()
            .map(|&n| solve_on(&quad_profile(12.0, n), 12.0, n).unwrap().0)
            .collect();
        assert!((l[0] - l[1]).abs() <= 4.0 * (l[1] - l[2]).abs() * 1.05);
        assert!((l[0] - l[1]).abs() >= 3.0 * (l[1] - l[2]).abs());
    }

    #[test]
    fn square_root_scaling_in_copies() {
        let ns = [1usize, 10, 100, 1000];
        let lam: Vec<f64> = ns
            .iter()
            .map(|&n| {
                let omega = prior_width(1.0, n, 1.0).unwrap();
                let l_max = 12.0 * omega;
                eigen_solver(&FisherProfile::quadratic(1.0, n, 1.0, l_max, 1001).unwrap(), l_max, 1001, Boundary::Dirichlet)
                    .unwrap()
                    .lambda
            })
            .collect();
        let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let fit = crate::superres::scaling_exponent_fit(&x, &lam).unwrap();
        assert!((fit.slope - 0.5).abs() < 0.01);
    }

    #[test]
    fn worst_case_examples() {
        assert_relative_eq!(worst_case_bounds(DetectionFamily::Spade, 100, 1.0).k_bound, 25.0);
        assert_relative_eq!(worst_case_bounds(DetectionFamily::Direct, 100, 1.0).k_bound, 30.0 / 2f64.sqrt(), max_relative = 1e-14);
        let k = 0.01 * (3f64.sqrt() + 1.0).powi(2) / 4.0;
        let g = worst_case_bounds(DetectionFamily::Gaussian { k }, 100, 1.0);
        assert_relative_eq!(g.k_bound, 8.196, max_relative = 1e-4);
        assert_relative_eq!(g.mse_lower_bound * g.k_bound, 1.0);
        // direct-imaging bound is the quadratic-profile eigenvalue at k = 1/8
        let d = optimal_prior_quadratic_fi(0.125, 100, 1.0, 20.0, 501).unwrap();
        assert_relative_eq!(d.lambda, worst_case_bounds(DetectionFamily::Direct, 100, 1.0).k_bound, max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(FisherProfile::new(vec![0.0, 1.0, 2.0], vec![0.0, -1.0, 0.0]).is_err());
        assert!(eigen_solver(&quad_profile(12.0, 100), 12.0, 100, Boundary::Dirichlet).is_err());
        let grid = uniform(1.0, 11).unwrap();
        assert!(PriorFunction::new(grid, vec![1.0; 11]).is_ok());
        assert!(PriorFunction::new(uniform(2.0, 11).unwrap(), vec![1.0; 11]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn constant_shift_moves_eigenvalue(c in 0.0f64..20.0) {
            let f = quad_profile(12.0, 401);
            let a = eigen_solver(&f, 12.0, 401, Boundary::Dirichlet).unwrap().lambda;
            let b = eigen_solver(&f.shifted(c).unwrap(), 12.0, 401, Boundary::Dirichlet).unwrap().lambda;
            prop_assert!((b - a - c).abs() < 1e-9 * (1.0 + b.abs()));
        }

        #[test]
        fn dilation_scales_information(c in 0.3f64..3.0) {
            let n = 2001;
            let base = uniform(5.0, n).unwrap();
            let q: Vec<f64> = base.iter().map(|l| l * (-l * l / 2.0).exp()).collect();
            let p1 = PriorFunction::normalized(base, q.clone()).unwrap();
            let wide = uniform(5.0 * c, n).unwrap();
            let p2 = PriorFunction::normalized(wide, q).unwrap();
            let zero = FisherProfile::constant(0.0, 1.0, 3).unwrap();
            let k1 = k_functional(&p1, &zero).unwrap();
            let k2 = k_functional(&p2, &zero).unwrap();
            prop_assert!((k2 * c * c / k1 - 1.0).abs() < 1e-10);
        }
    }
}

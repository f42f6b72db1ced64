//! Moment and size Fisher information for direct imaging, SPADE and Gaussian
//! measurements.

use nalgebra::{DMatrix, DVector};

use super::expansion::{derivative_vectors, DerivativeVectors, MomentVector};
use super::scene::{scene_coherence, scene_coherence_dsize, SourceScene};
use crate::error::{Error, Result};
use crate::fisher::{fim_discrete, fim_gaussian, FisherMatrix};
use crate::gstate::copies_of_matrix;
use crate::linalg::orthonormal_span;
use crate::measure::{spade_outcome_distribution, spade_scene_distribution, DiscreteDistribution, GaussianMeasurement, Provenance, SpadeBasis};

/// Drop tolerance for the reduced mode basis.
const SPAN_TOL: f64 = 1e-13;

fn moment_names(n_max: usize) -> Vec<String> {
    (1..=n_max).map(|n| format!("t{n}")).collect()
}

/// Single-photon position statistics on the grid cells, plus `rest` (weight
/// outside the grid) and `vac`. Parameters are `t_1..t_{n_max}`.
pub fn direct_imaging_distribution(scene: &SourceScene, n_max: usize) -> Result<DiscreteDistribution> {
    let grid = scene.grid();
    let eps = scene.eps();
    let w = grid.weights();
    let mut p = vec![0.0; grid.len()];
    for (y, z) in scene.points().iter().zip(scene.weights()) {
        for (k, v) in scene.psf().sample(grid, *y).iter().enumerate() {
            p[k] += eps * z * w[k] * v * v;
        }
    }
    let dv = derivative_vectors(scene.psf(), grid, scene.y0(), scene.size(), n_max)?;
    let mut dprobs: Vec<Vec<f64>> = Vec::with_capacity(n_max);
    for k in 1..=n_max {
        let mut d = vec![0.0; grid.len()];
        for m in 0..=k {
            let (a, b) = (dv.omega(m), dv.omega(k - m));
            for i in 0..grid.len() {
                d[i] += eps * w[i] * a[i] * b[i];
            }
        }
        dprobs.push(d);
    }
    let mut labels: Vec<String> = (0..grid.len()).map(|i| format!("x{i}")).collect();
    let captured: f64 = p.iter().sum();
    labels.push("rest".into());
    labels.push("vac".into());
    p.push((eps - captured).max(0.0));
    p.push(1.0 - eps);
    for d in &mut dprobs {
        let s: f64 = d.iter().sum();
        d.push(-s);
        d.push(0.0);
    }
    DiscreteDistribution::new(
        labels,
        p,
        moment_names(n_max),
        dprobs,
        Provenance::new("direct_imaging_distribution", &[("eps", eps), ("L", scene.size())]),
    )
}

pub fn direct_imaging_fim_moments(scene: &SourceScene, n_max: usize, n_copies: usize) -> Result<FisherMatrix> {
    fim_discrete(&direct_imaging_distribution(scene, n_max)?, n_copies)
}

/// Direct imaging with the source size as parameter.
pub fn direct_imaging_fim_size(scene: &SourceScene, n_copies: usize) -> Result<FisherMatrix> {
    let grid = scene.grid();
    let eps = scene.eps();
    let w = grid.weights();
    let mut p = vec![0.0; grid.len()];
    let mut d = vec![0.0; grid.len()];
    for ((y, z), s) in scene.points().iter().zip(scene.weights()).zip(scene.offsets()) {
        let v = scene.psf().sample(grid, *y);
        let dv = scene.psf().sample_shift_derivative(grid, *y, 1);
        for k in 0..grid.len() {
            p[k] += eps * z * w[k] * v[k] * v[k];
            d[k] += 2.0 * eps * z * w[k] * v[k] * dv[k] * s;
        }
    }
    let captured: f64 = p.iter().sum();
    let mut labels: Vec<String> = (0..grid.len()).map(|i| format!("x{i}")).collect();
    labels.push("rest".into());
    labels.push("vac".into());
    p.push((eps - captured).max(0.0));
    p.push(1.0 - eps);
    let s: f64 = d.iter().sum();
    d.push(-s);
    d.push(0.0);
    let dist = DiscreteDistribution::new(
        labels,
        p,
        vec!["L".into()],
        vec![d],
        Provenance::new("direct_imaging_size", &[("eps", eps), ("L", scene.size())]),
    )?;
    fim_discrete(&dist, n_copies)
}

/// SPADE moment information over `t_1..t_{n_max}` using the scene's moments.
pub fn spade_fim_moments(scene: &SourceScene, basis: &SpadeBasis, n_max: usize, n_copies: usize) -> Result<FisherMatrix> {
    if basis.order() < n_max {
        return Err(Error::Validation(format!(
            "SPADE basis order {} below requested moment order {n_max}",
            basis.order()
        )));
    }
    let t = scene.moments(2 * basis.expansion_order());
    let dist = spade_outcome_distribution(&t, scene.eps(), basis)?;
    let f = fim_discrete(&dist, n_copies)?;
    let names: Vec<String> = moment_names(n_max);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    f.select(&refs)
}

/// SPADE information about the source size, from the exact scene coherence.
pub fn spade_fim_size(scene: &SourceScene, basis: &SpadeBasis, n_copies: usize) -> Result<FisherMatrix> {
    fim_discrete(&spade_scene_distribution(scene, basis)?, n_copies)
}

/// Scene parameters for Gaussian-measurement information.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneParams {
    /// Source size `L` at fixed relative layout.
    Size,
    /// Moments `t_1..t_n` of the exact scene.
    Moments(usize),
}

fn scene_param_names(params: SceneParams) -> Vec<String> {
    match params {
        SceneParams::Size => vec!["L".into()],
        SceneParams::Moments(n) => moment_names(n),
    }
}

/// Real mode-space `Γ` and `∂Γ` for the scene parameters over all grid modes.
fn grid_coherence(scene: &SourceScene, params: SceneParams) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
    let gamma = scene_coherence(scene).matrix().map(|z| z.re);
    let d = match params {
        SceneParams::Size => vec![scene_coherence_dsize(scene)],
        SceneParams::Moments(n) => {
            let dv = derivative_vectors(scene.psf(), scene.grid(), scene.y0(), scene.size(), n)?;
            (1..=n).map(|k| super::expansion::gamma_moment_derivative(&dv, scene.eps(), k)).collect::<Result<_>>()?
        }
    };
    Ok((gamma, d))
}

fn quadrature_block(a: &DMatrix<f64>) -> DMatrix<f64> {
    let w = a.nrows();
    let mut out = DMatrix::zeros(2 * w, 2 * w);
    out.view_mut((0, 0), (w, w)).copy_from(a);
    out.view_mut((w, w), (w, w)).copy_from(a);
    out
}

/// Gaussian-measurement information for a measurement on all `W` grid modes,
/// with `V = I/2 + I₂ ⊗ Γ`.
pub fn gaussian_measurement_fim_scene(
    scene: &SourceScene,
    meas: &GaussianMeasurement,
    params: SceneParams,
    n_copies: usize,
) -> Result<FisherMatrix> {
    let w = scene.grid().len();
    if meas.modes() != w {
        return Err(Error::Dimension { context: "grid measurement modes", expected: w, got: meas.modes() });
    }
    let (gamma, d) = grid_coherence(scene, params)?;
    let v = DMatrix::identity(2 * w, 2 * w) * 0.5 + quadrature_block(&gamma);
    let (_, c) = meas.outcome_moments(&DVector::zeros(2 * w), &v)?;
    let dc: Vec<DMatrix<f64>> = d.iter().map(|x| meas.project_derivative(&quadrature_block(x))).collect::<Result<_>>()?;
    let names = scene_param_names(params);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    fim_gaussian(&c, &dc, &refs, n_copies)
}

/// Scene coherence written in an orthonormal basis of the modes it occupies.
/// Every mode outside that span is vacuum and independent of the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedScene {
    pub params: Vec<String>,
    pub gamma: DMatrix<f64>,
    pub dgamma: Vec<DMatrix<f64>>,
}

impl ReducedScene {
    pub fn modes(&self) -> usize {
        self.gamma.nrows()
    }

    /// Blocked covariance and derivatives with `extra` vacuum modes appended,
    /// for `copies` independent copies.
    pub fn covariance(&self, extra: usize, copies: usize) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
        let r = self.modes();
        let m = r + extra;
        let embed = |a: &DMatrix<f64>| {
            let mut out = DMatrix::zeros(2 * m, 2 * m);
            out.view_mut((0, 0), (r, r)).copy_from(a);
            out.view_mut((m, m), (r, r)).copy_from(a);
            out
        };
        let v = DMatrix::identity(2 * m, 2 * m) * 0.5 + embed(&self.gamma);
        let v = copies_of_matrix(&v, copies);
        let d = self.dgamma.iter().map(|x| copies_of_matrix(&embed(x), copies)).collect();
        (v, d)
    }

    /// Information under `meas`, which must act on `(modes + extra)·copies`
    /// modes.
    pub fn fim_under(&self, meas: &GaussianMeasurement, extra: usize, copies: usize) -> Result<FisherMatrix> {
        let (v, d) = self.covariance(extra, copies);
        let (_, c) = meas.outcome_moments(&DVector::zeros(v.nrows()), &v)?;
        let dc: Vec<DMatrix<f64>> = d.iter().map(|x| meas.project_derivative(x)).collect::<Result<_>>()?;
        let refs: Vec<&str> = self.params.iter().map(String::as_str).collect();
        fim_gaussian(&c, &dc, &refs, 1)
    }

    /// Heterodyne on every mode.
    pub fn heterodyne_fim(&self, n_copies: usize) -> Result<FisherMatrix> {
        let r = self.modes();
        let c = DMatrix::identity(r, r) + &self.gamma;
        let refs: Vec<&str> = self.params.iter().map(String::as_str).collect();
        // x and p blocks carry identical information
        let f = fim_gaussian(&c, &self.dgamma, &refs, n_copies)?;
        FisherMatrix::new(self.params.clone(), f.matrix() * 2.0, n_copies)
    }

    /// Homodyne of every x quadrature.
    pub fn homodyne_x_fim(&self, n_copies: usize) -> Result<FisherMatrix> {
        let r = self.modes();
        let c = DMatrix::identity(r, r) * 0.5 + &self.gamma;
        let refs: Vec<&str> = self.params.iter().map(String::as_str).collect();
        fim_gaussian(&c, &self.dgamma, &refs, n_copies)
    }
}

fn project(q: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    q.transpose() * v
}

/// Exact reduction of the scene: the span of the point images and their
/// parameter derivatives.
pub fn reduced_scene(scene: &SourceScene, params: SceneParams) -> Result<ReducedScene> {
    let (u, du) = scene.weighted_factors();
    let eps = scene.eps();
    match params {
        SceneParams::Size => {
            let all: Vec<&DVector<f64>> = u.iter().chain(du.iter()).collect();
            let q = orthonormal_span(&all, SPAN_TOL);
            let r = q.ncols();
            let mut gamma = DMatrix::zeros(r, r);
            let mut d = DMatrix::zeros(r, r);
            for (a, b) in u.iter().zip(&du) {
                let (pa, pb) = (project(&q, a), project(&q, b));
                gamma += &pa * pa.transpose();
                d += &pb * pa.transpose() + &pa * pb.transpose();
            }
            Ok(ReducedScene { params: vec!["L".into()], gamma, dgamma: vec![d] })
        }
        SceneParams::Moments(n) => {
            let dv = derivative_vectors(scene.psf(), scene.grid(), scene.y0(), scene.size(), n)?;
            let modes: Vec<DVector<f64>> = (0..=n).map(|k| dv.mode(k)).collect();
            let all: Vec<&DVector<f64>> = modes.iter().chain(u.iter()).collect();
            let q = orthonormal_span(&all, SPAN_TOL);
            let r = q.ncols();
            let mut gamma = DMatrix::zeros(r, r);
            for a in &u {
                let pa = project(&q, a);
                gamma += &pa * pa.transpose();
            }
            let pm: Vec<DVector<f64>> = modes.iter().map(|m| project(&q, m)).collect();
            let dgamma = (1..=n)
                .map(|k| {
                    let mut d = DMatrix::zeros(r, r);
                    for m in 0..=k {
                        d += &pm[m] * pm[k - m].transpose() * eps;
                    }
                    d
                })
                .collect();
            Ok(ReducedScene { params: moment_names(n), gamma, dgamma })
        }
    }
}

/// `Γ = ε Σ_{m,n ≤ K} t_{m+n} ω⁽ᵐ⁾ω⁽ⁿ⁾ᵀ` in the SPADE basis `b_0..b_K`, with
/// single-parameter derivatives `∂Γ/∂t_k` for each `k` in `orders`.
pub fn reduced_moment_expansion(t: &MomentVector, basis: &SpadeBasis, eps: f64, orders: &[usize]) -> Result<ReducedScene> {
    let k = basis.order();
    let a = basis.a_coeffs().rows(0, k + 1).into_owned();
    let h = t.hankel(k)?;
    let gamma = a.transpose() * h * &a * eps;
    let rows: Vec<DVector<f64>> = (0..=k).map(|m| a.row(m).transpose()).collect();
    let mut dgamma = Vec::new();
    for &n in orders {
        if n > k {
            return Err(Error::Dimension { context: "moment order vs SPADE basis", expected: n, got: k });
        }
        let mut d = DMatrix::zeros(k + 1, k + 1);
        for m in 0..=n {
            d += &rows[m] * rows[n - m].transpose() * eps;
        }
        dgamma.push(d);
    }
    Ok(ReducedScene { params: orders.iter().map(|n| format!("t{n}")).collect(), gamma, dgamma })
}

/// Norms `‖ω⁽ⁿ⁾‖` at the scene's size, for the moment bounds.
pub fn scene_derivative_vectors(scene: &SourceScene, n_max: usize) -> Result<DerivativeVectors> {
    derivative_vectors(scene.psf(), scene.grid(), scene.y0(), scene.size(), n_max)
}

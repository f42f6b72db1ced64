//! Incoherent point-source scenes imaged through a single lens.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::expansion::MomentVector;
use super::psf::{Grid, GridSpec, Psf, PsfSpec};
use crate::error::{Error, Result};
use crate::gstate::CoherenceMatrix;
use crate::linalg::Complex64;

const WEIGHT_TOL: f64 = 1e-12;
const NORMALIZATION_TOL: f64 = 1e-6;

/// Point sources `y_i = y0 + L s_i` with intensities ζ_i, `|s_i| ≤ 1/2`.
#[derive(Debug, Clone)]
pub struct SourceScene {
    offsets: Vec<f64>,
    weights: Vec<f64>,
    y0: f64,
    size: f64,
    eps: f64,
    psf: Psf,
    grid: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub y0: f64,
    pub size: f64,
    pub eps: f64,
    pub psf: PsfSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

impl SceneSpec {
    pub fn build(&self) -> Result<SourceScene> {
        let psf = Psf::from_spec(self.psf)?;
        let grid = match self.grid {
            Some(spec) => Grid::from_spec(spec, self.y0)?,
            None => Grid::for_psf(&psf, self.y0, self.size),
        };
        SourceScene::new(self.points.clone(), self.weights.clone(), self.y0, self.size, self.eps, psf, grid)
    }
}

impl SourceScene {
    pub fn new(
        points: Vec<f64>,
        weights: Vec<f64>,
        y0: f64,
        size: f64,
        eps: f64,
        psf: Psf,
        grid: Grid,
    ) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::Validation("scene needs one weight per point and at least one point".into()));
        }
        if !(size >= 0.0) || !size.is_finite() {
            return Err(Error::Domain(format!("source size must be nonnegative, got {size}")));
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Domain(format!("mean photon number must be positive, got {eps}")));
        }
        if let Some(z) = weights.iter().find(|z| !(**z >= 0.0)) {
            return Err(Error::Validation(format!("negative source weight {z}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Validation(format!("source weights sum to {total}, not 1")));
        }
        let mut offsets = Vec::with_capacity(points.len());
        for &y in &points {
            let d = y - y0;
            if d.abs() > size / 2.0 * (1.0 + 1e-12) + 1e-15 {
                return Err(Error::Validation(format!("point {y} lies outside y0 ± L/2")));
            }
            offsets.push(if size > 0.0 { (d / size).clamp(-0.5, 0.5) } else { 0.0 });
        }
        let psi = psf.sample(&grid, y0);
        let norm = grid.norm_sq(&psi);
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Validation(format!("PSF not normalized on grid (‖ψ‖² = {norm})")));
        }
        Ok(Self { offsets, weights, y0, size, eps, psf, grid })
    }

    /// Two equal-intensity points at `±L/2` about zero, on the default grid.
    pub fn two_point(eps: f64, size: f64, psf: Psf) -> Result<Self> {
        let grid = Grid::for_psf(&psf, 0.0, size);
        Self::two_point_on(eps, size, psf, grid)
    }

    pub fn two_point_on(eps: f64, size: f64, psf: Psf, grid: Grid) -> Result<Self> {
        Self::new(vec![-size / 2.0, size / 2.0], vec![0.5, 0.5], 0.0, size, eps, psf, grid)
    }

    /// Same relative layout at a different size, on the same grid.
    pub fn with_size(&self, size: f64) -> Result<Self> {
        if !(size >= 0.0) {
            return Err(Error::Domain(format!("source size must be nonnegative, got {size}")));
        }
        let mut s = self.clone();
        s.size = size;
        Ok(s)
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("mean photon number must be positive, got {eps}")));
        }
        let mut s = self.clone();
        s.eps = eps;
        Ok(s)
    }

    pub fn points(&self) -> Vec<f64> {
        self.offsets.iter().map(|s| self.y0 + self.size * s).collect()
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn psf(&self) -> &Psf {
        &self.psf
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn moments(&self, n_max: usize) -> MomentVector {
        MomentVector::from_offsets(&self.offsets, &self.weights, n_max)
    }

    /// Mode-space images `√w ψ(x - y_i)` of each point.
    pub fn point_modes(&self) -> Vec<DVector<f64>> {
        self.points().iter().map(|&y| self.grid.to_modes(&self.psf.sample(&self.grid, y))).collect()
    }

    /// `∂/∂L` of each point image, `s_i ∂ψ(x - y)/∂y`.
    pub fn point_modes_dsize(&self) -> Vec<DVector<f64>> {
        self.points()
            .iter()
            .zip(&self.offsets)
            .map(|(&y, &s)| self.grid.to_modes(&self.psf.sample_shift_derivative(&self.grid, y, 1)) * s)
            .collect()
    }

    /// `(√(εζ_i) ψ_i, √(εζ_i) ∂_L ψ_i)` so that `Γ = Σ u uᵀ`.
    pub(crate) fn weighted_factors(&self) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
        let scale: Vec<f64> = self.weights.iter().map(|z| (self.eps * z).sqrt()).collect();
        let u = self.point_modes().into_iter().zip(&scale).map(|(v, c)| v * *c).collect();
        let du = self.point_modes_dsize().into_iter().zip(&scale).map(|(v, c)| v * *c).collect();
        (u, du)
    }
}

/// `Γ = Σ ε ζ_i ψ_i ψ_iᵀ` over the grid modes.
pub fn scene_coherence(scene: &SourceScene) -> CoherenceMatrix {
    let w = scene.grid.len();
    let (u, _) = scene.weighted_factors();
    let mut g = DMatrix::<f64>::zeros(w, w);
    for v in &u {
        g.ger(1.0, v, v, 1.0);
    }
    CoherenceMatrix::trusted(g.map(|x| Complex64::new(x, 0.0)))
}

/// `∂Γ/∂L` over the grid modes.
pub fn scene_coherence_dsize(scene: &SourceScene) -> DMatrix<f64> {
    let w = scene.grid.len();
    let (u, du) = scene.weighted_factors();
    let mut g = DMatrix::<f64>::zeros(w, w);
    for (v, dv) in u.iter().zip(&du) {
        g.ger(1.0, dv, v, 1.0);
        g.ger(1.0, v, dv, 1.0);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn psf() -> Psf {
        Psf::gaussian(1.0).unwrap()
    }

    #[test]
    fn single_point_is_rank_one() {
        let grid = Grid::for_psf(&psf(), 0.0, 0.1);
        let s = SourceScene::new(vec![0.0], vec![1.0], 0.0, 0.1, 0.2, psf(), grid).unwrap();
        let g = scene_coherence(&s);
        let ev = crate::linalg::sym_eigenvalues(&g.matrix().map(|z| z.re));
        assert_relative_eq!(ev[ev.len() - 1], 0.2, max_relative = 1e-10);
        assert!(ev[ev.len() - 2].abs() < 1e-14);
    }

    #[test]
    fn two_point_matches_sum_of_outer_products() {
        let s = SourceScene::two_point(0.3, 0.2, psf()).unwrap();
        let g = scene_coherence(&s);
        let p = s.point_modes();
        let expect = (&p[0] * p[0].transpose() + &p[1] * p[1].transpose()) * 0.15;
        assert!((g.matrix().map(|z| z.re) - expect).abs().max() < 1e-16);
        assert_relative_eq!(g.trace(), 0.3, max_relative = 1e-8);
    }

    #[test]
    fn dsize_matches_finite_difference() {
        let s = SourceScene::two_point(0.1, 0.3, psf()).unwrap();
        let h = 1e-5;
        let gp = scene_coherence(&s.with_size(0.3 + h).unwrap()).matrix().map(|z| z.re);
        let gm = scene_coherence(&s.with_size(0.3 - h).unwrap()).matrix().map(|z| z.re);
        let fd = (gp - gm) / (2.0 * h);
        let an = scene_coherence_dsize(&s);
        assert!((fd - &an).abs().max() < 1e-9 * an.abs().max());
    }

    #[test]
    fn scene_validation() {
        let grid = Grid::for_psf(&psf(), 0.0, 0.1);
        assert!(SourceScene::new(vec![0.2], vec![1.0], 0.0, 0.1, 0.1, psf(), grid.clone()).is_err());
        assert!(SourceScene::new(vec![0.0, 0.0], vec![0.6, 0.6], 0.0, 0.1, 0.1, psf(), grid.clone()).is_err());
        let narrow = Grid::uniform(0.0, 1.0, 801).unwrap();
        assert!(SourceScene::new(vec![0.0], vec![1.0], 0.0, 0.1, 0.1, psf(), narrow).is_err());
        let spec: SceneSpec = serde_json::from_str(
            r#"{"points":[-0.05,0.05],"weights":[0.5,0.5],"size":0.1,"eps":0.1,"psf":{"kind":"gaussian","sigma":1.0}}"#,
        )
        .unwrap();
        assert_eq!(spec.build().unwrap().points(), vec![-0.05, 0.05]);
    }
}

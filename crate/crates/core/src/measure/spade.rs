use nalgebra::{DMatrix, DVector};

use super::{DiscreteDistribution, Provenance};
use crate::error::{Error, Result};
use crate::superres::expansion::{derivative_vectors, MomentVector};
use crate::superres::psf::{Grid, Psf};
use crate::superres::scene::SourceScene;

/// Gram–Schmidt pivot tolerance relative to the input vector norm.
pub const GS_PIVOT_TOL: f64 = 1e-10;
/// Expansion terms kept beyond the basis order when forming probabilities.
const EXTRA_TERMS: usize = 2;

/// Orthonormal modes `b_0..b_K` from Gram–Schmidt on the PSF derivatives, and
/// the overlaps `a_ml = ⟨ω⁽ᵐ⁾|b_l⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpadeBasis {
    grid: Grid,
    b: Vec<Vec<f64>>,
    a: DMatrix<f64>,
    requested: usize,
    y0: f64,
    size: f64,
}

impl SpadeBasis {
    /// Highest basis index actually built.
    pub fn order(&self) -> usize {
        self.b.len() - 1
    }

    pub fn requested_order(&self) -> usize {
        self.requested
    }

    pub fn is_truncated(&self) -> bool {
        self.order() < self.requested
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn b(&self, l: usize) -> &[f64] {
        &self.b[l]
    }

    pub fn b_modes(&self) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = self.b.iter().map(|v| self.grid.to_modes(v)).collect();
        DMatrix::from_columns(&cols)
    }

    /// `a[(m, l)] = ⟨ω⁽ᵐ⁾|b_l⟩` for `m ≤ expansion_order()`.
    pub fn a_coeffs(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn expansion_order(&self) -> usize {
        self.a.nrows() - 1
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn size(&self) -> f64 {
        self.size
    }

    /// `max |⟨b_i|b_j⟩ - δ_ij|` under grid quadrature.
    pub fn orthonormality_residual(&self) -> f64 {
        let k = self.b.len();
        let mut r: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                let d = if i == j { 1.0 } else { 0.0 };
                r = r.max((self.grid.inner(&self.b[i], &self.b[j]) - d).abs());
            }
        }
        r
    }

    /// Measurement vectors in outcome order: `φ_{i,±}` for `i < order`, then `b_0`.
    fn outcomes(&self) -> Vec<(String, Vec<f64>)> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut out = Vec::new();
        for i in 0..self.order() {
            for (sgn, tag) in [(1.0, '+'), (-1.0, '-')] {
                let v = self.b[i].iter().zip(&self.b[i + 1]).map(|(x, y)| r * (x + sgn * y)).collect();
                out.push((format!("phi{i}{tag}"), v));
            }
        }
        out.push(("b0".into(), self.b[0].clone()));
        out
    }
}

pub fn spade_basis(psf: &Psf, grid: &Grid, y0: f64, size: f64, k_max: usize) -> Result<SpadeBasis> {
    if k_max < 1 {
        return Err(Error::Validation("SPADE basis needs k_max ≥ 1".into()));
    }
    let psi = psf.sample(grid, y0);
    let norm = grid.norm_sq(&psi);
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Validation(format!("PSF not normalized on grid (‖ψ‖² = {norm})")));
    }
    // Directions do not depend on L, so build them from unit-size derivatives.
    let unit = derivative_vectors(psf, grid, y0, 1.0, k_max)?;
    let mut b: Vec<Vec<f64>> = Vec::new();
    for m in 0..=k_max {
        let mut v = unit.omega(m).to_vec();
        let scale = unit.norm(m);
        for _ in 0..2 {
            for bl in &b {
                let c = grid.inner(&v, bl);
                v.iter_mut().zip(bl).for_each(|(x, y)| *x -= c * y);
            }
        }
        let r = grid.norm_sq(&v).sqrt();
        if !(r > GS_PIVOT_TOL * scale) {
            break;
        }
        // sign so that a_mm > 0
        let sgn = if grid.inner(&v, unit.omega(m)) >= 0.0 { 1.0 } else { -1.0 };
        b.push(v.into_iter().map(|x| sgn * x / r).collect());
    }
    let terms = b.len() - 1 + EXTRA_TERMS;
    let dv = derivative_vectors(psf, grid, y0, size, terms)?;
    let a = DMatrix::from_fn(terms + 1, b.len(), |m, l| {
        if m < l {
            0.0
        } else {
            grid.inner(dv.omega(m), &b[l])
        }
    });
    Ok(SpadeBasis { grid: grid.clone(), b, a, requested: k_max, y0, size })
}

fn finish(
    eps: f64,
    labels: Vec<String>,
    mut probs: Vec<f64>,
    params: Vec<String>,
    mut dprobs: Vec<Vec<f64>>,
    provenance: Provenance,
) -> Result<DiscreteDistribution> {
    let captured: f64 = probs.iter().sum();
    let rest = eps - captured;
    if rest < -1e-10 {
        return Err(Error::Numerical(format!(
            "SPADE outcomes capture {captured} > ε = {eps}; inconsistent moments"
        )));
    }
    if let Some(p) = probs.iter().find(|p| **p < -1e-10) {
        return Err(Error::Numerical(format!("negative SPADE probability {p:.3e}")));
    }
    let mut labels = labels;
    labels.push("rest".into());
    labels.push("vac".into());
    probs.push(rest.max(0.0));
    probs.push(1.0 - eps);
    for d in &mut dprobs {
        let s: f64 = d.iter().sum();
        d.push(-s);
        d.push(0.0);
    }
    DiscreteDistribution::new(labels, probs, params, dprobs, provenance)
}

/// Single-photon SPADE statistics from the moment expansion
/// `Γ = ε Σ_{m,n ≤ K} t_{m+n} ω⁽ᵐ⁾ω⁽ⁿ⁾ᵀ`. Parameters are `t_1..t_{2K}`.
pub fn spade_outcome_distribution(t: &MomentVector, eps: f64, basis: &SpadeBasis) -> Result<DiscreteDistribution> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("ε must lie in (0, 1], got {eps}")));
    }
    let k = basis.expansion_order();
    let h = t.hankel(k)?;
    let a = basis.a_coeffs();
    let mut labels = Vec::new();
    let mut probs = Vec::new();
    let n_par = 2 * k;
    let mut dprobs = vec![Vec::new(); n_par];
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let coeffs = |label_idx: Option<usize>| -> DVector<f64> {
        match label_idx {
            Some(c) => {
                let (i, sgn) = (c / 2, if c % 2 == 0 { 1.0 } else { -1.0 });
                DVector::from_fn(k + 1, |m, _| r * (a[(m, i)] + sgn * a[(m, i + 1)]))
            }
            None => DVector::from_fn(k + 1, |m, _| a[(m, 0)]),
        }
    };
    let n_phi = 2 * basis.order();
    for c in 0..=n_phi {
        let (label, cv) = if c < n_phi {
            (format!("phi{}{}", c / 2, if c % 2 == 0 { '+' } else { '-' }), coeffs(Some(c)))
        } else {
            ("b0".to_string(), coeffs(None))
        };
        labels.push(label);
        probs.push(0.5 * eps * (cv.transpose() * &h * &cv)[(0, 0)]);
        for (kk, d) in dprobs.iter_mut().enumerate() {
            let deg = kk + 1;
            let s: f64 = (0..=deg).filter(|&m| m <= k && deg - m <= k).map(|m| cv[m] * cv[deg - m]).sum();
            d.push(0.5 * eps * s);
        }
    }
    let params = (1..=n_par).map(|n| format!("t{n}")).collect();
    finish(
        eps,
        labels,
        probs,
        params,
        dprobs,
        Provenance::new("spade_outcome_distribution", &[("eps", eps), ("L", basis.size()), ("k_max", basis.order() as f64)]),
    )
}

/// SPADE statistics of the exact scene coherence, with the source size `L` as
/// the parameter.
pub fn spade_scene_distribution(scene: &SourceScene, basis: &SpadeBasis) -> Result<DiscreteDistribution> {
    if basis.grid() != scene.grid() {
        return Err(Error::Validation("SPADE basis and scene use different grids".into()));
    }
    let grid = scene.grid();
    let images: Vec<Vec<f64>> = scene.points().iter().map(|&y| scene.psf().sample(grid, y)).collect();
    let dimages: Vec<Vec<f64>> = scene
        .points()
        .iter()
        .zip(scene.offsets())
        .map(|(&y, &s)| scene.psf().sample_shift_derivative(grid, y, 1).into_iter().map(|v| s * v).collect())
        .collect();
    let eps = scene.eps();
    let mut labels = Vec::new();
    let mut probs = Vec::new();
    let mut dp = Vec::new();
    for (label, v) in basis.outcomes() {
        let mut p = 0.0;
        let mut d = 0.0;
        for ((img, dimg), z) in images.iter().zip(&dimages).zip(scene.weights()) {
            let c = grid.inner(&v, img);
            let dc = grid.inner(&v, dimg);
            p += eps * z * c * c;
            d += 2.0 * eps * z * c * dc;
        }
        labels.push(label);
        probs.push(0.5 * p);
        dp.push(0.5 * d);
    }
    finish(
        eps,
        labels,
        probs,
        vec!["L".into()],
        vec![dp],
        Provenance::new("spade_scene_distribution", &[("eps", eps), ("L", scene.size()), ("k_max", basis.order() as f64)]),
    )
}

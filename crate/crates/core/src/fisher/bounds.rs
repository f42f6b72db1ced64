use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{FisherMatrix, RANK_TOL};
use crate::error::{Error, Result};
use crate::gstate::check_two_lens;
use crate::linalg::{sym_eigenvalues, Complex64};

/// Upper bound on `|F[row, col]|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementBound {
    pub row: String,
    pub col: String,
    pub bound: f64,
}

/// Element bounds plus an optional bound `F ⪯ c I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub label: String,
    pub elements: Vec<ElementBound>,
    pub matrix_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub row: String,
    pub col: String,
    pub value: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixBoundRow {
    pub max_eigenvalue: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub label: String,
    pub tolerance: f64,
    pub rows: Vec<BoundRow>,
    pub matrix: Option<MatrixBoundRow>,
    pub all_pass: bool,
}

impl BoundSet {
    pub fn element(&self, row: &str, col: &str) -> Option<f64> {
        self.elements
            .iter()
            .find(|e| (e.row == row && e.col == col) || (e.row == col && e.col == row))
            .map(|e| e.bound)
    }

    /// Compares `fim` against every bound, allowing `tol` absolute excess.
    pub fn evaluate(&self, fim: &FisherMatrix, tol: f64) -> Result<BoundReport> {
        let mut rows = Vec::with_capacity(self.elements.len());
        for e in &self.elements {
            let value = fim
                .element(&e.row, &e.col)
                .ok_or_else(|| Error::Validation(format!("Fisher matrix lacks element ({}, {})", e.row, e.col)))?;
            let magnitude = if e.row == e.col { value } else { value.abs() };
            rows.push(BoundRow {
                row: e.row.clone(),
                col: e.col.clone(),
                value,
                bound: e.bound,
                slack: e.bound - magnitude,
                pass: magnitude <= e.bound + tol,
                label: self.label.clone(),
            });
        }
        let matrix = self.matrix_bound.map(|c| {
            let top = fim.max_eigenvalue();
            MatrixBoundRow { max_eigenvalue: top, bound: c, slack: c - top, pass: top <= c + tol }
        });
        let all_pass = rows.iter().all(|r| r.pass) && matrix.as_ref().is_none_or(|m| m.pass);
        Ok(BoundReport { label: self.label.clone(), tolerance: tol, rows, matrix, all_pass })
    }
}

impl BoundReport {
    pub const CSV_HEADER: &'static str = "label,row,col,value,bound,slack,pass";

    /// One line per element, plus a `lambda_max` line for the matrix bound.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{:.16e},{:.16e},{:.16e},{}", r.label, r.row, r.col, r.value, r.bound, r.slack, r.pass);
        }
        if let Some(m) = &self.matrix {
            let _ = writeln!(
                out,
                "{},lambda_max,lambda_max,{:.16e},{:.16e},{:.16e},{}",
                self.label, m.max_eigenvalue, m.bound, m.slack, m.pass
            );
        }
        out
    }

    pub fn min_slack(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.slack)
            .chain(self.matrix.iter().map(|m| m.slack))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Two-lens bounds for any Gaussian measurement on `N` copies:
/// `F_{|g||g|} ≤ 2Nε²`, `F_θθ ≤ 2Nε²|g|²`, `|F_{θ|g|}| ≤ 2Nε²|g|`,
/// and `F ⪯ 2Nε²(1 + |g|²) I`.
pub fn theorem1_bounds(eps: f64, g_abs: f64, n: usize) -> Result<BoundSet> {
    check_two_lens(eps, g_abs)?;
    let base = 2.0 * n as f64 * eps * eps;
    let e = |r: &str, c: &str, b: f64| ElementBound { row: r.into(), col: c.into(), bound: b };
    Ok(BoundSet {
        label: "two_lens_gaussian".into(),
        elements: vec![
            e("|g|", "|g|", base),
            e("theta", "theta", base * g_abs * g_abs),
            e("theta", "|g|", base * g_abs),
        ],
        matrix_bound: Some(base * (1.0 + g_abs * g_abs)),
    })
}

/// Parameter names `|g_ij|`, `theta_ij` for `i < j`, in the order used by
/// [`crate::gstate::multi_lens_derivatives`].
pub fn multi_lens_param_names(m: usize) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            out.push(format!("|g_{i}{j}|"));
            out.push(format!("theta_{i}{j}"));
        }
    }
    out
}

/// M-lens bounds: `F_{|g_ij||g_ij|} ≤ 2Nε²`, `F_{θ_ij θ_ij} ≤ 2Nε²|g_ij|²`,
/// off-diagonal elements by Cauchy–Schwarz, and `F ⪯ 2M(M-1)Nε² I`.
pub fn multi_lens_bounds(eps: f64, g: &DMatrix<Complex64>, n: usize) -> Result<BoundSet> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("mean photon number must be positive, got {eps}")));
    }
    if !g.is_square() {
        return Err(Error::Validation("coherence function matrix must be square".into()));
    }
    let m = g.nrows();
    let base = 2.0 * n as f64 * eps * eps;
    let names = multi_lens_param_names(m);
    let mut diag = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            let a = g[(i, j)].norm();
            diag.push(base);
            diag.push(base * a * a);
        }
    }
    let mut elements = Vec::new();
    for a in 0..names.len() {
        for b in a..names.len() {
            elements.push(ElementBound { row: names[b].clone(), col: names[a].clone(), bound: (diag[a] * diag[b]).sqrt() });
        }
    }
    Ok(BoundSet {
        label: "multi_lens_gaussian".into(),
        elements,
        matrix_bound: Some(base * (m * (m - 1)) as f64),
    })
}

/// `max_i |λ_i(G_∂)|² · rank(G_∂) · 2N` for a real symmetric derivative of the
/// coherence block.
pub fn single_lens_gaussian_bound(g_dtheta: &DMatrix<f64>, n: usize) -> f64 {
    let ev = sym_eigenvalues(g_dtheta);
    bound_from_eigenvalues(&ev, n)
}

fn bound_from_eigenvalues(ev: &[f64], n: usize) -> f64 {
    let top = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if top == 0.0 {
        return 0.0;
    }
    let rank = ev.iter().filter(|v| v.abs() > RANK_TOL * top).count();
    top * top * rank as f64 * 2.0 * n as f64
}

/// [`single_lens_gaussian_bound`] for `G_∂ = I₂ ⊗ Σ_k (u_k v_kᵀ + v_k u_kᵀ)`,
/// evaluated in the span of the factors.
pub fn single_lens_gaussian_bound_low_rank(u: &[DVector<f64>], v: &[DVector<f64>], n: usize) -> f64 {
    let vecs: Vec<&DVector<f64>> = u.iter().chain(v.iter()).collect();
    let q = crate::linalg::orthonormal_span(&vecs, 1e-13);
    if q.ncols() == 0 {
        return 0.0;
    }
    let mut small = DMatrix::<f64>::zeros(q.ncols(), q.ncols());
    for (a, b) in u.iter().zip(v) {
        let qa = q.transpose() * a;
        let qb = q.transpose() * b;
        small += &qa * qb.transpose() + &qb * qa.transpose();
    }
    let ev = sym_eigenvalues(&small);
    // each eigenvalue appears twice, once in the x block and once in the p block
    let doubled: Vec<f64> = ev.iter().flat_map(|&x| [x, x]).collect();
    bound_from_eigenvalues(&doubled, n)
}

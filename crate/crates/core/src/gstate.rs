//! Gaussian states of thermal imaging light.
//!
//! States are stored in the all-x-then-all-p quadrature ordering
//! `(x_1..x_M, p_1..p_M)` with ħ = 1, so the vacuum covariance is `I/2`.
//! [`QuadratureOrdering::Interleaved`] gives the `(x_1, p_1, x_2, p_2, ..)`
//! view used for the two-lens covariance.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{dim_check, Error, Result};
use crate::linalg::{anti_hermiticity, asymmetry, herm_eigenvalues, realify, Complex64};

/// Absolute tolerance on `Γ - Γ†` and `V - Vᵀ`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-10;
/// Tolerance on `S Ω Sᵀ - Ω`.
pub const SYMPLECTIC_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadratureOrdering {
    /// `(x_1, .., x_M, p_1, .., p_M)`; the internal ordering.
    #[serde(rename = "xxpp")]
    Blocked,
    /// `(x_1, p_1, .., x_M, p_M)`.
    #[serde(rename = "xpxp")]
    Interleaved,
}

/// `perm[k]` is the blocked index of the `k`-th interleaved quadrature.
pub fn interleaved_to_blocked(modes: usize) -> Vec<usize> {
    (0..2 * modes)
        .map(|k| if k % 2 == 0 { k / 2 } else { modes + k / 2 })
        .collect()
}

/// Symplectic form for the blocked ordering, `[[0, I], [-I, 0]]`.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for i in 0..modes {
        omega[(i, modes + i)] = 1.0;
        omega[(modes + i, i)] = -1.0;
    }
    omega
}

/// Mutual coherence matrix Γ of a thermal field in a set of spatial modes,
/// in photons per temporal mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceMatrix {
    gamma: DMatrix<Complex64>,
}

impl CoherenceMatrix {
    pub fn new(gamma: DMatrix<Complex64>) -> Result<Self> {
        if !gamma.is_square() {
            return Err(Error::Validation("coherence matrix must be square".into()));
        }
        let herm = anti_hermiticity(&gamma);
        if herm > HERMITIAN_TOL {
            return Err(Error::Validation(format!(
                "coherence matrix not Hermitian (residual {herm:.3e})"
            )));
        }
        let min_ev = herm_eigenvalues(&gamma).first().copied().unwrap_or(0.0);
        if min_ev < -PSD_TOL {
            return Err(Error::Validation(format!(
                "coherence matrix not positive semidefinite (min eigenvalue {min_ev:.3e})"
            )));
        }
        Ok(Self { gamma })
    }

    /// Skips validation for matrices that are Hermitian PSD by construction.
    pub(crate) fn trusted(gamma: DMatrix<Complex64>) -> Self {
        Self { gamma }
    }

    pub fn from_real(gamma: DMatrix<f64>) -> Result<Self> {
        Self::new(gamma.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn zeros(modes: usize) -> Self {
        Self { gamma: DMatrix::zeros(modes, modes) }
    }

    pub fn modes(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.gamma
    }

    /// Total mean photon number per temporal mode.
    pub fn trace(&self) -> f64 {
        self.gamma.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        herm_eigenvalues(&self.gamma).first().copied().unwrap_or(0.0)
    }

    /// The real block `[[ReΓ, -ImΓ], [ImΓ, ReΓ]]` that adds to the vacuum
    /// covariance.
    pub fn quadrature_block(&self) -> DMatrix<f64> {
        realify(&self.gamma)
    }

    /// Whether every entry has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.gamma.iter().all(|z| z.im == 0.0)
    }
}

/// Zero-mean-or-displaced Gaussian state over `2M` quadratures.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mu: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state from blocked-order moments. Checks shape and symmetry
    /// only; use [`validate_state`] or [`GaussianState::new_physical`] for the
    /// uncertainty principle.
    pub fn new(mu: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if !cov.is_square() || !cov.nrows().is_multiple_of(2) {
            return Err(Error::Validation("covariance must be square with even size".into()));
        }
        dim_check("state displacement", cov.nrows(), mu.len())?;
        let asym = asymmetry(&cov);
        if asym > HERMITIAN_TOL {
            return Err(Error::Validation(format!(
                "covariance not symmetric (residual {asym:.3e})"
            )));
        }
        Ok(Self { mu, cov })
    }

    pub fn new_physical(mu: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let state = Self::new(mu, cov)?;
        let diag = validate_state(&state);
        if !diag.physical {
            return Err(Error::Validation(format!(
                "state violates V + iΩ/2 ≥ 0 (min eigenvalue {:.3e})",
                diag.min_eigenvalue
            )));
        }
        Ok(state)
    }

    /// Builds a state from moments given in `ordering`.
    pub fn from_ordering(
        mu: DVector<f64>,
        cov: DMatrix<f64>,
        ordering: QuadratureOrdering,
    ) -> Result<Self> {
        match ordering {
            QuadratureOrdering::Blocked => Self::new(mu, cov),
            QuadratureOrdering::Interleaved => {
                if !cov.nrows().is_multiple_of(2) {
                    return Err(Error::Validation("covariance must have even size".into()));
                }
                let perm = interleaved_to_blocked(cov.nrows() / 2);
                let n = cov.nrows();
                let mut bmu = DVector::zeros(n);
                let mut bcov = DMatrix::zeros(n, n);
                for (k, &bk) in perm.iter().enumerate() {
                    bmu[bk] = mu[k];
                    for (l, &bl) in perm.iter().enumerate() {
                        bcov[(bk, bl)] = cov[(k, l)];
                    }
                }
                Self::new(bmu, bcov)
            }
        }
    }

    pub fn vacuum(modes: usize) -> Self {
        Self {
            mu: DVector::zeros(2 * modes),
            cov: DMatrix::identity(2 * modes, 2 * modes) * 0.5,
        }
    }

    pub fn modes(&self) -> usize {
        self.cov.nrows() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Moments permuted into `ordering`.
    pub fn in_ordering(&self, ordering: QuadratureOrdering) -> (DVector<f64>, DMatrix<f64>) {
        match ordering {
            QuadratureOrdering::Blocked => (self.mu.clone(), self.cov.clone()),
            QuadratureOrdering::Interleaved => {
                let perm = interleaved_to_blocked(self.modes());
                let n = perm.len();
                let mu = DVector::from_fn(n, |k, _| self.mu[perm[k]]);
                let cov = DMatrix::from_fn(n, n, |k, l| self.cov[(perm[k], perm[l])]);
                (mu, cov)
            }
        }
    }

    /// Independent joint state `self ⊗ other`, modes of `self` first.
    pub fn direct_sum(&self, other: &GaussianState) -> GaussianState {
        let (m1, m2) = (self.modes(), other.modes());
        let m = m1 + m2;
        let place = |mode: usize, quad: usize, first: bool| -> usize {
            let offset = if first { 0 } else { m1 };
            quad * m + offset + mode
        };
        let mut mu = DVector::zeros(2 * m);
        let mut cov = DMatrix::zeros(2 * m, 2 * m);
        for (st, first, mm) in [(self, true, m1), (other, false, m2)] {
            for qa in 0..2 {
                for a in 0..mm {
                    let ia = place(a, qa, first);
                    mu[ia] = st.mu[qa * mm + a];
                    for qb in 0..2 {
                        for b in 0..mm {
                            cov[(ia, place(b, qb, first))] = st.cov[(qa * mm + a, qb * mm + b)];
                        }
                    }
                }
            }
        }
        GaussianState { mu, cov }
    }

    /// `n` independent copies.
    pub fn copies(&self, n: usize) -> GaussianState {
        assert!(n >= 1, "need at least one copy");
        let mut out = self.clone();
        for _ in 1..n {
            out = out.direct_sum(self);
        }
        out
    }
}

/// Lifts a blocked-order matrix on `m` modes to `n` independent copies
/// (`I_n ⊗ A` expressed in the blocked ordering of `n·m` modes).
pub fn copies_of_matrix(a: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let m = a.nrows() / 2;
    let big = n * m;
    let mut out = DMatrix::zeros(2 * big, 2 * big);
    for c in 0..n {
        for qa in 0..2 {
            for i in 0..m {
                for qb in 0..2 {
                    for j in 0..m {
                        out[(qa * big + c * m + i, qb * big + c * m + j)] = a[(qa * m + i, qb * m + j)];
                    }
                }
            }
        }
    }
    out
}

/// Affine symplectic map `z ↦ S z + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticOp {
    s: DMatrix<f64>,
    d: DVector<f64>,
}

impl SymplecticOp {
    pub fn new(s: DMatrix<f64>, d: DVector<f64>) -> Result<Self> {
        if !s.is_square() || !s.nrows().is_multiple_of(2) {
            return Err(Error::Validation("symplectic matrix must be square with even size".into()));
        }
        dim_check("symplectic displacement", s.nrows(), d.len())?;
        let omega = symplectic_form(s.nrows() / 2);
        let resid = (&s * &omega * s.transpose() - &omega).abs().max();
        if resid > SYMPLECTIC_TOL {
            return Err(Error::Validation(format!(
                "S Ω Sᵀ ≠ Ω (residual {resid:.3e})"
            )));
        }
        Ok(Self { s, d })
    }

    pub fn identity(modes: usize) -> Self {
        Self {
            s: DMatrix::identity(2 * modes, 2 * modes),
            d: DVector::zeros(2 * modes),
        }
    }

    /// Passive linear optics `a ↦ U a` for a unitary `U`.
    pub fn passive(u: &DMatrix<Complex64>) -> Result<Self> {
        let n = u.nrows();
        let resid = (u * u.adjoint() - DMatrix::<Complex64>::identity(n, n)).map(|z| z.norm()).max();
        if resid > SYMPLECTIC_TOL {
            return Err(Error::Validation(format!("mode transform not unitary (residual {resid:.3e})")));
        }
        Ok(Self { s: realify(u), d: DVector::zeros(2 * n) })
    }

    /// 50:50 beam splitter `a_i ↦ (a_i + a_j)/√2`, `a_j ↦ (a_i - a_j)/√2`.
    pub fn beam_splitter(modes: usize, i: usize, j: usize) -> Self {
        assert!(i < modes && j < modes && i != j, "beam splitter needs two distinct modes");
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut u = DMatrix::<Complex64>::identity(modes, modes);
        u[(i, i)] = Complex64::new(r, 0.0);
        u[(i, j)] = Complex64::new(r, 0.0);
        u[(j, i)] = Complex64::new(r, 0.0);
        u[(j, j)] = Complex64::new(-r, 0.0);
        Self { s: realify(&u), d: DVector::zeros(2 * modes) }
    }

    /// Phase rotation `a_k ↦ e^{iφ} a_k`.
    pub fn phase_shift(modes: usize, k: usize, phi: f64) -> Self {
        assert!(k < modes, "mode index out of range");
        let mut u = DMatrix::<Complex64>::identity(modes, modes);
        u[(k, k)] = Complex64::from_polar(1.0, phi);
        Self { s: realify(&u), d: DVector::zeros(2 * modes) }
    }

    /// Single-mode squeezer `x_k ↦ e^{-r} x_k`, `p_k ↦ e^{r} p_k`.
    pub fn squeezer(modes: usize, k: usize, r: f64) -> Self {
        assert!(k < modes, "mode index out of range");
        let mut s = DMatrix::identity(2 * modes, 2 * modes);
        s[(k, k)] = (-r).exp();
        s[(modes + k, modes + k)] = r.exp();
        Self { s, d: DVector::zeros(2 * modes) }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &SymplecticOp) -> SymplecticOp {
        SymplecticOp {
            s: &next.s * &self.s,
            d: &next.s * &self.d + &next.d,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn modes(&self) -> usize {
        self.s.nrows() / 2
    }
}

/// Haar-random `n × n` unitary (QR of a complex Ginibre matrix with the phase
/// of `R`'s diagonal removed).
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::<Complex64>::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random symplectic `U₁ · Z · U₂` (Bloch–Messiah form) with per-mode
/// squeezing log-gain uniform in `[-max_log_gain, max_log_gain]`.
pub fn random_symplectic<R: Rng + ?Sized>(modes: usize, max_log_gain: f64, rng: &mut R) -> SymplecticOp {
    let u1 = SymplecticOp { s: realify(&random_unitary(modes, rng)), d: DVector::zeros(2 * modes) };
    let u2 = SymplecticOp { s: realify(&random_unitary(modes, rng)), d: DVector::zeros(2 * modes) };
    let mut z = SymplecticOp::identity(modes);
    for k in 0..modes {
        let r = if max_log_gain > 0.0 { rng.random_range(-max_log_gain..=max_log_gain) } else { 0.0 };
        z = z.then(&SymplecticOp::squeezer(modes, k, r));
    }
    u2.then(&z).then(&u1)
}

/// Diagnostics returned by [`validate_state`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateDiagnostics {
    /// Minimum eigenvalue of the Hermitian form `V + iΩ/2`.
    pub min_eigenvalue: f64,
    pub symmetry_residual: f64,
    pub symmetric: bool,
    pub physical: bool,
}

pub fn validate_state(state: &GaussianState) -> StateDiagnostics {
    let m = state.modes();
    let omega = symplectic_form(m);
    let n = 2 * m;
    let form = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
        Complex64::new(state.cov[(i, j)], 0.5 * omega[(i, j)])
    });
    let min_eigenvalue = herm_eigenvalues(&form).first().copied().unwrap_or(0.0);
    let symmetry_residual = asymmetry(&state.cov);
    let symmetric = symmetry_residual <= HERMITIAN_TOL;
    StateDiagnostics {
        min_eigenvalue,
        symmetry_residual,
        symmetric,
        physical: symmetric && min_eigenvalue >= -PSD_TOL,
    }
}

/// Zero-mean state with `V = I/2 + [[ReΓ, -ImΓ], [ImΓ, ReΓ]]`.
pub fn covariance_from_coherence(gamma: &CoherenceMatrix) -> GaussianState {
    let m = gamma.modes();
    let cov = DMatrix::identity(2 * m, 2 * m) * 0.5 + gamma.quadrature_block();
    GaussianState { mu: DVector::zeros(2 * m), cov }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!("mean photon number must be positive, got {eps}")));
    }
    Ok(())
}

pub(crate) fn check_two_lens(eps: f64, g_abs: f64) -> Result<()> {
    check_eps(eps)?;
    if !(0.0..=1.0).contains(&g_abs) {
        return Err(Error::Domain(format!("|g| must lie in [0, 1], got {g_abs}")));
    }
    Ok(())
}

/// Coherence matrix `(ε/2)[[1, g], [g*, 1]]` with `g = |g| e^{iθ}`.
pub fn two_lens_coherence(eps: f64, g_abs: f64, theta: f64) -> Result<CoherenceMatrix> {
    check_two_lens(eps, g_abs)?;
    let g = Complex64::from_polar(g_abs, theta);
    let half = Complex64::new(eps / 2.0, 0.0);
    let gamma = DMatrix::from_row_slice(2, 2, &[half, half * g, half * g.conj(), half]);
    CoherenceMatrix::new(gamma)
}

/// State received by two lenses from a weak thermal source.
pub fn two_lens_state(eps: f64, g_abs: f64, theta: f64) -> Result<GaussianState> {
    Ok(covariance_from_coherence(&two_lens_coherence(eps, g_abs, theta)?))
}

/// `∂V/∂|g|` and `∂V/∂θ` of [`two_lens_state`] in blocked ordering.
pub fn two_lens_derivatives(eps: f64, g_abs: f64, theta: f64) -> [DMatrix<f64>; 2] {
    let h = Complex64::new(eps / 2.0, 0.0);
    let dg = Complex64::from_polar(1.0, theta) * h;
    let dt = Complex64::new(0.0, 1.0) * Complex64::from_polar(g_abs, theta) * h;
    let z = Complex64::new(0.0, 0.0);
    let block = |off: Complex64| realify(&DMatrix::from_row_slice(2, 2, &[z, off, off.conj(), z]));
    [block(dg), block(dt)]
}

/// State received by `M` lenses with normalized coherences `g_ij`; Γ = (ε/2)g,
/// so `tr Γ = εM/2`.
pub fn multi_lens_state(eps: f64, g: &DMatrix<Complex64>) -> Result<GaussianState> {
    check_eps(eps)?;
    if !g.is_square() {
        return Err(Error::Validation("coherence function matrix must be square".into()));
    }
    for i in 0..g.nrows() {
        if (g[(i, i)] - Complex64::new(1.0, 0.0)).norm() > HERMITIAN_TOL {
            return Err(Error::Validation(format!("g must have unit diagonal (entry {i} is {})", g[(i, i)])));
        }
    }
    let gamma = CoherenceMatrix::new(g * Complex64::new(eps / 2.0, 0.0))?;
    Ok(covariance_from_coherence(&gamma))
}

/// `∂V/∂|g_ij|` and `∂V/∂θ_ij` for every pair `i < j` of [`multi_lens_state`],
/// in that interleaved order.
pub fn multi_lens_derivatives(eps: f64, g: &DMatrix<Complex64>) -> Vec<DMatrix<f64>> {
    let m = g.nrows();
    let h = Complex64::new(eps / 2.0, 0.0);
    let mut out = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            let gij = g[(i, j)];
            let phase = if gij.norm() > 0.0 { gij / gij.norm() } else { Complex64::new(1.0, 0.0) };
            for d in [phase * h, Complex64::new(0.0, 1.0) * gij * h] {
                let mut dg = DMatrix::<Complex64>::zeros(m, m);
                dg[(i, j)] = d;
                dg[(j, i)] = d.conj();
                out.push(realify(&dg));
            }
        }
    }
    out
}

/// `μ ↦ Sμ + d`, `V ↦ S V Sᵀ`.
pub fn apply_symplectic(state: &GaussianState, op: &SymplecticOp) -> Result<GaussianState> {
    dim_check("apply_symplectic", state.cov.nrows(), op.s.nrows())?;
    Ok(GaussianState {
        mu: &op.s * &state.mu + &op.d,
        cov: crate::linalg::symmetrize(&(&op.s * &state.cov * op.s.transpose())),
    })
}

// ---- JSON --------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct OrderedMoments {
    ordering: QuadratureOrdering,
    mu: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct GaussianStateJson {
    modes: usize,
    #[serde(flatten)]
    primary: OrderedMoments,
    /// Same state in the other ordering, kept for auditing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alternate: Option<OrderedMoments>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != c) {
        return Err(Error::Validation("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(n, c, |i, j| rows[i][j]))
}

impl Serialize for GaussianState {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let (imu, icov) = self.in_ordering(QuadratureOrdering::Interleaved);
        GaussianStateJson {
            modes: self.modes(),
            primary: OrderedMoments {
                ordering: QuadratureOrdering::Blocked,
                mu: self.mu.iter().copied().collect(),
                cov: rows(&self.cov),
            },
            alternate: Some(OrderedMoments {
                ordering: QuadratureOrdering::Interleaved,
                mu: imu.iter().copied().collect(),
                cov: rows(&icov),
            }),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for GaussianState {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = GaussianStateJson::deserialize(de)?;
        let cov = from_rows(&j.primary.cov).map_err(D::Error::custom)?;
        if cov.nrows() != 2 * j.modes {
            return Err(D::Error::custom("covariance size does not match mode count"));
        }
        GaussianState::from_ordering(DVector::from_vec(j.primary.mu), cov, j.primary.ordering)
            .map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct CoherenceJson {
    modes: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Serialize for CoherenceMatrix {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        CoherenceJson {
            modes: self.modes(),
            re: rows(&self.gamma.map(|z| z.re)),
            im: rows(&self.gamma.map(|z| z.im)),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for CoherenceMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = CoherenceJson::deserialize(de)?;
        let re = from_rows(&j.re).map_err(D::Error::custom)?;
        let im = from_rows(&j.im).map_err(D::Error::custom)?;
        if re.shape() != im.shape() || re.nrows() != j.modes {
            return Err(D::Error::custom("real and imaginary parts disagree in shape"));
        }
        let gamma = DMatrix::from_fn(j.modes, j.modes, |i, k| Complex64::new(re[(i, k)], im[(i, k)]));
        CoherenceMatrix::new(gamma).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// The two-lens covariance written out entry by entry in interleaved order.
    fn printed_two_lens(eps: f64, g: f64, th: f64) -> DMatrix<f64> {
        let (c, s) = (eps * g * th.cos(), eps * g * th.sin());
        let d = 1.0 + eps;
        DMatrix::from_row_slice(4, 4, &[
            d, 0.0, c, -s,
            0.0, d, s, c,
            c, s, d, 0.0,
            -s, c, 0.0, d,
        ]) * 0.5
    }

    #[test]
    fn vacuum_from_zero_coherence() {
        let st = covariance_from_coherence(&CoherenceMatrix::zeros(1));
        assert_eq!(st.covariance(), &(DMatrix::identity(2, 2) * 0.5));
        assert_eq!(st.mean().norm(), 0.0);
    }

    #[test]
    fn coherence_substitution_examples() {
        let st = covariance_from_coherence(&two_lens_coherence(0.2, 1.0, 0.0).unwrap());
        for i in 0..4 {
            assert_relative_eq!(st.covariance()[(i, i)], 0.6, epsilon = 1e-15);
        }
        assert_relative_eq!(st.covariance()[(0, 1)], 0.1, epsilon = 1e-15);

        let diag = CoherenceMatrix::from_real(DMatrix::from_diagonal_element(2, 2, 0.3)).unwrap();
        let st = covariance_from_coherence(&diag);
        assert!((st.covariance() - DMatrix::from_diagonal_element(4, 4, 0.8)).abs().max() < 1e-15);
    }

    #[test]
    fn two_lens_examples() {
        let st = two_lens_state(0.1, 0.0, 1.234).unwrap();
        let expect = DMatrix::from_diagonal_element(4, 4, 0.55);
        assert!((st.covariance() - expect).abs().max() < 1e-15);

        let (_, v) = two_lens_state(0.2, 1.0, 0.0).unwrap().in_ordering(QuadratureOrdering::Interleaved);
        assert_relative_eq!(v[(0, 2)], 0.1, epsilon = 1e-15);
        assert_relative_eq!(v[(1, 2)], 0.0, epsilon = 1e-15);

        let (_, v) = two_lens_state(0.2, 0.5, PI / 2.0).unwrap().in_ordering(QuadratureOrdering::Interleaved);
        assert!(v[(0, 2)].abs() < 1e-15);
        assert_relative_eq!(v[(1, 2)], 0.05, epsilon = 1e-15);
        assert_relative_eq!(v[(0, 3)], -0.05, epsilon = 1e-15);
    }

    #[test]
    fn two_lens_domain_errors() {
        assert!(matches!(two_lens_state(0.0, 0.5, 0.0), Err(Error::Domain(_))));
        assert!(matches!(two_lens_state(0.1, 1.2, 0.0), Err(Error::Domain(_))));
        assert!(matches!(two_lens_state(0.1, -0.1, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_non_hermitian_and_negative() {
        let bad = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0),
            Complex64::new(0.4, 0.0), Complex64::new(1.0, 0.0),
        ]);
        let err = CoherenceMatrix::new(bad).unwrap_err();
        assert!(err.to_string().contains("Hermitian"));
        let neg = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let err = CoherenceMatrix::from_real(neg).unwrap_err();
        assert!(err.to_string().contains("semidefinite"));
        // rank deficient is fine
        assert!(two_lens_coherence(0.3, 1.0, 0.7).is_ok());
    }

    #[test]
    fn multi_lens_examples() {
        let g = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(1.0, 0.0), Complex64::from_polar(0.4, 0.9),
            Complex64::from_polar(0.4, -0.9), Complex64::new(1.0, 0.0),
        ]);
        let a = multi_lens_state(0.2, &g).unwrap();
        let b = two_lens_state(0.2, 0.4, 0.9).unwrap();
        assert!((a.covariance() - b.covariance()).abs().max() < 1e-15);

        let eye = DMatrix::<Complex64>::identity(3, 3);
        let st = multi_lens_state(0.1, &eye).unwrap();
        assert!((st.covariance() - DMatrix::from_diagonal_element(6, 6, 0.55)).abs().max() < 1e-15);

        let ones = DMatrix::from_element(3, 3, Complex64::new(1.0, 0.0));
        assert!(multi_lens_state(0.1, &ones).is_ok());
        let gamma = CoherenceMatrix::new(&ones * Complex64::new(0.05, 0.0)).unwrap();
        assert!(gamma.min_eigenvalue().abs() < 1e-12);
        assert_relative_eq!(gamma.trace(), 0.1 * 3.0 / 2.0, epsilon = 1e-15);

        let mut off = eye.clone();
        off[(1, 1)] = Complex64::new(0.9, 0.0);
        assert!(multi_lens_state(0.1, &off).is_err());
        let mut nonpsd = eye.clone();
        nonpsd[(0, 1)] = Complex64::new(1.5, 0.0);
        nonpsd[(1, 0)] = Complex64::new(1.5, 0.0);
        assert!(multi_lens_state(0.1, &nonpsd).is_err());
    }

    #[test]
    fn beam_splitter_output_variances() {
        let (eps, g) = (0.3, 0.6);
        let st = two_lens_state(eps, g, 0.0).unwrap();
        let out = apply_symplectic(&st, &SymplecticOp::beam_splitter(2, 0, 1)).unwrap();
        let v = out.covariance();
        assert_relative_eq!(v[(0, 0)], (1.0 + eps + eps * g) / 2.0, epsilon = 1e-14);
        assert_relative_eq!(v[(1, 1)], (1.0 + eps - eps * g) / 2.0, epsilon = 1e-14);
        assert_relative_eq!(v[(2, 2)], (1.0 + eps + eps * g) / 2.0, epsilon = 1e-14);
        assert!(v[(0, 1)].abs() < 1e-15);
        let same = apply_symplectic(&st, &SymplecticOp::identity(2)).unwrap();
        assert_eq!(same, st);
    }

    #[test]
    fn phase_then_beam_splitter_gives_cos_theta_plus_delta() {
        let (eps, g, th, delta) = (0.2, 0.7, 0.4, 0.9);
        let st = two_lens_state(eps, g, th).unwrap();
        // rotate mode 2 by -δ so the relative phase becomes θ + δ
        let op = SymplecticOp::phase_shift(2, 1, -delta).then(&SymplecticOp::beam_splitter(2, 0, 1));
        let out = apply_symplectic(&st, &op).unwrap();
        let v = out.covariance();
        // mean photon number of mode k is (V_xx + V_pp - 1)/2
        let n1 = (v[(0, 0)] + v[(2, 2)] - 1.0) / 2.0;
        let n2 = (v[(1, 1)] + v[(3, 3)] - 1.0) / 2.0;
        assert_relative_eq!(n1, eps / 2.0 * (1.0 + g * (th + delta).cos()), epsilon = 1e-14);
        assert_relative_eq!(n2, eps / 2.0 * (1.0 - g * (th + delta).cos()), epsilon = 1e-14);
    }

    #[test]
    fn validate_examples() {
        let d = validate_state(&GaussianState::vacuum(1));
        assert!(d.physical && d.min_eigenvalue.abs() < 1e-10);
        let low = GaussianState::new(DVector::zeros(2), DMatrix::identity(2, 2) * 0.4).unwrap();
        assert!(!validate_state(&low).physical);
        assert!(validate_state(&two_lens_state(0.2, 1.0, 0.0).unwrap()).physical);
    }

    #[test]
    fn random_symplectic_is_symplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in 1..5 {
            let op = random_symplectic(m, 2.0, &mut rng);
            assert!(SymplecticOp::new(op.matrix().clone(), DVector::zeros(2 * m)).is_ok());
        }
    }

    #[test]
    fn copies_match_direct_sum() {
        let st = two_lens_state(0.1, 0.3, 0.2).unwrap();
        let two = st.copies(2);
        assert_eq!(two.modes(), 4);
        let lifted = copies_of_matrix(st.covariance(), 2);
        assert!((two.covariance() - lifted).abs().max() < 1e-15);
        // cross-copy block vanishes: x of mode 0 (copy 0) vs x of mode 2 (copy 1)
        assert_eq!(two.covariance()[(0, 2)], 0.0);
    }

    #[test]
    fn json_roundtrip_keeps_both_orderings() {
        let st = two_lens_state(0.2, 0.5, 0.3).unwrap();
        let js = serde_json::to_string(&st).unwrap();
        assert!(js.contains("\"xxpp\"") && js.contains("\"xpxp\""));
        let back: GaussianState = serde_json::from_str(&js).unwrap();
        assert_eq!(back, st);
        let missing = r#"{"modes":1,"mu":[0,0],"cov":[[0.5,0],[0,0.5]]}"#;
        assert!(serde_json::from_str::<GaussianState>(missing).is_err());

        let gamma = two_lens_coherence(0.2, 0.5, 0.3).unwrap();
        let back: CoherenceMatrix = serde_json::from_str(&serde_json::to_string(&gamma).unwrap()).unwrap();
        assert_eq!(back, gamma);
    }

    #[test]
    fn printed_matrix_matches_on_random_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let eps = rng.random_range(1e-4..1.0);
            let g = rng.random_range(0.0..=1.0);
            let th = rng.random_range(-PI..PI);
            let (_, v) = two_lens_state(eps, g, th).unwrap().in_ordering(QuadratureOrdering::Interleaved);
            assert!((v - printed_two_lens(eps, g, th)).abs().max() < 1e-12);
        }
    }
}

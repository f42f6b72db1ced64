//! Monte Carlo check that maximum-likelihood estimates reach the Cramér–Rao
//! bound.

use argmin::core::{CostFunction, Error as ArgminError, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::goldensectionsearch::GoldenSectionSearch;
use argmin::solver::neldermead::NelderMead;
use gimlab_core::fisher::{fim_discrete, heterodyne_fim_numeric};
use gimlab_core::gstate::two_lens_state;
use gimlab_core::measure::photon_counting_two_mode;
use gimlab_core::Execution;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Binomial, ChiSquared, Distribution, StandardNormal};
use serde::Serialize;

use crate::config::{McConfig, McFamily, Tolerances};
use crate::error::{LabError, LabResult};
use crate::rng::task_rng;
use crate::table::{Check, RunReport, Table};

const BOOTSTRAP_STREAM: u64 = u64::MAX;
const EDGE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McParam {
    pub name: String,
    pub truth: f64,
    pub mse: f64,
    /// Inverse-FIM diagonal for `n_samples` outcomes.
    pub crb: f64,
    pub bias: f64,
    /// 95% bootstrap half-width of `mse`.
    pub half_width: f64,
}

impl McParam {
    pub fn ratio(&self) -> f64 {
        self.mse / self.crb
    }

    /// `1 − MSE/CRB`; positive when the estimator beats the bound.
    pub fn slack(&self) -> f64 {
        1.0 - self.ratio()
    }

    pub fn statistically_below(&self) -> bool {
        self.mse + self.half_width < self.crb
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McResult {
    pub family: &'static str,
    pub n_samples: usize,
    pub n_trials: usize,
    pub failures: usize,
    pub params: Vec<McParam>,
}

struct Trial {
    estimate: Vec<f64>,
    converged: bool,
}

fn converged<S: State>(s: &S) -> bool {
    matches!(s.get_termination_status(), TerminationStatus::Terminated(TerminationReason::SolverConverged))
}

struct PhotonLik {
    n_plus: f64,
    n_minus: f64,
    eps: f64,
    g: f64,
    delta: f64,
}

impl CostFunction for PhotonLik {
    type Param = f64;
    type Output = f64;
    fn cost(&self, theta: &f64) -> Result<f64, ArgminError> {
        let c = self.g * (theta + self.delta).cos();
        let (pp, pm) = (0.5 * self.eps * (1.0 + c), 0.5 * self.eps * (1.0 - c));
        Ok(-(self.n_plus * pp.ln() + self.n_minus * pm.ln()))
    }
}

fn photon_trial<R: Rng>(eps: f64, g: f64, theta: f64, delta: f64, n: usize, rng: &mut R) -> LabResult<Trial> {
    let c = g * (theta + delta).cos();
    let pp = 0.5 * eps * (1.0 + c);
    let pm = 0.5 * eps * (1.0 - c);
    let n_plus = Binomial::new(n as u64, pp).map_err(|e| LabError::Optimizer(e.to_string()))?.sample(rng);
    let rest = n as u64 - n_plus;
    let n_minus = Binomial::new(rest, (pm / (1.0 - pp)).min(1.0)).map_err(|e| LabError::Optimizer(e.to_string()))?.sample(rng);
    if n_plus + n_minus == 0 {
        return Ok(Trial { estimate: vec![f64::NAN], converged: false });
    }
    // cos(θ + δ) is monotone on this window, so the likelihood is unimodal
    let (lo, hi) = (-delta, std::f64::consts::PI - delta);
    let solver = GoldenSectionSearch::new(lo, hi)
        .and_then(|s| s.with_tolerance(1e-12))
        .map_err(|e| LabError::Optimizer(e.to_string()))?;
    let lik = PhotonLik { n_plus: n_plus as f64, n_minus: n_minus as f64, eps, g, delta };
    let res = Executor::new(lik, solver)
        .configure(|s| s.param(0.5 * (lo + hi)).max_iters(500))
        .run()
        .map_err(|e| LabError::Optimizer(e.to_string()))?;
    let est = *res.state().get_best_param().expect("golden section keeps a best point");
    let interior = est - lo > EDGE_TOL && hi - est > EDGE_TOL;
    Ok(Trial { estimate: vec![est], converged: converged(res.state()) && interior })
}

/// Per-sample Gaussian negative log-likelihood `½(ln det C + tr(C⁻¹S))` over
/// the physical box, with a quadratic penalty outside it.
struct HeterodyneLik {
    scatter: DMatrix<f64>,
    eps: f64,
}

const PENALTY: f64 = 1e3;

fn box_project(p: &[f64]) -> ([f64; 2], f64) {
    let g = p[0].clamp(0.0, 1.0);
    let t = p[1].clamp(0.0, std::f64::consts::TAU);
    let d = (p[0] - g).powi(2) + (p[1] - t).powi(2);
    ([g, t], d)
}

impl CostFunction for HeterodyneLik {
    type Param = Vec<f64>;
    type Output = f64;
    fn cost(&self, p: &Vec<f64>) -> Result<f64, ArgminError> {
        let ([g, t], d) = box_project(p);
        let c = two_lens_state(self.eps, g, t).map_err(ArgminError::from)?.covariance() + DMatrix::identity(4, 4) * 0.5;
        let chol = c.cholesky().ok_or_else(|| ArgminError::msg("outcome covariance lost definiteness"))?;
        let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        let tr = chol.solve(&self.scatter).trace();
        Ok(0.5 * (logdet + tr) + PENALTY * d)
    }
}

/// `S = W / n` with `W ~ Wishart(n, C)` drawn through the Bartlett decomposition.
fn sample_scatter<R: Rng>(c: &DMatrix<f64>, n: usize, rng: &mut R) -> LabResult<DMatrix<f64>> {
    let d = c.nrows();
    let l = c.clone().cholesky().ok_or_else(|| LabError::Optimizer("outcome covariance not positive definite".into()))?.l();
    let mut a = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        let chi = ChiSquared::new((n - i) as f64).map_err(|e| LabError::Optimizer(e.to_string()))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample(StandardNormal);
        }
    }
    let la = &l * a;
    Ok(&la * la.transpose() / n as f64)
}

fn heterodyne_trial<R: Rng>(eps: f64, g: f64, theta: f64, n: usize, rng: &mut R) -> LabResult<Trial> {
    let c = two_lens_state(eps, g, theta)?.covariance() + DMatrix::identity(4, 4) * 0.5;
    let scatter = sample_scatter(&c, n, rng)?;
    let h = 0.05;
    let simplex = vec![vec![g, theta], vec![g + h, theta], vec![g, theta + h]];
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-13).map_err(|e| LabError::Optimizer(e.to_string()))?;
    let res = Executor::new(HeterodyneLik { scatter, eps }, solver)
        .configure(|s| s.max_iters(2000))
        .run()
        .map_err(|e| LabError::Optimizer(e.to_string()))?;
    let p = res.state().get_best_param().expect("simplex keeps a best vertex").clone();
    let ([gh, th], d) = box_project(&p);
    let interior = d == 0.0 && gh > EDGE_TOL && gh < 1.0 - EDGE_TOL;
    Ok(Trial { estimate: vec![gh, th], converged: converged(res.state()) && interior })
}

fn bernoulli_trial<R: Rng>(p: f64, n: usize, rng: &mut R) -> LabResult<Trial> {
    let k = Binomial::new(n as u64, p).map_err(|e| LabError::Optimizer(e.to_string()))?.sample(rng);
    Ok(Trial { estimate: vec![k as f64 / n as f64], converged: true })
}

fn bootstrap_half_width(sq: &[f64], resamples: usize, seed: u64) -> f64 {
    let mut rng = task_rng(seed, BOOTSTRAP_STREAM);
    let t = sq.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..t).map(|_| sq[rng.random_range(0..t)]).sum::<f64>() / t as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let q = |f: f64| means[((resamples - 1) as f64 * f).round() as usize];
    0.5 * (q(0.975) - q(0.025))
}

pub fn mc_crb_check(cfg: &McConfig, seed: u64, exec: Execution) -> LabResult<McResult> {
    let n = cfg.n_samples;
    let (family, names, truth, crb): (&'static str, Vec<&str>, Vec<f64>, Vec<f64>) = match cfg.model {
        McFamily::PhotonCounting { eps, g_abs, theta, delta } => {
            let f = fim_discrete(&photon_counting_two_mode(eps, g_abs, theta, delta)?, 1)?.select(&["theta"])?;
            if !(f.get(0, 0) > 0.0) {
                return Err(gimlab_core::Error::Singular("photon-counting information vanishes at this phase".into()).into());
            }
            ("photon_counting", vec!["theta"], vec![theta], vec![1.0 / (n as f64 * f.get(0, 0))])
        }
        McFamily::Heterodyne { eps, g_abs, theta } => {
            let f = heterodyne_fim_numeric(eps, g_abs, theta, 1)?;
            let inv = f.crb()?;
            ("heterodyne", vec!["|g|", "theta"], vec![g_abs, theta], vec![inv[(0, 0)] / n as f64, inv[(1, 1)] / n as f64])
        }
        McFamily::Bernoulli { p } => ("bernoulli", vec!["p"], vec![p], vec![p * (1.0 - p) / n as f64]),
    };
    let trials = exec.map_indexed(cfg.n_trials, |i| {
        let mut rng = task_rng(seed, i as u64);
        match cfg.model {
            McFamily::PhotonCounting { eps, g_abs, theta, delta } => photon_trial(eps, g_abs, theta, delta, n, &mut rng),
            McFamily::Heterodyne { eps, g_abs, theta } => heterodyne_trial(eps, g_abs, theta, n, &mut rng),
            McFamily::Bernoulli { p } => bernoulli_trial(p, n, &mut rng),
        }
    });
    let trials: Vec<Trial> = trials.into_iter().collect::<LabResult<_>>()?;
    let good: Vec<&Trial> = trials.iter().filter(|t| t.converged).collect();
    let failures = trials.len() - good.len();
    let mut params = Vec::new();
    for (k, name) in names.iter().enumerate() {
        let err: Vec<f64> = good.iter().map(|t| t.estimate[k] - truth[k]).collect();
        let sq: Vec<f64> = err.iter().map(|e| e * e).collect();
        let m = sq.len().max(1) as f64;
        params.push(McParam {
            name: name.to_string(),
            truth: truth[k],
            mse: sq.iter().sum::<f64>() / m,
            crb: crb[k],
            bias: err.iter().sum::<f64>() / m,
            half_width: if sq.is_empty() { f64::INFINITY } else { bootstrap_half_width(&sq, cfg.bootstrap, seed) },
        });
    }
    Ok(McResult { family, n_samples: n, n_trials: cfg.n_trials, failures, params })
}

pub fn run(cfg: &McConfig, tol: &Tolerances, seed: Option<u64>, exec: Execution) -> LabResult<RunReport> {
    let seed = seed.ok_or_else(|| crate::error::invalid("seed", "required for Monte Carlo runs"))?;
    let res = mc_crb_check(cfg, seed, exec)?;
    let mut report = RunReport::default();
    let mut t = Table::new(
        "mc",
        &[
            "family", "param", "truth", "n_samples", "trials", "failures", "mse", "crb", "ratio", "bias", "half_width",
            "slack", "within_tolerance", "below_crb",
        ],
    );
    let rate = res.failures as f64 / res.n_trials as f64;
    if rate > tol.ml_failure_rate {
        report.convergence_failures = res.failures;
    }
    report.checks.push(Check {
        name: "ml_convergence".into(),
        pass: rate <= tol.ml_failure_rate,
        detail: format!("{} of {} fits failed to converge", res.failures, res.n_trials),
    });
    for p in &res.params {
        let within = (p.ratio() - 1.0).abs() <= tol.mc_relative;
        let below = p.statistically_below();
        if below {
            report.violations += 1;
        }
        report.checks.push(Check {
            name: format!("mc_crb_{}", p.name),
            pass: within && !below,
            detail: format!("MSE/CRB = {:.4} ± {:.4}", p.ratio(), p.half_width / p.crb),
        });
        t.push(vec![
            res.family.into(),
            p.name.clone().into(),
            p.truth.into(),
            res.n_samples.into(),
            res.n_trials.into(),
            res.failures.into(),
            p.mse.into(),
            p.crb.into(),
            p.ratio().into(),
            p.bias.into(),
            p.half_width.into(),
            p.slack().into(),
            within.into(),
            below.into(),
        ]);
    }
    report.tables.push(t);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_matches_textbook_variance() {
        let cfg = McConfig { model: McFamily::Bernoulli { p: 0.3 }, n_samples: 1000, n_trials: 4000, bootstrap: 200 };
        let r = mc_crb_check(&cfg, 9, Execution::Parallel).unwrap();
        let p = &r.params[0];
        assert_eq!(p.crb, 0.3 * 0.7 / 1000.0);
        assert!((p.ratio() - 1.0).abs() < 0.08, "{}", p.ratio());
        assert!(!p.statistically_below());
    }

    #[test]
    fn wishart_scatter_is_unbiased() {
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let mut rng = task_rng(1, 0);
        let mut acc = DMatrix::zeros(2, 2);
        for _ in 0..4000 {
            acc += sample_scatter(&c, 10, &mut rng).unwrap();
        }
        acc /= 4000.0;
        assert!((acc - &c).abs().max() < 0.05);
    }

    #[test]
    fn photon_estimates_are_interior() {
        let mut rng = task_rng(2, 0);
        let t = photon_trial(0.05, 0.5, std::f64::consts::FRAC_PI_2, 0.0, 100_000, &mut rng).unwrap();
        assert!(t.converged);
        assert!((t.estimate[0] - std::f64::consts::FRAC_PI_2).abs() < 0.2);
    }
}

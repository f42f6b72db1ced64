//! Worst-case error bounds and numeric prior optimization over `N`.

use gimlab_core::bayescrb::{eigen_solver, prior_width, worst_case_bounds, Boundary, DetectionFamily};
use gimlab_core::superres::scaling_exponent_fit;
use gimlab_core::Execution;

use crate::config::BayesConfig;
use crate::error::LabResult;
use crate::table::{Cell, Check, RunReport, Table};

fn quadratic_k(f: DetectionFamily) -> Option<f64> {
    match f {
        DetectionFamily::Spade => None,
        DetectionFamily::Direct => Some(0.125),
        DetectionFamily::Gaussian { k } => Some(k),
    }
}

/// Domain for the eigenproblem: a multiple of the closed-form prior width,
/// or of `σ` when the profile is flat.
fn domain(f: DetectionFamily, n: usize, sigma: f64, widths: f64) -> LabResult<f64> {
    Ok(match quadratic_k(f) {
        Some(k) => widths * prior_width(k, n, sigma)?,
        None => widths * sigma,
    })
}

struct Solved {
    lambda: f64,
    lambda_coarse: f64,
    error_estimate: f64,
    lambda_extended: f64,
    l_max: f64,
    prior_csv: Option<gimlab_core::bayescrb::PriorFunction>,
}

pub fn run(cfg: &BayesConfig, exec: Execution) -> LabResult<RunReport> {
    let mut tasks = Vec::new();
    for &f in &cfg.families {
        for &n in &cfg.n_copies {
            tasks.push((f, n));
        }
    }
    let solved = exec.map(&tasks, |&(f, n)| -> LabResult<Solved> {
        let l_max = domain(f, n, cfg.sigma, cfg.l_max_widths)?;
        let prof = f.fisher_profile(n, cfg.sigma, l_max, cfg.n_grid)?;
        let s = eigen_solver(&prof, l_max, cfg.n_grid, Boundary::Dirichlet)?;
        let ext = 1.5 * l_max;
        let n_ext = ((cfg.n_grid - 1) as f64 * 1.5).round() as usize + 1;
        let e = eigen_solver(&f.fisher_profile(n, cfg.sigma, ext, n_ext)?, ext, n_ext, Boundary::Dirichlet)?;
        Ok(Solved {
            lambda: s.lambda,
            lambda_coarse: s.lambda_coarse,
            error_estimate: s.error_estimate,
            lambda_extended: e.lambda,
            l_max,
            prior_csv: cfg.export_priors.then_some(s.prior),
        })
    });
    let mut report = RunReport::default();
    let mut t = Table::new(
        "bounds",
        &[
            "family", "N", "sigma", "k", "K_bound", "lambda_numeric", "mse_lower_bound", "l_max", "lambda_coarse",
            "error_estimate", "lambda_l_max_x1.5", "lambda_over_bound",
        ],
    );
    let mut priors = Vec::new();
    let mut by_family: Vec<(DetectionFamily, Vec<f64>, Vec<f64>)> = Vec::new();
    for ((f, n), s) in tasks.iter().zip(solved) {
        let s = s?;
        let w = worst_case_bounds(*f, *n, cfg.sigma);
        t.push(vec![
            f.name().into(),
            (*n).into(),
            cfg.sigma.into(),
            quadratic_k(*f).into(),
            w.k_bound.into(),
            s.lambda.into(),
            w.mse_lower_bound.into(),
            s.l_max.into(),
            s.lambda_coarse.into(),
            s.error_estimate.into(),
            s.lambda_extended.into(),
            (s.lambda / w.k_bound).into(),
        ]);
        match by_family.iter_mut().find(|(g, _, _)| g == f) {
            Some((_, ns, ls)) => {
                ns.push(*n as f64);
                ls.push(s.lambda);
            }
            None => by_family.push((*f, vec![*n as f64], vec![s.lambda])),
        }
        if let Some(p) = s.prior_csv {
            let mut pt = Table::new(&format!("prior_{}_n{n}", f.name()), &["L", "p"]);
            for (l, d) in p.grid().iter().zip(p.density()) {
                pt.push(vec![(*l).into(), d.into()]);
            }
            priors.push(pt);
        }
    }
    let mut slopes = Table::new("slopes", &["family", "slope", "intercept", "residual", "expected", "pass"]);
    for (f, ns, ls) in &by_family {
        if ns.len() < 4 {
            continue;
        }
        let fit = scaling_exponent_fit(ns, ls)?;
        let expected = if quadratic_k(*f).is_some() { Cell::Float(0.5) } else { Cell::Empty };
        let pass = match expected {
            Cell::Float(e) => {
                let ok = (fit.slope - e).abs() <= 0.01;
                report.checks.push(Check {
                    name: format!("lambda_slope_{}", f.name()),
                    pass: ok,
                    detail: format!("slope {:.4} vs 0.5 ± 0.01", fit.slope),
                });
                Cell::Bool(ok)
            }
            _ => Cell::Empty,
        };
        slopes.push(vec![f.name().into(), fit.slope.into(), fit.intercept.into(), fit.residual.into(), expected, pass]);
    }
    report.tables.push(t);
    report.tables.push(slopes);
    report.tables.extend(priors);
    Ok(report)
}

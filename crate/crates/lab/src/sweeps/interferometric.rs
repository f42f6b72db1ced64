//! Two- and multi-lens interferometric sweeps.

use gimlab_core::fisher::{
    fim_gaussian, heterodyne_fim_closed_form, heterodyne_fim_numeric, homodyne_fim_closed_form, homodyne_fim_numeric,
    multi_lens_bounds, multi_lens_param_names, photon_counting_fim, theorem1_bounds, FisherMatrix, HomodyneVariant,
};
use gimlab_core::gstate::{
    copies_of_matrix, multi_lens_derivatives, multi_lens_state, two_lens_derivatives, two_lens_state, SymplecticOp,
};
use gimlab_core::linalg::Complex64;
use gimlab_core::measure::{
    heterodyne_measurement, homodyne_measurement, random_gaussian_measurement, random_rotated_homodyne, GaussianMeasurement,
    Quadrature,
};
use gimlab_core::superres::scaling_exponent_fit;
use gimlab_core::Execution;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::relative_difference;
use crate::config::{ClosedFormCheck, InterferometricConfig, MultiLens, RandomDominance, Tolerances, TwoLensFamily};
use crate::error::LabResult;
use crate::rng::task_rng;
use crate::table::{Check, RunReport, Table};

/// Entries this far below the largest matrix entry are compared absolutely.
const ROUNDOFF_FLOOR: f64 = 1e-12;

const MULTI_LENS_STREAM_OFFSET: u64 = 1 << 32;

fn family_fim(f: TwoLensFamily, eps: f64, g: f64, th: f64, delta: f64, n: usize) -> LabResult<FisherMatrix> {
    Ok(match f {
        TwoLensFamily::Heterodyne => heterodyne_fim_numeric(eps, g, th, n)?,
        TwoLensFamily::HomodyneXx => homodyne_fim_numeric(eps, g, th, n, HomodyneVariant::Xx)?,
        TwoLensFamily::HomodynePp => homodyne_fim_numeric(eps, g, th, n, HomodyneVariant::Pp)?,
        TwoLensFamily::HomodyneXp => homodyne_fim_numeric(eps, g, th, n, HomodyneVariant::Xp)?,
        TwoLensFamily::HomodynePx => homodyne_fim_numeric(eps, g, th, n, HomodyneVariant::Px)?,
        TwoLensFamily::PhotonCounting => photon_counting_fim(eps, g, th, delta, n)?,
    })
}

pub fn run(cfg: &InterferometricConfig, tol: &Tolerances, seed: Option<u64>, exec: Execution) -> LabResult<RunReport> {
    let mut report = RunReport::default();
    let eps = cfg.eps.values();
    let mut fim = Table::new(
        "fim",
        &["family", "eps", "g_abs", "theta", "F_gg", "F_gt", "F_tt", "bound_gg", "bound_gt", "bound_tt", "pass"],
    );
    let mut slopes =
        Table::new("slopes", &["family", "g_abs", "theta", "element", "slope", "intercept", "residual", "expected", "pass"]);
    for &f in &cfg.families {
        for &g in &cfg.g_abs {
            for &th in &cfg.theta {
                let rows: Vec<LabResult<FisherMatrix>> =
                    exec.map(&eps, |&e| family_fim(f, e, g, th, cfg.delta, cfg.n_copies));
                let mut ftt = Vec::new();
                let mut fgg = Vec::new();
                for (&e, r) in eps.iter().zip(rows) {
                    let m = r?;
                    let gaussian = f != TwoLensFamily::PhotonCounting;
                    let (bounds, pass) = if gaussian {
                        let rep = theorem1_bounds(e, g, cfg.n_copies)?.evaluate(&m, tol.bound)?;
                        if !rep.all_pass {
                            report.violations += 1;
                        }
                        let b = theorem1_bounds(e, g, cfg.n_copies)?;
                        (
                            [b.element("|g|", "|g|"), b.element("|g|", "theta"), b.element("theta", "theta")],
                            rep.all_pass.into(),
                        )
                    } else {
                        ([None; 3], crate::table::Cell::Empty)
                    };
                    fgg.push(m.get(0, 0));
                    ftt.push(m.get(1, 1));
                    fim.push(vec![
                        f.name().into(),
                        e.into(),
                        g.into(),
                        th.into(),
                        m.get(0, 0).into(),
                        m.get(0, 1).into(),
                        m.get(1, 1).into(),
                        bounds[0].into(),
                        bounds[1].into(),
                        bounds[2].into(),
                        pass,
                    ]);
                }
                for (name, vals) in [("F_gg", &fgg), ("F_tt", &ftt)] {
                    if eps.len() >= 4 && vals.iter().all(|v| *v > 0.0) {
                        let fit = scaling_exponent_fit(&eps, vals)?;
                        let expected = if f == TwoLensFamily::PhotonCounting { 1.0 } else { 2.0 };
                        let ok = (fit.slope - expected).abs() <= tol.slope;
                        report.checks.push(Check {
                            name: format!("slope_{}_{name}_g{g}_t{th}", f.name()),
                            pass: ok,
                            detail: format!("slope {:.4} vs {expected} ± {}", fit.slope, tol.slope),
                        });
                        slopes.push(vec![
                            f.name().into(),
                            g.into(),
                            th.into(),
                            name.into(),
                            fit.slope.into(),
                            fit.intercept.into(),
                            fit.residual.into(),
                            expected.into(),
                            ok.into(),
                        ]);
                    }
                }
            }
        }
    }
    report.tables.push(fim);
    report.tables.push(slopes);
    if let Some(cf) = &cfg.closed_form_check {
        closed_form(cf, tol, &mut report)?;
    }
    if let Some(r) = &cfg.random {
        let seed = seed.expect("validated: randomized runs carry a seed");
        random_dominance(cfg, r, tol, seed, exec, &mut report)?;
    }
    if let Some(m) = &cfg.multi_lens {
        let seed = seed.expect("validated: randomized runs carry a seed");
        multi_lens(cfg, m, tol, seed, exec, &mut report)?;
    }
    Ok(report)
}

fn closed_form(cf: &ClosedFormCheck, tol: &Tolerances, report: &mut RunReport) -> LabResult<()> {
    let mut t = Table::new(
        "closed_form",
        &["family", "eps", "g_abs", "theta", "element", "numeric", "printed", "rel_diff", "ratio", "pass"],
    );
    let mut worst: f64 = 0.0;
    let mut ratios = (f64::INFINITY, f64::NEG_INFINITY);
    for e in cf.eps.values() {
        for g in cf.g_abs.values() {
            let cases: [(&str, FisherMatrix, FisherMatrix); 3] = [
                ("heterodyne", heterodyne_fim_numeric(e, g, cf.theta, 1)?, heterodyne_fim_closed_form(e, g, 1)?),
                (
                    "homodyne_xp",
                    homodyne_fim_numeric(e, g, cf.theta, 1, HomodyneVariant::Xp)?,
                    homodyne_fim_closed_form(e, g, cf.theta, 1, HomodyneVariant::Xp)?,
                ),
                (
                    "homodyne_px",
                    homodyne_fim_numeric(e, g, cf.theta, 1, HomodyneVariant::Px)?,
                    homodyne_fim_closed_form(e, g, cf.theta, 1, HomodyneVariant::Px)?,
                ),
            ];
            for (name, num, pr) in cases {
                let scale = num.matrix().abs().max().max(pr.matrix().abs().max());
                for (el, i, j) in [("F_gg", 0, 0), ("F_gt", 0, 1), ("F_tt", 1, 1)] {
                    let (a, b) = (num.get(i, j), pr.get(i, j));
                    let rel = if (a - b).abs() <= ROUNDOFF_FLOOR * scale { 0.0 } else { relative_difference(a, b) };
                    worst = worst.max(rel);
                    let ratio = if a.abs() > ROUNDOFF_FLOOR * scale { Some(b / a) } else { None };
                    if let Some(r) = ratio {
                        ratios.0 = ratios.0.min(r);
                        ratios.1 = ratios.1.max(r);
                    }
                    t.push(vec![
                        name.into(),
                        e.into(),
                        g.into(),
                        cf.theta.into(),
                        el.into(),
                        a.into(),
                        b.into(),
                        rel.into(),
                        ratio.into(),
                        (rel <= tol.closed_form).into(),
                    ]);
                }
            }
        }
    }
    report.checks.push(Check {
        name: "closed_form_agreement".into(),
        pass: worst <= tol.closed_form,
        detail: format!(
            "max relative difference {worst:.3e} (tolerance {:.1e}); printed/numeric ratio in [{:.12}, {:.12}]",
            tol.closed_form, ratios.0, ratios.1
        ),
    });
    report.tables.push(t);
    Ok(())
}

/// Measurement kinds cycled through by the dominance sweep.
const KINDS: [&str; 4] = ["random_symplectic", "rotated_homodyne", "beam_split_homodyne", "squeezed_heterodyne"];

fn draw_measurement<R: Rng>(kind: usize, copies: usize, rng: &mut R) -> GaussianMeasurement {
    let m = 2 * copies;
    match kind {
        0 => random_gaussian_measurement(m, rng),
        1 => random_rotated_homodyne(m, rng),
        2 => {
            let mut op = SymplecticOp::identity(m);
            for c in 0..copies {
                let phi = rng.random_range(0.0..std::f64::consts::TAU);
                op = op
                    .then(&SymplecticOp::phase_shift(m, 2 * c + 1, phi))
                    .then(&SymplecticOp::beam_splitter(m, 2 * c, 2 * c + 1));
            }
            let sel: Vec<Quadrature> =
                (0..m).map(|_| if rng.random_bool(0.5) { Quadrature::X } else { Quadrature::P }).collect();
            homodyne_measurement(&sel).and_then(|h| h.after(&op)).expect("dimensions agree")
        }
        _ => {
            let mut op = SymplecticOp::identity(m);
            for k in 0..m {
                let r = rng.random_range(-1.0..1.0);
                op = op.then(&SymplecticOp::squeezer(m, k, r));
            }
            heterodyne_measurement(m).and_then(|h| h.after(&op)).expect("dimensions agree")
        }
    }
}

fn measured_fim(meas: &GaussianMeasurement, v: &DMatrix<f64>, d: &[DMatrix<f64>], params: &[&str]) -> LabResult<FisherMatrix> {
    let (_, c) = meas.outcome_moments(&DVector::zeros(v.nrows()), v)?;
    let dc: Vec<DMatrix<f64>> = d.iter().map(|x| meas.project_derivative(x)).collect::<Result<_, _>>()?;
    Ok(fim_gaussian(&c, &dc, params, 1)?)
}

fn random_dominance(
    cfg: &InterferometricConfig,
    r: &RandomDominance,
    tol: &Tolerances,
    seed: u64,
    exec: Execution,
    report: &mut RunReport,
) -> LabResult<()> {
    let eps = cfg.eps.values();
    let mut grid = Vec::new();
    for &e in &eps {
        for &g in &cfg.g_abs {
            for &th in &cfg.theta {
                grid.push((e, g, th));
            }
        }
    }
    let rows = exec.map_indexed(r.count, |i| -> LabResult<_> {
        let (e, g, th) = grid[i % grid.len()];
        let copies = 1 + (i / grid.len()) % r.max_copies;
        let kind = i % KINDS.len();
        let mut rng = task_rng(seed, i as u64);
        let meas = draw_measurement(kind, copies, &mut rng);
        let st = two_lens_state(e, g, th)?;
        let v = copies_of_matrix(st.covariance(), copies);
        let d: Vec<DMatrix<f64>> = two_lens_derivatives(e, g, th).iter().map(|x| copies_of_matrix(x, copies)).collect();
        let f = measured_fim(&meas, &v, &d, &["|g|", "theta"])?;
        let rep = theorem1_bounds(e, g, copies)?.evaluate(&f, tol.bound)?;
        Ok((i, kind, e, g, th, copies, f, rep))
    });
    let mut t = Table::new(
        "random_dominance",
        &[
            "trial", "kind", "eps", "g_abs", "theta", "copies", "F_gg", "F_gt", "F_tt", "max_eigenvalue", "matrix_bound",
            "min_slack", "pass",
        ],
    );
    let mut fails = 0;
    for row in rows {
        let (i, kind, e, g, th, copies, f, rep) = row?;
        if !rep.all_pass {
            fails += 1;
        }
        let mat = rep.matrix.as_ref();
        t.push(vec![
            i.into(),
            KINDS[kind].into(),
            e.into(),
            g.into(),
            th.into(),
            copies.into(),
            f.get(0, 0).into(),
            f.get(0, 1).into(),
            f.get(1, 1).into(),
            mat.map(|m| m.max_eigenvalue).into(),
            mat.map(|m| m.bound).into(),
            rep.min_slack().into(),
            rep.all_pass.into(),
        ]);
    }
    report.violations += fails;
    report.checks.push(Check {
        name: "theorem1_dominance".into(),
        pass: fails == 0,
        detail: format!("{fails} of {} random measurements exceed a bound", r.count),
    });
    report.tables.push(t);
    Ok(())
}

/// Normalized Gram matrix of random complex vectors: a valid coherence matrix.
fn random_coherence<R: Rng>(m: usize, rng: &mut R) -> DMatrix<Complex64> {
    let cols: Vec<DVector<Complex64>> = (0..m)
        .map(|_| {
            let v = DVector::from_fn(m, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
            let n = v.norm();
            v / Complex64::new(n, 0.0)
        })
        .collect();
    let mut g = DMatrix::from_fn(m, m, |i, j| cols[i].dotc(&cols[j]).conj());
    for i in 0..m {
        g[(i, i)] = Complex64::new(1.0, 0.0);
    }
    g
}

fn multi_lens(
    cfg: &InterferometricConfig,
    ml: &MultiLens,
    tol: &Tolerances,
    seed: u64,
    exec: Execution,
    report: &mut RunReport,
) -> LabResult<()> {
    let eps = cfg.eps.values();
    let names = multi_lens_param_names(ml.lenses);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let rows = exec.map_indexed(ml.count, |i| -> LabResult<_> {
        let e = eps[i % eps.len()];
        let mut rng = task_rng(seed, MULTI_LENS_STREAM_OFFSET + i as u64);
        let g = random_coherence(ml.lenses, &mut rng);
        let st = multi_lens_state(e, &g)?;
        let d = multi_lens_derivatives(e, &g);
        let meas = random_gaussian_measurement(ml.lenses, &mut rng);
        let f = measured_fim(&meas, st.covariance(), &d, &refs)?;
        let rep = multi_lens_bounds(e, &g, 1)?.evaluate(&f, tol.bound)?;
        Ok((i, e, rep))
    });
    let mut t = Table::new("multi_lens", &["trial", "lenses", "eps", "max_ratio", "max_eigenvalue", "matrix_bound", "min_slack", "pass"]);
    let mut fails = 0;
    for row in rows {
        let (i, e, rep) = row?;
        if !rep.all_pass {
            fails += 1;
        }
        let ratio = rep
            .rows
            .iter()
            .filter(|r| r.bound > 0.0)
            .map(|r| r.value.abs() / r.bound)
            .fold(0.0f64, f64::max);
        let mat = rep.matrix.as_ref();
        t.push(vec![
            i.into(),
            ml.lenses.into(),
            e.into(),
            ratio.into(),
            mat.map(|m| m.max_eigenvalue).into(),
            mat.map(|m| m.bound).into(),
            rep.min_slack().into(),
            rep.all_pass.into(),
        ]);
    }
    report.violations += fails;
    report.checks.push(Check {
        name: "multi_lens_dominance".into(),
        pass: fails == 0,
        detail: format!("{fails} of {} random measurements exceed a bound", ml.count),
    });
    report.tables.push(t);
    Ok(())
}

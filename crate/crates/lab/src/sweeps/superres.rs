//! Single-lens superresolution sweep over the two-point size.

use gimlab_core::measure::{random_gaussian_measurement, random_rotated_homodyne, spade_basis};
use gimlab_core::superres::{
    direct_imaging_fim_moments, direct_imaging_fim_size, theorem2_bound, reduced_moment_expansion, reduced_scene,
    scaling_exponent_fit, scene_derivative_vectors, spade_fim_moments, spade_fim_size, two_point_gaussian_bound, Psf,
    SceneParams,
};
use gimlab_core::Execution;

use super::single_lens::scene_for;
use crate::config::{SuperresConfig, Tolerances};
use crate::error::LabResult;
use crate::rng::task_rng;
use crate::table::{Cell, Check, RunReport, Table};

struct SizeRow {
    l: f64,
    het: f64,
    homx: f64,
    spade: f64,
    direct: f64,
    bound: f64,
    allowed: f64,
    random_max_ratio: Option<f64>,
    pass: bool,
}

struct MomentRow {
    n: usize,
    direct: Option<f64>,
    spade: Option<f64>,
    het: f64,
    random_max_ratio: Option<f64>,
    bound: f64,
    pass: bool,
}

/// Stream index for random draw `trial` at size `si` and moment `n`.
fn stream(si: usize, n: usize, trial: usize) -> u64 {
    ((si as u64) << 32) | ((n as u64) << 24) | trial as u64
}

pub fn run(cfg: &SuperresConfig, tol: &Tolerances, seed: Option<u64>, exec: Execution) -> LabResult<RunReport> {
    let psf = Psf::gaussian(cfg.sigma)?;
    let sizes = cfg.sizes.values();
    let n_copies = cfg.n_copies;
    let per_size = exec.map_indexed(sizes.len(), |si| -> LabResult<(SizeRow, Vec<MomentRow>)> {
        let l = sizes[si];
        let scene = scene_for(cfg.eps, l, &psf, cfg.grid)?;
        let basis = spade_basis(&psf, scene.grid(), 0.0, l, cfg.spade_order)?;
        let red = reduced_scene(&scene, SceneParams::Size)?;
        let bound = two_point_gaussian_bound(cfg.eps, l, cfg.sigma, n_copies)?;
        let allowed = bound * (1.0 + tol.two_point_allowance * l / cfg.sigma);
        let het = red.heterodyne_fim(n_copies)?.get(0, 0);
        let homx = red.homodyne_x_fim(n_copies)?.get(0, 0);
        let mut random_max_ratio: Option<f64> = None;
        let mut pass = het <= allowed && homx <= allowed;
        for t in 0..cfg.random_per_size {
            let mut rng = task_rng(seed.unwrap_or(0), stream(si, 0, t));
            let copies = 1 + t % cfg.max_copies;
            let m = (red.modes() + cfg.extra_vacuum) * copies;
            let meas = if t % 2 == 0 { random_gaussian_measurement(m, &mut rng) } else { random_rotated_homodyne(m, &mut rng) };
            let f = red.fim_under(&meas, cfg.extra_vacuum, copies)?.get(0, 0);
            let allowed_c = allowed * copies as f64 / n_copies as f64;
            pass &= f <= allowed_c;
            let r = f / allowed_c;
            random_max_ratio = Some(random_max_ratio.map_or(r, |x| x.max(r)));
        }
        let size_row = SizeRow {
            l,
            het,
            homx,
            spade: spade_fim_size(&scene, &basis, n_copies)?.get(0, 0),
            direct: direct_imaging_fim_size(&scene, n_copies)?.get(0, 0),
            bound,
            allowed,
            random_max_ratio,
            pass,
        };

        let direct = direct_imaging_fim_moments(&scene, cfg.n_max, n_copies)?;
        let spade = spade_fim_moments(&scene, &basis, cfg.n_max, n_copies)?;
        let het_m = reduced_scene(&scene, SceneParams::Moments(cfg.bound_orders))?.heterodyne_fim(n_copies)?;
        let dv = scene_derivative_vectors(&scene, cfg.bound_orders)?;
        let t_moments = scene.moments(2 * basis.expansion_order());
        let mut moments = Vec::new();
        for n in 1..=cfg.bound_orders {
            let b = theorem2_bound(n, n, cfg.eps, n_copies, &dv)?;
            let h = het_m.get(n - 1, n - 1);
            let mut ok = h <= b + tol.bound;
            let mut worst: Option<f64> = None;
            if cfg.random_per_size > 0 {
                let trunc = reduced_moment_expansion(&t_moments, &basis, cfg.eps, &[n])?;
                for t in 0..cfg.random_per_size {
                    let mut rng = task_rng(seed.unwrap_or(0), stream(si, n, t));
                    let copies = 1 + t % cfg.max_copies;
                    let m = (trunc.modes() + cfg.extra_vacuum) * copies;
                    let meas =
                        if t % 2 == 0 { random_gaussian_measurement(m, &mut rng) } else { random_rotated_homodyne(m, &mut rng) };
                    let f = trunc.fim_under(&meas, cfg.extra_vacuum, copies)?.get(0, 0);
                    let bc = theorem2_bound(n, n, cfg.eps, copies, &dv)?;
                    ok &= f <= bc + tol.bound;
                    let r = f / bc;
                    worst = Some(worst.map_or(r, |x| x.max(r)));
                }
            }
            moments.push(MomentRow {
                n,
                direct: (n <= cfg.n_max).then(|| direct.get(n - 1, n - 1)),
                spade: (n <= cfg.n_max).then(|| spade.get(n - 1, n - 1)),
                het: h,
                random_max_ratio: worst,
                bound: b,
                pass: ok,
            });
        }
        Ok((size_row, moments))
    });

    let mut report = RunReport::default();
    let mut size_t = Table::new(
        "size",
        &["L", "heterodyne", "homodyne_x", "spade", "direct", "bound", "bound_allowed", "random_max_ratio", "pass"],
    );
    let mut mom_t = Table::new("moments", &["L", "n", "direct", "spade", "heterodyne", "random_max_ratio", "bound", "pass"]);
    let mut series: [Vec<f64>; 6] = Default::default();
    for res in per_size {
        let (s, ms) = res?;
        if !s.pass {
            report.violations += 1;
        }
        series[0].push(s.het);
        series[1].push(s.homx);
        series[2].push(s.spade);
        series[3].push(s.direct);
        size_t.push(vec![
            s.l.into(),
            s.het.into(),
            s.homx.into(),
            s.spade.into(),
            s.direct.into(),
            s.bound.into(),
            s.allowed.into(),
            s.random_max_ratio.into(),
            s.pass.into(),
        ]);
        for m in ms {
            if !m.pass {
                report.violations += 1;
            }
            if m.n == 2 {
                series[4].push(m.direct.unwrap_or(f64::NAN));
                series[5].push(m.spade.unwrap_or(f64::NAN));
            }
            mom_t.push(vec![
                s.l.into(),
                m.n.into(),
                m.direct.into(),
                m.spade.into(),
                m.het.into(),
                m.random_max_ratio.into(),
                m.bound.into(),
                m.pass.into(),
            ]);
        }
    }
    let mut slopes = Table::new("slopes", &["quantity", "slope", "intercept", "residual", "expected", "pass"]);
    let labels = [
        ("heterodyne_F_LL", 2.0),
        ("homodyne_x_F_LL", 2.0),
        ("spade_F_LL", 0.0),
        ("direct_F_LL", 2.0),
        ("direct_F_t2t2", 4.0),
        ("spade_F_t2t2", 2.0),
    ];
    if sizes.len() >= 4 {
        for ((name, expected), vals) in labels.iter().zip(&series) {
            if vals.len() != sizes.len() || vals.iter().any(|v| !(*v > 0.0)) {
                continue;
            }
            let fit = scaling_exponent_fit(&sizes, vals)?;
            let ok = (fit.slope - expected).abs() <= tol.slope;
            report.checks.push(Check {
                name: format!("slope_{name}"),
                pass: ok,
                detail: format!("slope {:.4} vs {expected} ± {}", fit.slope, tol.slope),
            });
            slopes.push(vec![
                (*name).into(),
                fit.slope.into(),
                fit.intercept.into(),
                fit.residual.into(),
                (*expected).into(),
                Cell::Bool(ok),
            ]);
        }
    }
    report.checks.push(Check {
        name: "superres_bounds".into(),
        pass: report.violations == 0,
        detail: format!("{} rows exceed a bound", report.violations),
    });
    report.tables.extend([size_t, mom_t, slopes]);
    Ok(report)
}

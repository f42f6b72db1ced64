//! Single-lens Gaussian-measurement bound on the two-point size.

use gimlab_core::fisher::single_lens_gaussian_bound;
use gimlab_core::measure::random_gaussian_measurement;
use gimlab_core::superres::{reduced_scene, two_point_gaussian_bound, Grid, Psf, SceneParams, SourceScene};
use gimlab_core::Execution;
use nalgebra::DMatrix;

use crate::config::{SingleLensConfig, Tolerances};
use crate::error::LabResult;
use crate::rng::task_rng;
use crate::table::{Cell, Check, RunReport, Table};

pub(crate) fn scene_for(eps: f64, size: f64, psf: &Psf, spec: Option<gimlab_core::superres::GridSpec>) -> LabResult<SourceScene> {
    let grid = match spec {
        Some(s) => Grid::from_spec(s, 0.0)?,
        None => Grid::for_psf(psf, 0.0, size),
    };
    Ok(SourceScene::two_point_on(eps, size, psf.clone(), grid)?)
}

fn doubled(a: &DMatrix<f64>) -> DMatrix<f64> {
    let r = a.nrows();
    let mut out = DMatrix::zeros(2 * r, 2 * r);
    out.view_mut((0, 0), (r, r)).copy_from(a);
    out.view_mut((r, r), (r, r)).copy_from(a);
    out
}

pub fn run(cfg: &SingleLensConfig, tol: &Tolerances, seed: Option<u64>, exec: Execution) -> LabResult<RunReport> {
    let psf = Psf::gaussian(cfg.sigma)?;
    let sizes = cfg.sizes.values();
    type Row = (String, f64, f64);
    let per_size = exec.map_indexed(sizes.len(), |si| -> LabResult<(f64, f64, f64, Vec<Row>)> {
        let l = sizes[si];
        let scene = scene_for(cfg.eps, l, &psf, cfg.grid)?;
        let red = reduced_scene(&scene, SceneParams::Size)?;
        let bound = single_lens_gaussian_bound(&doubled(&red.dgamma[0]), cfg.n_copies);
        let tp = two_point_gaussian_bound(cfg.eps, l, cfg.sigma, cfg.n_copies)?;
        let mut rows = vec![
            ("heterodyne".to_string(), red.heterodyne_fim(cfg.n_copies)?.get(0, 0), 0.0),
            ("homodyne_x".to_string(), red.homodyne_x_fim(cfg.n_copies)?.get(0, 0), 0.0),
        ];
        for t in 0..cfg.random_per_size {
            let mut rng = task_rng(seed.unwrap_or(0), ((si as u64) << 20) + t as u64);
            let meas = random_gaussian_measurement(red.modes() + 1, &mut rng);
            let f = red.fim_under(&meas, 1, 1)?.with_copies(cfg.n_copies);
            rows.push((format!("random_{t}"), f.get(0, 0), 0.0));
        }
        for r in &mut rows {
            r.2 = bound - r.1;
        }
        Ok((l, bound, tp, rows))
    });
    let mut t = Table::new("bounds", &["L", "measurement", "F_LL", "single_lens_bound", "two_point_bound", "slack", "pass"]);
    let mut fails = 0;
    for res in per_size {
        let (l, bound, tp, rows) = res?;
        for (name, f, slack) in rows {
            let ok = f <= bound + tol.bound;
            if !ok {
                fails += 1;
            }
            t.push(vec![l.into(), name.into(), f.into(), bound.into(), tp.into(), slack.into(), Cell::Bool(ok)]);
        }
    }
    let mut report = RunReport { violations: fails, ..Default::default() };
    report.checks.push(Check {
        name: "single_lens_dominance".into(),
        pass: fails == 0,
        detail: format!("{fails} rows exceed the single-lens bound"),
    });
    report.tables.push(t);
    Ok(report)
}

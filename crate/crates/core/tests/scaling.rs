use gimlab_core::measure::spade_basis;
use gimlab_core::superres::*;

fn log_sizes() -> Vec<f64> {
    (0..7).map(|i| 1e-3 * 10f64.powf(i as f64 / 3.0)).collect()
}

fn two_point(size: f64) -> (SourceScene, Psf, Grid) {
    let psf = Psf::gaussian(1.0).unwrap();
    let grid = Grid::for_psf(&psf, 0.0, size);
    (SourceScene::two_point_on(0.1, size, psf.clone(), grid.clone()).unwrap(), psf, grid)
}

#[test]
fn gaussian_measurements_lose_size_information_quadratically() {
    let sizes = log_sizes();
    let mut het = Vec::new();
    let mut hom = Vec::new();
    for &l in &sizes {
        let (s, _, _) = two_point(l);
        let red = reduced_scene(&s, SceneParams::Size).unwrap();
        het.push(red.heterodyne_fim(1).unwrap().get(0, 0));
        hom.push(red.homodyne_x_fim(1).unwrap().get(0, 0));
    }
    let fh = scaling_exponent_fit(&sizes, &het).unwrap();
    let fx = scaling_exponent_fit(&sizes, &hom).unwrap();
    println!("heterodyne slope {:.4}, homodyne slope {:.4}", fh.slope, fx.slope);
    assert!((fh.slope - 2.0).abs() < 0.1);
    assert!((fx.slope - 2.0).abs() < 0.1);
}

#[test]
fn spade_keeps_size_information() {
    let sizes = log_sizes();
    let vals: Vec<f64> = sizes
        .iter()
        .map(|&l| {
            let (s, psf, grid) = two_point(l);
            let basis = spade_basis(&psf, &grid, 0.0, l, 3).unwrap();
            spade_fim_size(&s, &basis, 1).unwrap().get(0, 0)
        })
        .collect();
    let f = scaling_exponent_fit(&sizes, &vals).unwrap();
    println!("spade slope {:.4} {:?}", f.slope, vals);
    assert!(f.slope.abs() < 0.1);
}

#[test]
fn moment_information_exponents() {
    let sizes = log_sizes();
    let mut direct = Vec::new();
    let mut spade = Vec::new();
    for &l in &sizes {
        let (s, psf, grid) = two_point(l);
        direct.push(direct_imaging_fim_moments(&s, 2, 1).unwrap().get(1, 1));
        let basis = spade_basis(&psf, &grid, 0.0, l, 3).unwrap();
        spade.push(spade_fim_moments(&s, &basis, 2, 1).unwrap().get(1, 1));
    }
    let fd = scaling_exponent_fit(&sizes, &direct).unwrap();
    let fs = scaling_exponent_fit(&sizes, &spade).unwrap();
    println!("direct t2 slope {:.4}, spade t2 slope {:.4}", fd.slope, fs.slope);
    assert!((fd.slope - 4.0).abs() < 0.1);
    assert!((fs.slope - 2.0).abs() < 0.1);
}

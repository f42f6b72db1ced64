use gimlab_core::measure::{random_gaussian_measurement, random_rotated_homodyne, spade_basis};
use gimlab_core::superres::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn random_measurements_respect_moment_bounds() {
    let psf = Psf::gaussian(1.0).unwrap();
    let eps = 0.1;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = f64::NEG_INFINITY;
    for &l in &[1e-3, 1e-2, 1e-1] {
        let grid = Grid::for_psf(&psf, 0.0, l);
        let basis = spade_basis(&psf, &grid, 0.0, l, 3).unwrap();
        let scene = SourceScene::two_point_on(eps, l, psf.clone(), grid).unwrap();
        let t = scene.moments(2 * basis.expansion_order());
        let dv = scene_derivative_vectors(&scene, 3).unwrap();
        for n in 0..=3 {
            let red = reduced_moment_expansion(&t, &basis, eps, &[n]).unwrap();
            for copies in 1..=3 {
                let bound = theorem2_bound(n, n, eps, copies, &dv).unwrap();
                for trial in 0..10 {
                    let m = (red.modes() + 1) * copies;
                    let meas = if trial % 2 == 0 {
                        random_gaussian_measurement(m, &mut rng)
                    } else {
                        random_rotated_homodyne(m, &mut rng)
                    };
                    let f = red.fim_under(&meas, 1, copies).unwrap().get(0, 0);
                    worst = worst.max(f - bound);
                    assert!(f <= bound + 1e-8, "n={n} L={l} N={copies}: {f} > {bound}");
                }
            }
        }
    }
    println!("max excess {worst:e}");
}

#[test]
fn random_measurements_respect_two_point_bound() {
    let psf = Psf::gaussian(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for &l in &[1e-3, 1e-2, 1e-1] {
        let grid = Grid::for_psf(&psf, 0.0, l);
        let scene = SourceScene::two_point_on(0.1, l, psf.clone(), grid).unwrap();
        let red = reduced_scene(&scene, SceneParams::Size).unwrap();
        let bound = two_point_gaussian_bound(0.1, l, 1.0, 1).unwrap() * (1.0 + 2.0 * l);
        for _ in 0..30 {
            let meas = random_gaussian_measurement(red.modes() + 1, &mut rng);
            let f = red.fim_under(&meas, 1, 1).unwrap().get(0, 0);
            assert!(f <= bound, "L={l}: {f} > {bound}");
        }
        assert!(red.heterodyne_fim(1).unwrap().get(0, 0) <= bound);
    }
}

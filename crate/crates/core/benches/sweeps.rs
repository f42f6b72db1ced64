use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gimlab_core::fisher::fim_gaussian;
use gimlab_core::gstate::{copies_of_matrix, two_lens_derivatives, two_lens_state};
use gimlab_core::measure::{random_gaussian_measurement, spade_basis};
use gimlab_core::superres::{reduced_scene, spade_fim_size, Grid, Psf, SceneParams, SourceScene};
use gimlab_core::Execution;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn strategies() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn random_two_lens_batch(c: &mut Criterion) {
    let state = two_lens_state(0.1, 0.6, 0.4).unwrap();
    let copies = 4;
    let v = copies_of_matrix(state.covariance(), copies);
    let d: Vec<_> = two_lens_derivatives(0.1, 0.6, 0.4).iter().map(|x| copies_of_matrix(x, copies)).collect();
    let mut group = c.benchmark_group("two_lens_random_povms");
    for (name, exec) in strategies() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                exec.map_indexed(256, |i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
                    let m = random_gaussian_measurement(2 * copies, &mut rng);
                    let (_, cov) = m.outcome_moments(&DVector::zeros(v.nrows()), &v).unwrap();
                    let dc: Vec<_> = d.iter().map(|x| m.project_derivative(x).unwrap()).collect();
                    fim_gaussian(&cov, &dc, &["|g|", "theta"], 1).unwrap().get(0, 0)
                })
            })
        });
    }
    group.finish();
}

fn superres_size_sweep(c: &mut Criterion) {
    let psf = Psf::gaussian(1.0).unwrap();
    let sizes: Vec<f64> = (0..16).map(|i| 1e-3 * 10f64.powf(i as f64 / 7.5)).collect();
    let mut group = c.benchmark_group("superres_size_sweep");
    group.sample_size(20);
    for (name, exec) in strategies() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                exec.map(&sizes, |&l| {
                    let grid = Grid::for_psf(&psf, 0.0, l);
                    let scene = SourceScene::two_point_on(0.1, l, psf.clone(), grid.clone()).unwrap();
                    let basis = spade_basis(&psf, &grid, 0.0, l, 3).unwrap();
                    let het = reduced_scene(&scene, SceneParams::Size).unwrap().heterodyne_fim(1).unwrap().get(0, 0);
                    (het, spade_fim_size(&scene, &basis, 1).unwrap().get(0, 0))
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, random_two_lens_batch, superres_size_sweep);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fracharm::fractional_laplacian::{frac_laplacian_point, FlOptions, FracOrder};
use fracharm::green_ball::{green_kernel, BallQuadrature, GreenParams, KernelPath};
use fracharm::par;
use fracharm::span_harness::{jet_matrix, kprime, random_dictionary, BlockContext, DictOptions, OperatorSpec};
use std::hint::black_box;

fn modes() -> [(&'static str, bool); 2] {
    [("parallel", false), ("sequential", true)]
}

fn frac_laplacian_2d(c: &mut Criterion) {
    let ord = FracOrder::new(0.5).unwrap();
    let o = FlOptions { support_radius: Some(8.0), ..Default::default() };
    let u = |x: &[f64]| (-(x[0] * x[0] + x[1] * x[1])).exp();
    let mut g = c.benchmark_group("frac_laplacian_2d");
    for (name, seq) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::force_sequential(seq);
            b.iter(|| frac_laplacian_point(&u, black_box(&[0.2, -0.1]), &ord, &o).unwrap());
        });
    }
    par::force_sequential(false);
    g.finish();
}

fn green_solve(c: &mut Criterion) {
    let gp = GreenParams::new(2, 0.5).unwrap();
    let q = BallQuadrature::smooth(2, 1.0).unwrap();
    let mut g = c.benchmark_group("green_integral_2d");
    g.sample_size(10);
    for (name, seq) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::force_sequential(seq);
            b.iter(|| {
                q.integrate(|y| {
                    let x = [0.3, 0.1];
                    if (y[0] - x[0]).hypot(y[1] - x[1]) < 1e-12 {
                        0.0
                    } else {
                        green_kernel(&x, y, &gp, KernelPath::Series).unwrap()
                    }
                })
            });
        });
    }
    par::force_sequential(false);
    g.finish();
}

fn span_dictionary(c: &mut Criterion) {
    let ctx = BlockContext::new(OperatorSpec::toy()).unwrap();
    let o = DictOptions::default();
    let count = o.oversample * kprime(3, 3);
    let mut g = c.benchmark_group("span_dictionary");
    g.sample_size(10);
    for (name, seq) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::force_sequential(seq);
            b.iter(|| {
                let blocks = random_dictionary(&ctx, count, &o).unwrap();
                jet_matrix(&blocks, 3).unwrap()
            });
        });
    }
    par::force_sequential(false);
    g.finish();
}

criterion_group!(benches, frac_laplacian_2d, green_solve, span_dictionary);
criterion_main!(benches);

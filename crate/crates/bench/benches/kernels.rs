//! Microbenchmarks for the kernels the flow leans on: the Jacobi
//! eigendecomposition, the three Lyapunov routes, the matrix exponential,
//! and the integrator itself at the experiment's dimension.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use polarflow::rng::SplitMix;
use polarflow::{
    compute_omega, determinant, integrate, mat_exp, polar_oracle, polar_via_flow, solve_lyapunov,
    solve_lyapunov_kron, solve_lyapunov_skew, sym_eig, FlowOptions, LyapunovSystem, MongeInstance,
    SpdMatrix, SquareMatrix,
};

fn random_square(rng: &mut SplitMix, n: usize) -> SquareMatrix {
    SquareMatrix::from_fn(n, |_, _| rng.standard_normal())
}

/// MMᵀ + I/2: SPD with spectrum bounded away from zero.
fn random_spd(rng: &mut SplitMix, n: usize) -> SpdMatrix {
    let m = random_square(rng, n);
    let gram = &(&m * &m.transpose()) + &SquareMatrix::identity(n).scaled(0.5);
    SpdMatrix::new(gram.sym_part()).expect("a Gram matrix plus I/2 is SPD")
}

/// A standard-normal draw kept only when safely inside the identity component.
fn det_positive(rng: &mut SplitMix, n: usize) -> SquareMatrix {
    loop {
        let a = random_square(rng, n);
        if determinant(&a) > 0.3 {
            return a;
        }
    }
}

fn bench_sym_eig(c: &mut Criterion) {
    let mut group = c.benchmark_group("sym_eig");
    let mut rng = SplitMix::new(0x5EED);
    for n in [2usize, 4, 8] {
        let s = random_spd(&mut rng, n).base().clone();
        group.bench_function(format!("n{n}"), |b| {
            b.iter(|| sym_eig(black_box(&s)).expect("input is symmetric"));
        });
    }
    group.finish();
}

/// The Σ eigendecomposition is cached in the system, so these time only the
/// solve itself: rotate, divide (or back-substitute n² unknowns), rotate back.
fn bench_lyapunov(c: &mut Criterion) {
    let mut group = c.benchmark_group("lyapunov_n4");
    let mut rng = SplitMix::new(0xC0FFEE);
    let sigma = random_spd(&mut rng, 4);
    let m = random_square(&mut rng, 4);
    let sys = LyapunovSystem::new(sigma.clone(), m.clone()).expect("dimensions agree");
    group.bench_function("spectral", |b| {
        b.iter(|| solve_lyapunov(black_box(&sys)));
    });
    group.bench_function("kronecker", |b| {
        b.iter(|| solve_lyapunov_kron(black_box(&sys)).expect("n = 4 is under the cap"));
    });
    let d = &m - &m.transpose();
    group.bench_function("skew", |b| {
        b.iter(|| solve_lyapunov_skew(black_box(&sigma), black_box(&d)));
    });
    group.finish();
}

fn bench_mat_exp(c: &mut Criterion) {
    let mut group = c.benchmark_group("mat_exp_n4");
    let mut rng = SplitMix::new(0xE1);
    let m = random_square(&mut rng, 4);
    // Below the scaling threshold the series alone is evaluated; far above it
    // the squaring chain dominates.
    let mild = m.scaled(0.3 / m.frobenius_norm());
    let wide = m.scaled(40.0 / m.frobenius_norm());
    group.bench_function("series_only", |b| {
        b.iter(|| mat_exp(black_box(&mild)));
    });
    group.bench_function("scaled_and_squared", |b| {
        b.iter(|| mat_exp(black_box(&wide)));
    });
    group.finish();
}

fn bench_flow(c: &mut Criterion) {
    let mut group = c.benchmark_group("flow");
    let mut rng = SplitMix::new(0xF10);
    let a = det_positive(&mut rng, 2);
    let inst = MongeInstance::new(a, SpdMatrix::identity(2)).expect("det > 0");
    group.bench_function("omega_n2", |b| {
        b.iter(|| compute_omega(black_box(inst.a()), black_box(&inst)).expect("A is on the fiber"));
    });
    let opts = FlowOptions { record_every: 300, ..FlowOptions::default() };
    group.bench_function("trajectory_n2", |b| {
        b.iter(|| integrate(black_box(&inst), black_box(&opts)).expect("the flow stays on"));
    });
    group.finish();
}

fn bench_polar(c: &mut Criterion) {
    let mut group = c.benchmark_group("polar_n3");
    let mut rng = SplitMix::new(0x90);
    let a = det_positive(&mut rng, 3);
    let inst = MongeInstance::new(a, SpdMatrix::identity(3)).expect("det > 0");
    group.bench_function("oracle", |b| {
        b.iter(|| polar_oracle(black_box(&inst)).expect("the instance is well posed"));
    });
    let opts = FlowOptions { max_steps: 20_000, ..FlowOptions::default() };
    group.bench_function("flow", |b| {
        b.iter(|| polar_via_flow(black_box(&inst), black_box(&opts)).expect("the budget is ample"));
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_sym_eig,
    bench_lyapunov,
    bench_mat_exp,
    bench_flow,
    bench_polar
);
criterion_main!(benches);

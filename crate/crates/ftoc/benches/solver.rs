//! Benchmarks for the horizon solver (serial vs parallel stage execution)
//! and for the inner stage-QP engine (factorization and one cold solve).
//!
//! The parallel variants measure whatever the build provides: with the
//! `parallel` feature they run stage subproblems on a rayon pool, without
//! it they fall back to the same sequential schedule, so comparing the
//! two feature configurations (or worker counts on a multi-core machine)
//! shows exactly what the data parallelism buys.

use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ftoc::bench::{generate, GeneratorSpec};
use ftoc::model::{assemble_stage_qp, ConsensusPair, StageCoupling, StageRole};
use ftoc::qp3split::{self, InnerConfig};
use ftoc::timesplit::{solve_ftoc, ExecMode, OuterConfig};

fn horizon_solves(c: &mut Criterion) {
    let mut group = c.benchmark_group("horizon_solve");
    group
        .sample_size(10)
        .warm_up_time(Duration::from_secs(1))
        .measurement_time(Duration::from_secs(8));
    let shapes = [
        ("n10_m10_N10", 10usize, 10usize, 10usize, 15.0f64),
        ("n20_m10_N30", 20, 10, 30, 25.0),
    ];
    for (label, n, m, horizon, rho) in shapes {
        let (p, _) = generate(&GeneratorSpec::new(n, m, horizon, 42));
        let modes = [
            ("serial", ExecMode::Serial),
            ("workers2", ExecMode::Parallel(2)),
            ("workers4", ExecMode::Parallel(4)),
        ];
        for (mode, exec) in modes {
            let mut cfg = OuterConfig::new(rho);
            cfg.exec = exec;
            group.bench_with_input(BenchmarkId::new(mode, label), &p, |b, p| {
                b.iter(|| solve_ftoc(p, cfg).unwrap());
            });
        }
    }
    group.finish();
}

fn stage_qp(c: &mut Criterion) {
    // a representative middle-stage QP from the benchmark shape, with
    // arbitrary (but fixed) consensus coupling data
    let (p, _) = generate(&GeneratorSpec::new(10, 10, 10, 42));
    let rho = 15.0;
    let z_cur = vec![0.05; p.n];
    let w_cur = vec![0.01; p.n];
    let z_next = vec![-0.04; p.n];
    let v_next = vec![0.02; p.n];
    let coupling = StageCoupling {
        current: Some(ConsensusPair {
            consensus: &z_cur,
            dual: &w_cur,
        }),
        next: Some(ConsensusPair {
            consensus: &z_next,
            dual: &v_next,
        }),
    };
    let role = StageRole::for_stage(p.horizon / 2, p.horizon).unwrap();
    let qp = assemble_stage_qp(&p, role, rho, &coupling).unwrap();

    let mut group = c.benchmark_group("stage_qp");
    group.bench_function("prefactor", |b| {
        b.iter(|| qp3split::prefactor(&qp, rho).unwrap())
    });
    let f = qp3split::prefactor(&qp, rho).unwrap();
    let cfg = InnerConfig::new(rho);
    group.bench_function("cold_solve", |b| {
        b.iter(|| qp3split::solve_prefactored(&qp, &f, &cfg, None))
    });
    group.finish();
}

criterion_group!(benches, horizon_solves, stage_qp);
criterion_main!(benches);

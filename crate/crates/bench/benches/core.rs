use std::hint::black_box;

use cpamm::arb::grid_best_gain;
use cpamm::harness::{check_trace, gen_trace, GenConfig};
use cpamm::txn::{apply_swap, Swap};
use cpamm::{constprod, replay, solve_arbitrage, sqrt_approx, ConstProd, NonNeg, Pos, TokenId};
use cpamm_bench::{example_oracle, example_pool, example_state, generated_trace, TRADER};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_numerics(c: &mut Criterion) {
    let v = NonNeg::from_ratio(123_456_789, 1_000_003).unwrap();
    let tol = cpamm::numerics::default_sqrt_tol();
    c.bench_function("sqrt_approx", |b| {
        b.iter(|| sqrt_approx(black_box(&v), &tol))
    });

    let x = Pos::from_ratio(7, 3).unwrap();
    let r_in = Pos::from_ratio(18_001, 1000).unwrap();
    let r_out = Pos::from_ratio(6_007, 1000).unwrap();
    c.bench_function("constprod", |b| {
        b.iter(|| constprod(black_box(&x), &r_in, &r_out))
    });
}

fn bench_swap(c: &mut Criterion) {
    let s = example_state();
    let sw = Swap {
        account: TRADER,
        input: TokenId(1),
        output: TokenId(0),
        x: Pos::from_integer(3),
    };
    c.bench_function("apply_swap", |b| {
        b.iter(|| apply_swap(black_box(&s), &sw, &ConstProd).unwrap())
    });
}

fn bench_arbitrage(c: &mut Criterion) {
    let s = example_state();
    let o = example_oracle();
    let m = example_pool();
    c.bench_function("solve_arbitrage", |b| {
        b.iter(|| solve_arbitrage(black_box(&s), TRADER, &o, m).unwrap())
    });
    c.bench_function("grid_best_gain_1000", |b| {
        b.iter(|| grid_best_gain(black_box(&s), TRADER, &o, TokenId(1), TokenId(0), 1000).unwrap())
    });
}

fn bench_traces(c: &mut Criterion) {
    let mut group = c.benchmark_group("trace");
    for steps in [10usize, 50] {
        let trace = generated_trace(1, steps);
        group.bench_with_input(BenchmarkId::new("replay", steps), &trace, |b, t| {
            b.iter(|| replay(black_box(t), &ConstProd).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("check", steps), &trace, |b, t| {
            b.iter(|| check_trace(black_box(t), &ConstProd))
        });
        let cfg = GenConfig {
            seed: 1,
            n_steps: steps,
            ..GenConfig::default()
        };
        group.bench_with_input(BenchmarkId::new("gen", steps), &cfg, |b, cfg| {
            b.iter(|| gen_trace(black_box(cfg)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_numerics,
    bench_swap,
    bench_arbitrage,
    bench_traces
);
criterion_main!(benches);

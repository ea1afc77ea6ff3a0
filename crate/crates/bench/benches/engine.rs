use butfpi_bench::{array_program, map_program, nested_program};
use butfpi_core::butf::eval;
use butfpi_core::correspondence::{initial_config, root};
use butfpi_core::epi::{explore, run, ExploreOptions, Policy, RunOptions};
use butfpi_core::{translate, TranslationOptions};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

const SIZES: [usize; 3] = [4, 16, 64];

fn bench_eval(c: &mut Criterion) {
    let mut g = c.benchmark_group("eval");
    for n in SIZES {
        let e = map_program(n);
        g.bench_with_input(BenchmarkId::new("map", n), &e, |b, e| {
            b.iter(|| eval(black_box(e), 1_000_000).unwrap())
        });
    }
    g.finish();
}

fn bench_translate(c: &mut Criterion) {
    let mut g = c.benchmark_group("translate");
    let opts = TranslationOptions::default();
    for n in SIZES {
        let e = nested_program(n);
        g.bench_with_input(BenchmarkId::new("nested", n), &e, |b, e| {
            b.iter(|| translate(black_box(e), &root(), &opts))
        });
    }
    g.finish();
}

fn bench_run(c: &mut Criterion) {
    let mut g = c.benchmark_group("run");
    g.sample_size(20);
    let opts = TranslationOptions::default();
    for n in SIZES {
        for (name, e) in [("map", map_program(n)), ("array", array_program(n))] {
            let config = initial_config(&e, &opts).unwrap();
            g.bench_with_input(BenchmarkId::new(name, n), &config, |b, cfg| {
                b.iter(|| run(cfg.clone(), Policy::SeededRandom(0), &RunOptions::default()))
            });
        }
    }
    g.finish();
}

fn bench_explore(c: &mut Criterion) {
    let mut g = c.benchmark_group("explore");
    g.sample_size(10);
    let opts = TranslationOptions::default();
    for n in [1, 2, 3] {
        let config = initial_config(&array_program(n), &opts).unwrap();
        g.bench_with_input(BenchmarkId::new("array", n), &config, |b, cfg| {
            b.iter(|| explore(cfg, &ExploreOptions::default()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_eval, bench_translate, bench_run, bench_explore);
criterion_main!(benches);

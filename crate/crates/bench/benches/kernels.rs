use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use limpet_core::bands::{compute_bands, edge_count};
use limpet_core::cocycle::{lyapunov_periodic, monodromy_scaled};
use limpet_core::construct::{niceness_census, InductionParams};
use limpet_core::Potential;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_potential(n: usize, seed: u64) -> Potential {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Potential::new((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
}

fn transfer(c: &mut Criterion) {
    let mut g = c.benchmark_group("monodromy");
    for n in [64, 1024, 16384] {
        let v = random_potential(n, 1);
        g.bench_with_input(BenchmarkId::from_parameter(n), &v, |b, v| {
            b.iter(|| monodromy_scaled(black_box(0.3), v))
        });
    }
    g.finish();

    let v = random_potential(1024, 2);
    c.bench_function("lyapunov_periodic/1024", |b| {
        b.iter(|| lyapunov_periodic(black_box(0.7), &v))
    });
}

fn bands(c: &mut Criterion) {
    let mut g = c.benchmark_group("edge_count");
    for n in [64, 1024, 16384] {
        let v = random_potential(n, 3);
        g.bench_with_input(BenchmarkId::from_parameter(n), &v, |b, v| {
            b.iter(|| edge_count(v, black_box(0.1)))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("compute_bands");
    g.sample_size(10);
    for n in [16, 128, 512] {
        let v = random_potential(n, 4);
        g.bench_with_input(BenchmarkId::from_parameter(n), &v, |b, v| {
            b.iter(|| compute_bands(v, 1.0).unwrap())
        });
    }
    g.finish();
}

fn census(c: &mut Criterion) {
    let w1 = Potential::new(vec![1.0, -1.0]).unwrap();
    let w2 = Potential::new(vec![1.5, -1.5]).unwrap();
    let members = [w1, w2];
    let params = InductionParams::new(2, 32, 2, 3.0).unwrap();
    c.bench_function("niceness_census/m2_r8", |b| {
        b.iter(|| niceness_census(&members, &params, black_box(0.0), 1.0, 3.0).unwrap())
    });
}

criterion_group!(benches, transfer, bands, census);
criterion_main!(benches);

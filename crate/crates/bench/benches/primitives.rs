use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use qds_bench::{hash_params, message};
use qds_core::gf2::{is_irreducible, sample_irreducible};
use qds_core::otuh::naive_toeplitz_matrix;
use qds_core::{Gf2Poly, QdsRng};

fn hashing(c: &mut Criterion) {
    let mut g = c.benchmark_group("toeplitz_hash");
    for bits in [1 << 10, 1 << 16, 1 << 20] {
        let params = hash_params(128, 1);
        let doc = message(bits, 2);
        g.throughput(Throughput::Bytes(bits as u64 / 8));
        g.bench_with_input(BenchmarkId::from_parameter(bits), &doc, |b, doc| {
            b.iter(|| params.fresh_copy().toeplitz_hash(black_box(doc)).unwrap())
        });
    }
    g.finish();

    // Reference path: materialized matrix, small sizes only.
    let params = hash_params(64, 3);
    let doc = message(1024, 4);
    c.bench_function("naive_toeplitz_1024x64", |b| {
        b.iter(|| naive_toeplitz_matrix(&params, 1024).unwrap().mul_vec(black_box(&doc)).unwrap())
    });
}

fn irreducibility(c: &mut Criterion) {
    let p = Gf2Poly::from_exponents(&[128, 29, 27, 2, 0]);
    c.bench_function("is_irreducible_128", |b| b.iter(|| is_irreducible(black_box(&p))));

    let mut g = c.benchmark_group("sample_irreducible");
    g.sample_size(20);
    for n in [64, 128, 256] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            let mut rng = QdsRng::seeded(9);
            b.iter(|| sample_irreducible(n, &mut rng).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, hashing, irreducibility);
criterion_main!(benches);

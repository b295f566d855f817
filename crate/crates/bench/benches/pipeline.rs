//! Hot-path timings: the block sort, the recoding stages, the entropy coder,
//! and the end-to-end codec on the default synthetic corpus.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smrc_core::transform::{bwt, mtf, rle};
use smrc_core::{
    ac_decode, ac_encode, build_freq_model, compress, decompress, generate_synthetic, CodecConfig,
    SyntheticSpec,
};
use std::hint::black_box;

/// Small-alphabet sequence with plenty of runs, like post-sort cluster data.
fn runny_sequence(len: usize, alphabet: u32, seed: u64) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(len);
    let mut current = 0u32;
    while out.len() < len {
        if rng.gen_bool(0.3) {
            current = rng.gen_range(0..alphabet);
        }
        out.push(current);
    }
    out
}

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("transforms");
    for &len in &[4_096usize, 16_384] {
        let seq = runny_sequence(len, 48, 7);
        group.throughput(Throughput::Elements(len as u64));

        group.bench_with_input(BenchmarkId::new("bwt_forward", len), &seq, |b, s| {
            b.iter(|| bwt::bwt_forward(black_box(s)).unwrap())
        });

        let block = bwt::bwt_forward(&seq).unwrap();
        group.bench_with_input(BenchmarkId::new("bwt_inverse", len), &block, |b, s| {
            b.iter(|| bwt::bwt_inverse(black_box(s)).unwrap())
        });

        group.bench_with_input(BenchmarkId::new("mtf_forward", len), &seq, |b, s| {
            b.iter(|| mtf::mtf_forward(black_box(s)).unwrap())
        });

        let coded = mtf::mtf_forward(&seq).unwrap();
        group.bench_with_input(BenchmarkId::new("rle_dynamic", len), &coded.indices, |b, s| {
            b.iter(|| rle::rle_encode_dynamic(black_box(s), 3, 49).unwrap())
        });
    }
    group.finish();
}

fn coder(c: &mut Criterion) {
    let mut group = c.benchmark_group("coder");
    let seq = runny_sequence(16_384, 48, 11);
    let model = build_freq_model(&seq).unwrap().fit_for_coding();
    group.throughput(Throughput::Elements(seq.len() as u64));

    group.bench_function("encode_16k", |b| {
        b.iter(|| ac_encode(black_box(&seq), &model).unwrap())
    });

    let bits = ac_encode(&seq, &model).unwrap();
    group.bench_function("decode_16k", |b| {
        b.iter(|| ac_decode(black_box(&bits), &model, seq.len()).unwrap())
    });
    group.finish();
}

fn codec(c: &mut Criterion) {
    let streams = generate_synthetic(&SyntheticSpec::default()).unwrap();
    let config = CodecConfig::default();
    let symbols: usize = streams.iter().map(|s| s.len()).sum();

    let mut group = c.benchmark_group("codec");
    group.sample_size(10);
    group.throughput(Throughput::Elements(symbols as u64));

    group.bench_function("compress_corpus", |b| {
        b.iter(|| compress(black_box(&streams), &config).unwrap())
    });

    let archive = compress(&streams, &config).unwrap();
    group.bench_function("decompress_corpus", |b| {
        b.iter(|| decompress(black_box(&archive)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, transforms, coder, codec);
criterion_main!(benches);

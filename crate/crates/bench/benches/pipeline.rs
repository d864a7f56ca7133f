use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ksum_bench::{name, rng, sentence, vector};
use ksum_core::eval::{default_tokenizer, rouge_all};
use ksum_core::oracle::{map_article, OracleConfig, TokenF1Similarity};
use ksum_core::retriever::normalized_levenshtein;
use ksum_core::rewriter::{fuse_embeddings, LayerNorm, LN_EPS};
use ksum_core::synth;
use std::hint::black_box;

fn levenshtein(c: &mut Criterion) {
    let mut g = c.benchmark_group("normalized_levenshtein");
    for len in [8, 32, 128] {
        let mut r = rng(1);
        let (a, b) = (name(&mut r, len), name(&mut r, len));
        g.bench_with_input(BenchmarkId::from_parameter(len), &(a, b), |bench, (a, b)| {
            bench.iter(|| normalized_levenshtein(black_box(a), black_box(b)).unwrap())
        });
    }
    g.finish();
}

fn rouge(c: &mut Criterion) {
    let tok = default_tokenizer();
    let mut g = c.benchmark_group("rouge_all");
    for words in [50, 500] {
        let mut r = rng(2);
        let (a, b) = (sentence(&mut r, words, 200), sentence(&mut r, words, 200));
        g.bench_with_input(BenchmarkId::from_parameter(words), &(a, b), |bench, (a, b)| {
            bench.iter(|| rouge_all(black_box(a), black_box(b), &tok).unwrap())
        });
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let mut r = rng(3);
    let games: Vec<_> = (0..20).map(|i| synth::random_game(&mut r, &format!("b{i}"))).collect();
    let sim = TokenF1Similarity::default();
    let cfg = OracleConfig::default();
    c.bench_function("map_article/20_games", |bench| {
        bench.iter(|| games.iter().map(|g| map_article(black_box(g), &sim, &cfg).len()).sum::<usize>())
    });
}

fn fusion(c: &mut Criterion) {
    let mut g = c.benchmark_group("fuse_embeddings");
    for dim in [64, 768] {
        let mut r = rng(4);
        let parts: Vec<Vec<f64>> = (0..4).map(|_| vector(&mut r, dim)).collect();
        let ln = LayerNorm { gain: vec![1.0; dim], offset: vec![0.0; dim], eps: LN_EPS };
        g.bench_with_input(BenchmarkId::from_parameter(dim), &parts, |bench, p| {
            bench.iter(|| fuse_embeddings(&p[0], &p[1], Some(&p[2]), Some(&p[3]), black_box(&ln)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, levenshtein, rouge, oracle, fusion);
criterion_main!(benches);

//! Parse and format throughput over generated corpora.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use draftflow_core::{format, parse, random_corpus};

fn corpus_bytes(corpus: &[String]) -> u64 {
    corpus.iter().map(|s| s.len() as u64).sum()
}

fn bench_parse(c: &mut Criterion) {
    let corpus = random_corpus(11, 64, 40);
    let mut group = c.benchmark_group("parse");
    group.throughput(Throughput::Bytes(corpus_bytes(&corpus)));
    group.bench_function("corpus_64", |b| {
        b.iter(|| {
            for src in &corpus {
                std::hint::black_box(parse(src).expect("corpus parses"));
            }
        })
    });
    group.finish();
}

fn bench_format(c: &mut Criterion) {
    let corpus = random_corpus(11, 64, 40);
    let programs: Vec<_> = corpus
        .iter()
        .map(|s| parse(s).expect("corpus parses"))
        .collect();
    c.bench_function("format/corpus_64", |b| {
        b.iter(|| {
            for p in &programs {
                std::hint::black_box(format(p));
            }
        })
    });
}

fn bench_roundtrip(c: &mut Criterion) {
    let corpus = random_corpus(12, 16, 40);
    c.bench_function("roundtrip/corpus_16", |b| {
        b.iter_batched(
            || corpus.clone(),
            |corpus| {
                for src in corpus {
                    let p = parse(&src).expect("parses");
                    let q = parse(&format(&p)).expect("reparses");
                    std::hint::black_box(q);
                }
            },
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, bench_parse, bench_format, bench_roundtrip);
criterion_main!(benches);

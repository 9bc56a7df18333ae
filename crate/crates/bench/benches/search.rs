use std::hint::black_box;

use bunched::measures::bunch_measures;
use bunched::rewriting::{check_local_confluence, Universe};
use bunched::syntax::{bunch, seq};
use bunched::{decide, normalize, SearchOptions};
use bunched_bench::{BUNCHES, PROVABLE, UNPROVABLE};
use criterion::{criterion_group, criterion_main, Criterion};

fn search(c: &mut Criterion) {
    let mut group = c.benchmark_group("decide");
    group.sample_size(10);
    for text in PROVABLE.iter().chain(UNPROVABLE) {
        let s = seq(text);
        group.bench_function(*text, |b| b.iter(|| decide(black_box(&s), &SearchOptions::default()).unwrap()));
    }
    group.finish();
}

fn rewriting(c: &mut Criterion) {
    for text in BUNCHES {
        let g = bunch(text);
        c.bench_function(&format!("normalize {text}"), |b| b.iter(|| normalize(black_box(&g))));
        c.bench_function(&format!("measure {text}"), |b| b.iter(|| bunch_measures(black_box(&g))));
    }
    let universe = Universe { alphabet: ["p", "q", "o+", "ox"].map(bunch).to_vec(), max_leaves: 3 };
    c.bench_function("confluence up to 3 leaves", |b| b.iter(|| check_local_confluence(black_box(&universe))));
}

criterion_group!(benches, search, rewriting);
criterion_main!(benches);

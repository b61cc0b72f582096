use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use semirandom::engine::run_once;
use semirandom::offers::{sample_spanning_tree, sample_tree_intersection, FrozenEdges, IntersectScratch};
use semirandom::oracle::enumerate_trees;
use semirandom::strategy::{build_candidate_list, CandidatePolicy};
use semirandom::{balanced_orientation, generate_target, BuilderState, Process, RunConfig, TargetSpec};

fn samplers(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    c.bench_function("aldous_broder_n10000", |b| b.iter(|| sample_spanning_tree(&mut rng, black_box(10_000))));

    let h = generate_target(&TargetSpec::Regular { delta: 8 }, 10_000, &mut rng).unwrap();
    let set = FrozenEdges::new(h.edges().iter().copied());
    let mut scratch = IntersectScratch::default();
    let mut out = Vec::new();
    c.bench_function("tree_trace_regular8_n10000", |b| {
        b.iter(|| {
            sample_tree_intersection(&mut rng, 10_000, &set, &mut scratch, &mut out);
            out.len()
        })
    });
}

fn structures(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = Arc::new(generate_target(&TargetSpec::Regular { delta: 8 }, 100_000, &mut rng).unwrap());
    c.bench_function("balanced_orientation_n100000", |b| b.iter(|| balanced_orientation(black_box(&h))));
    c.bench_function("regular_generation_delta8_n100000", |b| {
        b.iter(|| generate_target(&TargetSpec::Regular { delta: 8 }, 100_000, &mut rng).unwrap())
    });

    let mut st = BuilderState::new(Arc::clone(&h));
    for &(u, w) in h.edges() {
        if u % 97 != 0 {
            st.claim_edge(u, w).unwrap();
        }
    }
    let ind: Vec<usize> = (0..h.n()).step_by(97).take(20).collect();
    c.bench_function("candidate_list_final_policy", |b| {
        b.iter(|| build_candidate_list(&st, black_box(&ind), 2, CandidatePolicy::FINAL).ok())
    });
    c.bench_function("enumerate_trees_n7", |b| b.iter(|| enumerate_trees(black_box(7)).len()));
}

fn runs(c: &mut Criterion) {
    let mut g = c.benchmark_group("run_once");
    g.sample_size(10);
    for p in [Process::Star, Process::Tree] {
        g.bench_function(format!("{}_regular8_n10000", p.as_str()), |b| {
            b.iter_batched(
                || RunConfig::new(p, TargetSpec::Regular { delta: 8 }, 10_000, 7),
                |cfg| run_once(&cfg).unwrap().total_rounds,
                BatchSize::SmallInput,
            )
        });
    }
    g.finish();
}

criterion_group!(benches, samplers, structures, runs);
criterion_main!(benches);

//! Data-parallel vs sequential throughput on the two hot loops: offspring
//! lookahead scoring and whole-board evidence sweeps.
//!
//! `map_collect` uses the rayon pool under the default `parallel` feature;
//! `map_collect_seq` is the always-sequential reference, so one run
//! compares both paths on identical work.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use gapsaw_core::agent::LookaheadCtx;
use gapsaw_core::nn::Mlp;
use gapsaw_core::par;
use gapsaw_core::perception::{aggregate_evidence, feature_len, EvidenceWeights, OracleModel};
use gapsaw_core::puzzle::{enumerate_all_actions, Action, Permutation, PuzzleSpec, RewardParams};
use itertools::Itertools;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn offspring_scoring(c: &mut Criterion) {
    let spec = PuzzleSpec::solid(5, 5, 8, 2, [90, 90, 90]).unwrap();
    let dims = spec.dims();
    let model = OracleModel::for_spec(&spec, 0.0, 0).unwrap();
    let weights = EvidenceWeights::uniform(dims);
    let evaluator = Mlp::init(&[feature_len(dims), 64, 64, 1], 3).unwrap();
    let reward_params = RewardParams::default();
    let ctx = LookaheadCtx {
        spec: &spec,
        model: &model,
        weights: &weights,
        reward_params: &reward_params,
        discount: 0.998,
        evaluator: &evaluator,
    };
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    let state = Permutation::random(25, &mut rng);
    let all = enumerate_all_actions(dims);
    let batch: Vec<Action> = (0..640).map(|_| *all.choose(&mut rng).unwrap()).collect();

    let mut group = c.benchmark_group("offspring_scoring");
    group.bench_with_input(
        BenchmarkId::new("parallel", batch.len()),
        &batch,
        |b, batch| {
            b.iter(|| {
                let scores = par::map_collect(batch, |a| ctx.score(&state, a).unwrap());
                black_box(scores)
            })
        },
    );
    group.bench_with_input(
        BenchmarkId::new("sequential", batch.len()),
        &batch,
        |b, batch| {
            b.iter(|| {
                let scores = par::map_collect_seq(batch, |a| ctx.score(&state, a).unwrap());
                black_box(scores)
            })
        },
    );
    group.finish();
}

fn evidence_sweep(c: &mut Criterion) {
    let spec = PuzzleSpec::solid(2, 3, 8, 2, [90, 90, 90]).unwrap();
    let model = OracleModel::for_spec(&spec, 0.0, 0).unwrap();
    let weights = EvidenceWeights::uniform(spec.dims());
    let states: Vec<Permutation> = (0..6usize)
        .permutations(6)
        .map(|p| Permutation::from_vec(p).unwrap())
        .collect();

    let mut group = c.benchmark_group("evidence_sweep");
    group.bench_with_input(
        BenchmarkId::new("parallel", states.len()),
        &states,
        |b, states| {
            b.iter(|| {
                let evidences = par::map_collect(states, |s| {
                    aggregate_evidence(s, &spec, &model, &weights)
                        .unwrap()
                        .aggregate
                });
                black_box(evidences)
            })
        },
    );
    group.bench_with_input(
        BenchmarkId::new("sequential", states.len()),
        &states,
        |b, states| {
            b.iter(|| {
                let evidences = par::map_collect_seq(states, |s| {
                    aggregate_evidence(s, &spec, &model, &weights)
                        .unwrap()
                        .aggregate
                });
                black_box(evidences)
            })
        },
    );
    group.finish();
}

criterion_group!(benches, offspring_scoring, evidence_sweep);
criterion_main!(benches);

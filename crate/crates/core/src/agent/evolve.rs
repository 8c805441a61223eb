//! Evolutionary action search: crossover and mutation over swap-action
//! encodings, scored by one-step lookahead through the evaluator.
//!
//! Offspring scoring is pure and fans out through [`crate::par`];
//! generation and selection consume the RNG sequentially, so a fixed seed
//! replays exactly regardless of thread count.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::agent::AgentError;
use crate::nn::Mlp;
use crate::par;
use crate::perception::{aggregate_evidence, state_features, EvidenceWeights, PerceptionModel};
use crate::puzzle::{
    apply_action, reward, Action, ActionKind, BoardDims, CycleDir, Permutation, PuzzleSpec,
    RewardParams,
};

/// Evolution schedule and operator rates.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct EvoConfig {
    /// Evolution iterations per environment step.
    pub iterations: usize,
    /// Offspring generated per iteration.
    pub population: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Individuals guaranteed to survive each iteration.
    pub elite: usize,
    /// Actions sampled from the actor as initial parents.
    pub sample_count: usize,
    /// Historical actions pulled from the replay buffer as initial parents.
    pub historical_count: usize,
}

impl Default for EvoConfig {
    fn default() -> Self {
        Self {
            iterations: 10,
            population: 64,
            crossover_rate: 0.9,
            mutation_rate: 0.15,
            elite: 4,
            sample_count: 16,
            historical_count: 8,
        }
    }
}

impl EvoConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if self.iterations < 1 {
            return Err(AgentError::InvalidConfig(
                "evolution iterations must be >= 1".into(),
            ));
        }
        if self.population < 2 {
            return Err(AgentError::InvalidConfig("population must be >= 2".into()));
        }
        for (name, rate) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(AgentError::InvalidConfig(format!(
                    "{name} must be in [0,1]"
                )));
            }
        }
        if self.elite >= self.population {
            return Err(AgentError::InvalidConfig(
                "elite must be < population".into(),
            ));
        }
        if self.sample_count < 1 {
            return Err(AgentError::InvalidConfig(
                "sample_count must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Read-only environment bundle for lookahead scoring.
pub struct LookaheadCtx<'a> {
    pub spec: &'a PuzzleSpec,
    pub model: &'a dyn PerceptionModel,
    pub weights: &'a EvidenceWeights,
    pub reward_params: &'a RewardParams,
    pub discount: f64,
    pub evaluator: &'a Mlp,
}

impl LookaheadCtx<'_> {
    /// One-step lookahead value of applying `action` in `state`:
    /// the transition reward plus the discounted evaluator estimate of the
    /// successor's evidence features. Costs one evidence evaluation.
    pub fn score(&self, state: &Permutation, action: &Action) -> Result<f64, AgentError> {
        let dims = self.spec.dims();
        let next = apply_action(state, action, dims)?;
        let r = reward(state, &next, dims, self.reward_params);
        let report = aggregate_evidence(&next, self.spec, self.model, self.weights)?;
        let value = self.evaluator.forward(&state_features(&report))?[0];
        Ok(r + self.discount * value)
    }
}

/// Result of one evolution run.
#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub action: Action,
    pub score: f64,
    /// Best score seen so far, recorded before evolution starts (initial
    /// parents) and after each iteration. Non-decreasing by elitism.
    pub best_per_iteration: Vec<f64>,
    /// Evidence evaluations spent (distinct candidate actions scored).
    pub evidence_evals: u64,
}

/// Better score wins; on ties the canonically smaller action wins, which
/// keeps replays deterministic.
fn better(score_a: f64, action_a: &Action, score_b: f64, action_b: &Action) -> bool {
    score_a > score_b || (score_a == score_b && action_a < action_b)
}

fn random_position(dims: BoardDims, rng: &mut ChaCha12Rng) -> usize {
    rng.random_range(0..dims.cells())
}

fn random_pairable_anchor(dims: BoardDims, rng: &mut ChaCha12Rng) -> Option<usize> {
    let anchors = dims.pairable_anchors();
    if anchors.is_empty() {
        return None;
    }
    Some(anchors[rng.random_range(0..anchors.len())])
}

/// Rebuild a valid canonical action of the given kind from arbitrary slot
/// values, redrawing slots that are off-board, duplicated, or (for block
/// swaps) not disjoint anchors.
fn repair(kind: ActionKind, slots: &[usize], dims: BoardDims, rng: &mut ChaCha12Rng) -> Action {
    let cells = dims.cells();
    match kind {
        ActionKind::Swap2 => {
            let a = if slots[0] < cells {
                slots[0]
            } else {
                random_position(dims, rng)
            };
            let mut b = if slots.len() > 1 && slots[1] < cells {
                slots[1]
            } else {
                random_position(dims, rng)
            };
            while b == a {
                b = random_position(dims, rng);
            }
            Action::Swap2 { a, b }.canonical()
        }
        ActionKind::Swap3 => {
            let mut picked: Vec<usize> = Vec::with_capacity(3);
            for i in 0..3 {
                let candidate = slots.get(i).copied().unwrap_or(cells);
                let mut v = if candidate < cells {
                    candidate
                } else {
                    random_position(dims, rng)
                };
                while picked.contains(&v) {
                    v = random_position(dims, rng);
                }
                picked.push(v);
            }
            Action::Swap3 {
                a: picked[0],
                b: picked[1],
                c: picked[2],
                dir: CycleDir::Forward,
            }
            .canonical()
        }
        ActionKind::SwapPuzzlet => {
            let Some(fallback) = random_pairable_anchor(dims, rng) else {
                // Board admits no block swap at all; degrade to a transposition.
                return repair(ActionKind::Swap2, slots, dims, rng);
            };
            let a = if slots[0] < cells
                && dims.is_anchor(slots[0])
                && dims
                    .anchors()
                    .iter()
                    .any(|&o| dims.blocks_disjoint(slots[0], o))
            {
                slots[0]
            } else {
                fallback
            };
            let partners: Vec<usize> = dims
                .anchors()
                .into_iter()
                .filter(|&p| dims.blocks_disjoint(a, p))
                .collect();
            let b = match slots.get(1) {
                Some(&s) if s < cells && dims.is_anchor(s) && dims.blocks_disjoint(a, s) => s,
                _ => partners[rng.random_range(0..partners.len())],
            };
            Action::SwapPuzzlet { a, b }.canonical()
        }
    }
}

/// Make a historical action usable on this board: keep it if already
/// valid, otherwise rebuild one of the same kind from its slots.
pub(crate) fn adapt_to_board(action: &Action, dims: BoardDims, rng: &mut ChaCha12Rng) -> Action {
    if action.validate(dims).is_ok() {
        return action.canonical();
    }
    repair(action.kind(), &action.positions(), dims, rng)
}

/// Field-level crossover: kind from one parent, positions mixed slot by
/// slot, then repaired to validity.
fn crossover(pa: &Action, pb: &Action, dims: BoardDims, rng: &mut ChaCha12Rng) -> Action {
    let kind = if rng.random_bool(0.5) {
        pa.kind()
    } else {
        pb.kind()
    };
    let slots_a = pa.positions();
    let slots_b = pb.positions();
    let arity = match kind {
        ActionKind::Swap3 => 3,
        _ => 2,
    };
    let cells = dims.cells();
    let mut slots = Vec::with_capacity(arity);
    for i in 0..arity {
        let pick_a = rng.random_bool(0.5);
        let v = if pick_a {
            slots_a.get(i).or_else(|| slots_b.get(i))
        } else {
            slots_b.get(i).or_else(|| slots_a.get(i))
        };
        slots.push(v.copied().unwrap_or(cells)); // repair redraws sentinel slots
    }
    repair(kind, &slots, dims, rng)
}

/// Replace each position with a uniform random valid one at the mutation
/// rate, then repair.
fn mutate(action: &Action, dims: BoardDims, rate: f64, rng: &mut ChaCha12Rng) -> Action {
    let kind = action.kind();
    let mut slots = action.positions();
    for slot in &mut slots {
        if rng.random_bool(rate) {
            *slot = match kind {
                ActionKind::SwapPuzzlet => {
                    random_pairable_anchor(dims, rng).unwrap_or_else(|| random_position(dims, rng))
                }
                _ => random_position(dims, rng),
            };
        }
    }
    repair(kind, &slots, dims, rng)
}

/// Evolve the parent actions for `cfg.iterations` rounds and return the
/// best-scoring action encountered anywhere in the run (initial parents
/// included), with its score trace.
pub fn evolve_action(
    parents: &[Action],
    state: &Permutation,
    ctx: &LookaheadCtx,
    cfg: &EvoConfig,
    rng: &mut ChaCha12Rng,
) -> Result<EvolveOutcome, AgentError> {
    cfg.validate()?;
    if parents.is_empty() {
        return Err(AgentError::EmptyParents);
    }
    let dims = ctx.spec.dims();
    let pool_size = parents.len();
    let mut pool: Vec<Action> = parents.iter().map(|a| a.canonical()).collect();
    for a in &pool {
        a.validate(dims)?;
    }

    let mut cache: BTreeMap<Action, f64> = BTreeMap::new();
    let mut evals = 0u64;
    score_all(&pool, state, ctx, &mut cache, &mut evals)?;

    let mut best_action = pool[0];
    let mut best_score = cache[&pool[0]];
    for a in &pool {
        let s = cache[a];
        if better(s, a, best_score, &best_action) {
            best_score = s;
            best_action = *a;
        }
    }
    let mut best_per_iteration = Vec::with_capacity(cfg.iterations + 1);
    best_per_iteration.push(best_score);

    for _ in 0..cfg.iterations {
        let mut offspring = Vec::with_capacity(cfg.population);
        for _ in 0..cfg.population {
            let pa = pool[rng.random_range(0..pool.len())];
            let pb = pool[rng.random_range(0..pool.len())];
            let child = if rng.random_bool(cfg.crossover_rate) {
                crossover(&pa, &pb, dims, rng)
            } else {
                pa
            };
            offspring.push(mutate(&child, dims, cfg.mutation_rate, rng));
        }
        score_all(&offspring, state, ctx, &mut cache, &mut evals)?;
        for a in &offspring {
            let s = cache[a];
            if better(s, a, best_score, &best_action) {
                best_score = s;
                best_action = *a;
            }
        }
        best_per_iteration.push(best_score);

        // Next parents: elites from the combined pool, the rest filled by
        // tournament over the offspring.
        let mut combined: Vec<Action> = pool.iter().chain(&offspring).copied().collect();
        combined.sort_unstable();
        combined.dedup();
        combined.sort_by(|a, b| {
            cache[b]
                .partial_cmp(&cache[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.cmp(b))
        });
        let elite_n = cfg.elite.min(combined.len()).max(1);
        let mut next: Vec<Action> = combined[..elite_n].to_vec();
        while next.len() < pool_size.max(elite_n) {
            next.push(tournament(&offspring, &cache, 3, rng));
        }
        pool = next;
    }

    Ok(EvolveOutcome {
        action: best_action,
        score: best_score,
        best_per_iteration,
        evidence_evals: evals,
    })
}

fn tournament(
    offspring: &[Action],
    cache: &BTreeMap<Action, f64>,
    size: usize,
    rng: &mut ChaCha12Rng,
) -> Action {
    let mut winner = offspring[rng.random_range(0..offspring.len())];
    for _ in 1..size {
        let challenger = offspring[rng.random_range(0..offspring.len())];
        if better(cache[&challenger], &challenger, cache[&winner], &winner) {
            winner = challenger;
        }
    }
    winner
}

/// Score every unseen action in `batch` (in parallel where enabled) and
/// memoize into `cache`. Each cache miss costs one evidence evaluation.
fn score_all(
    batch: &[Action],
    state: &Permutation,
    ctx: &LookaheadCtx,
    cache: &mut BTreeMap<Action, f64>,
    evals: &mut u64,
) -> Result<(), AgentError> {
    let mut misses: Vec<Action> = batch
        .iter()
        .filter(|a| !cache.contains_key(*a))
        .copied()
        .collect();
    misses.sort_unstable();
    misses.dedup();
    if misses.is_empty() {
        return Ok(());
    }
    *evals += misses.len() as u64;
    let scores = par::map_collect(&misses, |a| ctx.score(state, a));
    for (action, score) in misses.into_iter().zip(scores) {
        cache.insert(action, score?);
    }
    Ok(())
}

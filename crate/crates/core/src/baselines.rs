//! Classical reference solvers: greedy ascent, tabu search, and a genetic
//! algorithm over permutations. All three read the puzzle only through the
//! aggregated evidence score, the same signal the learned agent sees, so
//! benchmark comparisons are information-fair. Evidence evaluations are
//! counted per run for budget parity reporting.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perception::{aggregate_evidence, EvidenceWeights, PerceptionError, PerceptionModel};
use crate::puzzle::{apply_action, Action, Permutation, PuzzleError, PuzzleSpec};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Puzzle(#[from] PuzzleError),
}

/// Final state of a baseline run plus its accounting.
#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub final_state: Permutation,
    pub best_evidence: f64,
    pub evidence_evals: u64,
    pub iterations: usize,
}

fn evidence(
    state: &Permutation,
    spec: &PuzzleSpec,
    model: &dyn PerceptionModel,
    weights: &EvidenceWeights,
    evals: &mut u64,
) -> Result<f64, BaselineError> {
    *evals += 1;
    Ok(aggregate_evidence(state, spec, model, weights)?.aggregate)
}

/// All transpositions of the board, lexicographic.
fn swap2_moves(cells: usize) -> Vec<(usize, usize)> {
    let mut moves = Vec::with_capacity(cells * (cells - 1) / 2);
    for a in 0..cells {
        for b in a + 1..cells {
            moves.push((a, b));
        }
    }
    moves
}

/// Steepest-ascent hill climb over transpositions: apply the single swap
/// that raises the evidence most, stop at a local maximum. The evidence
/// sequence over accepted steps is strictly increasing.
pub fn greedy_solve(
    spec: &PuzzleSpec,
    start: &Permutation,
    model: &dyn PerceptionModel,
    weights: &EvidenceWeights,
) -> Result<BaselineOutcome, BaselineError> {
    let dims = spec.dims();
    let moves = swap2_moves(dims.cells());
    let mut evals = 0u64;
    let mut state = start.clone();
    let mut current = evidence(&state, spec, model, weights, &mut evals)?;
    let mut iterations = 0;
    loop {
        let mut best_move: Option<(usize, usize)> = None;
        let mut best_e = current;
        for &(a, b) in &moves {
            let candidate = apply_action(&state, &Action::Swap2 { a, b }, dims)?;
            let e = evidence(&candidate, spec, model, weights, &mut evals)?;
            if e > best_e {
                best_e = e;
                best_move = Some((a, b));
            }
        }
        match best_move {
            Some((a, b)) => {
                state = apply_action(&state, &Action::Swap2 { a, b }, dims)?;
                current = best_e;
                iterations += 1;
            }
            None => break,
        }
    }
    Ok(BaselineOutcome {
        final_state: state,
        best_evidence: current,
        evidence_evals: evals,
        iterations,
    })
}

/// Tabu search configuration. The neighborhood is every transposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TabuConfig {
    pub tenure: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for TabuConfig {
    fn default() -> Self {
        Self {
            tenure: 12,
            max_iterations: 300,
            seed: 0,
        }
    }
}

impl TabuConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        if self.tenure < 1 {
            return Err(BaselineError::InvalidConfig("tenure must be >= 1".into()));
        }
        if self.max_iterations < 1 {
            return Err(BaselineError::InvalidConfig(
                "max_iterations must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Best-admissible-neighbor search over transpositions with a tenure-based
/// tabu list on swapped position pairs. Aspiration admits any move that
/// beats the global best; if every move is tabu and none aspirates, the
/// one closest to expiry is taken, so the search never deadlocks. Returns
/// the best state ever visited.
pub fn tabu_solve(
    spec: &PuzzleSpec,
    start: &Permutation,
    model: &dyn PerceptionModel,
    weights: &EvidenceWeights,
    config: &TabuConfig,
) -> Result<BaselineOutcome, BaselineError> {
    config.validate()?;
    let dims = spec.dims();
    let moves = swap2_moves(dims.cells());
    let mut evals = 0u64;
    let mut state = start.clone();
    let mut current = evidence(&state, spec, model, weights, &mut evals)?;
    let mut best_state = state.clone();
    let mut best_e = current;
    let mut tabu: HashMap<(usize, usize), usize> = HashMap::new();
    let mut iterations = 0;

    for iter in 0..config.max_iterations {
        if best_state.is_identity() {
            break;
        }
        let mut chosen: Option<((usize, usize), f64)> = None;
        let mut fallback: Option<((usize, usize), usize, f64)> = None;
        for &(a, b) in &moves {
            let candidate = apply_action(&state, &Action::Swap2 { a, b }, dims)?;
            let e = evidence(&candidate, spec, model, weights, &mut evals)?;
            let expiry = tabu.get(&(a, b)).copied().unwrap_or(0);
            let is_tabu = expiry > iter;
            let aspirates = e > best_e;
            if !is_tabu || aspirates {
                if chosen.is_none_or(|(_, ce)| e > ce) {
                    chosen = Some(((a, b), e));
                }
            } else if fallback.is_none_or(|(_, fe, _)| expiry < fe) {
                fallback = Some(((a, b), expiry, e));
            }
        }
        let ((a, b), e) = match (chosen, fallback) {
            (Some(c), _) => c,
            (None, Some((mv, _, e))) => (mv, e),
            (None, None) => break,
        };
        state = apply_action(&state, &Action::Swap2 { a, b }, dims)?;
        current = e;
        tabu.insert((a, b), iter + 1 + config.tenure);
        if current > best_e {
            best_e = current;
            best_state = state.clone();
        }
        iterations = iter + 1;
    }
    Ok(BaselineOutcome {
        final_state: best_state,
        best_evidence: best_e,
        evidence_evals: evals,
        iterations,
    })
}

/// Genetic-algorithm configuration over whole permutations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Probability that an offspring receives one random swap mutation.
    pub mutation_rate: f64,
    pub elite: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 64,
            generations: 200,
            crossover_rate: 0.9,
            mutation_rate: 0.7,
            elite: 2,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        if self.population < 2 {
            return Err(BaselineError::InvalidConfig(
                "population must be >= 2".into(),
            ));
        }
        if self.elite >= self.population {
            return Err(BaselineError::InvalidConfig(
                "elite must be < population".into(),
            ));
        }
        for (name, rate) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(BaselineError::InvalidConfig(format!(
                    "{name} must be in [0,1]"
                )));
            }
        }
        Ok(())
    }

    /// Generations affordable under a fitness-evaluation budget.
    pub fn generations_for_budget(&self, budget: u64) -> usize {
        let per_gen = (self.population - self.elite).max(1) as u64;
        let after_init = budget.saturating_sub(self.population as u64);
        (after_init / per_gen).max(1) as usize
    }
}

/// Order crossover: keep a random slice of the first parent in place,
/// fill the remaining slots with the second parent's entries in their
/// original order. Always yields a valid permutation.
fn order_crossover(p1: &[usize], p2: &[usize], rng: &mut ChaCha12Rng) -> Vec<usize> {
    let n = p1.len();
    let i = rng.random_range(0..n);
    let j = rng.random_range(0..n);
    let (lo, hi) = (i.min(j), i.max(j));
    let mut child = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for k in lo..=hi {
        child[k] = p1[k];
        used[p1[k]] = true;
    }
    let mut fill = p2.iter().filter(|&&v| !used[v]);
    for slot in child.iter_mut() {
        if *slot == usize::MAX {
            *slot = *fill.next().expect("enough unused entries");
        }
    }
    child
}

struct Individual {
    perm: Permutation,
    fitness: f64,
}

/// Permutation GA: evidence fitness, tournament selection, order
/// crossover, swap mutation, elitism. Returns the fittest individual ever
/// seen.
pub fn ga_solve(
    spec: &PuzzleSpec,
    start: &Permutation,
    model: &dyn PerceptionModel,
    weights: &EvidenceWeights,
    config: &GaConfig,
) -> Result<BaselineOutcome, BaselineError> {
    config.validate()?;
    let dims = spec.dims();
    let n = dims.cells();
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut evals = 0u64;

    let mut population: Vec<Individual> = Vec::with_capacity(config.population);
    let push = |perm: Permutation,
                population: &mut Vec<Individual>,
                evals: &mut u64|
     -> Result<(), BaselineError> {
        let fitness = evidence(&perm, spec, model, weights, evals)?;
        population.push(Individual { perm, fitness });
        Ok(())
    };
    push(start.clone(), &mut population, &mut evals)?;
    while population.len() < config.population {
        push(
            Permutation::random(n, &mut rng),
            &mut population,
            &mut evals,
        )?;
    }

    let mut best = population
        .iter()
        .max_by(|a, b| a.fitness.total_cmp(&b.fitness))
        .map(|ind| (ind.perm.clone(), ind.fitness))
        .expect("population nonempty");

    let tournament = |pop: &[Individual], rng: &mut ChaCha12Rng| -> usize {
        let mut winner = rng.random_range(0..pop.len());
        for _ in 0..2 {
            let challenger = rng.random_range(0..pop.len());
            if pop[challenger].fitness > pop[winner].fitness {
                winner = challenger;
            }
        }
        winner
    };

    let mut iterations = 0;
    for _ in 0..config.generations {
        if best.0.is_identity() {
            break;
        }
        // Elites survive with their cached fitness; no re-evaluation.
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| population[b].fitness.total_cmp(&population[a].fitness));
        let mut next: Vec<Individual> = order[..config.elite]
            .iter()
            .map(|&i| Individual {
                perm: population[i].perm.clone(),
                fitness: population[i].fitness,
            })
            .collect();
        while next.len() < config.population {
            let a = tournament(&population, &mut rng);
            let b = tournament(&population, &mut rng);
            let mut genome = if rng.random_bool(config.crossover_rate) {
                order_crossover(
                    population[a].perm.as_slice(),
                    population[b].perm.as_slice(),
                    &mut rng,
                )
            } else {
                population[a].perm.as_slice().to_vec()
            };
            if rng.random_bool(config.mutation_rate) {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n);
                while j == i {
                    j = rng.random_range(0..n);
                }
                genome.swap(i, j);
            }
            let perm = Permutation::from_vec(genome).expect("operators preserve validity");
            push(perm, &mut next, &mut evals)?;
        }
        population = next;
        iterations += 1;
        for ind in &population {
            if ind.fitness > best.1 {
                best = (ind.perm.clone(), ind.fitness);
            }
        }
    }

    Ok(BaselineOutcome {
        final_state: best.0,
        best_evidence: best.1,
        evidence_evals: evals,
        iterations,
    })
}

//! Evolutionary actor-critic-evaluator agent.
//!
//! Training interleaves rollouts and updates: each iteration samples a
//! puzzle, rolls out up to the swap budget choosing every action by
//! sampling parents from the actor and evolving them under the evaluator's
//! lookahead, stores the episode in the replay buffer, then takes one
//! batch update — clipped-objective ascent for the actor, return-to-go
//! regression for the critic, and a soft parameter blend from critic to
//! evaluator.

mod evolve;
mod losses;
mod policy;
mod replay;

pub use evolve::{evolve_action, EvoConfig, EvolveOutcome, LookaheadCtx};
pub use losses::{
    compute_advantage, critic_loss, policy_loss, returns_to_go, soft_update_evaluator, CriticLoss,
    PolicyLoss,
};
pub use policy::{
    action_log_prob, log_prob_from_logits, log_prob_grad, sample_actions, PolicyContext,
    SampledAction,
};
pub use replay::{ReplayBuffer, Trajectory, Transition};

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checkpoint::{read_checkpoint, write_checkpoint, CheckpointError};
use crate::nn::{adam_step, AdamConfig, AdamState, Mlp, MlpGrads, NnError};
use crate::perception::{
    aggregate_evidence, state_features, EvidenceWeights, PerceptionError, PerceptionModel,
};
use crate::puzzle::{
    apply_action, metrics, reward, Action, BoardDims, MetricsReport, Permutation, PuzzleError,
    PuzzleSpec, RewardParams,
};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("policy distribution has no unmasked support")]
    AllMasked,
    #[error("evolution needs at least one parent action")]
    EmptyParents,
    #[error("critic loss needs a non-empty segment")]
    EmptySegment,
    #[error("training needs a non-empty puzzle set")]
    EmptyPuzzleSet,
    #[error("puzzle board {got_rows}x{got_cols} does not match the agent's {rows}x{cols}")]
    BoardMismatch {
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("non-finite loss at episode {episode}: {detail}")]
    NonFiniteLoss { episode: usize, detail: String },
    #[error("trajectory invariant violated: {0}")]
    TrajectoryInvariant(&'static str),
    #[error("malformed checkpoint: {0}")]
    MalformedCheckpoint(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Puzzle(#[from] PuzzleError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// Linear annealing of the action-kind prior blended into the actor's
/// kind distribution during training. The mix moves from `start_mix` at
/// the first episode to `end_mix` at the last; `weight` is the blend
/// strength (0 disables the prior).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurriculumSchedule {
    pub start_mix: [f64; 3],
    pub end_mix: [f64; 3],
    pub weight: f64,
}

impl Default for CurriculumSchedule {
    fn default() -> Self {
        Self {
            start_mix: [0.2, 0.3, 0.5],
            end_mix: [0.8, 0.15, 0.05],
            weight: 0.5,
        }
    }
}

/// Training hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Learning iterations (one episode plus one update each).
    pub iterations: usize,
    /// Maximum swaps per episode.
    pub max_swaps: usize,
    pub discount: f64,
    pub clip_epsilon: f64,
    /// Evaluator soft-update rate.
    pub soft_update_rate: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Hidden layer widths shared by actor, critic, and evaluator.
    pub hidden: Vec<usize>,
    pub max_grad_norm: f64,
    pub curriculum: CurriculumSchedule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            max_swaps: 10_000,
            discount: 0.998,
            clip_epsilon: 0.2,
            soft_update_rate: 0.01,
            batch_size: 64,
            buffer_capacity: 100,
            actor_lr: 3e-4,
            critic_lr: 1e-3,
            hidden: vec![128, 128],
            max_grad_norm: 1.0,
            curriculum: CurriculumSchedule::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if self.iterations < 1 || self.max_swaps < 1 {
            return Err(AgentError::InvalidConfig(
                "iterations and max_swaps must be >= 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.discount) || self.discount <= 0.0 {
            return Err(AgentError::InvalidConfig(
                "discount must be in (0,1)".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.clip_epsilon) || self.clip_epsilon <= 0.0 {
            return Err(AgentError::InvalidConfig(
                "clip_epsilon must be in (0,1)".into(),
            ));
        }
        if self.soft_update_rate <= 0.0 || self.soft_update_rate > 1.0 {
            return Err(AgentError::InvalidConfig(
                "soft_update_rate must be in (0,1]".into(),
            ));
        }
        if self.batch_size < 1 || self.buffer_capacity < 1 {
            return Err(AgentError::InvalidConfig(
                "batch_size and buffer_capacity must be >= 1".into(),
            ));
        }
        if self.hidden.is_empty() {
            return Err(AgentError::InvalidConfig(
                "hidden layers must be non-empty".into(),
            ));
        }
        Ok(())
    }
}

/// Trained parameter sets.
#[derive(Debug, Clone)]
pub struct AgentParams {
    pub dims: BoardDims,
    pub actor: Mlp,
    pub critic: Mlp,
    pub evaluator: Mlp,
}

impl AgentParams {
    /// Pull the networks out of a trainer checkpoint for solve-only use.
    pub fn load(path: &Path) -> Result<Self, AgentError> {
        let ckpt = read_checkpoint(path)?;
        let dims: BoardDims = serde_json::from_value(ckpt.meta["dims"].clone())
            .map_err(|e| AgentError::MalformedCheckpoint(format!("dims: {e}")))?;
        let missing = |name: &str| AgentError::MalformedCheckpoint(format!("missing {name}"));
        Ok(Self {
            dims,
            actor: ckpt
                .network("actor")
                .ok_or_else(|| missing("actor"))?
                .clone(),
            critic: ckpt
                .network("critic")
                .ok_or_else(|| missing("critic"))?
                .clone(),
            evaluator: ckpt
                .network("evaluator")
                .ok_or_else(|| missing("evaluator"))?
                .clone(),
        })
    }
}

/// One training puzzle: geometry plus its shuffled start placement.
#[derive(Debug, Clone)]
pub struct TrainPuzzle {
    pub spec: PuzzleSpec,
    pub start: Permutation,
}

/// Executed-action mix of an episode, as fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KindMix {
    pub swap2: f64,
    pub swap3: f64,
    pub swap_puzzlet: f64,
}

impl KindMix {
    fn from_counts(counts: [usize; 3]) -> Self {
        let total = counts.iter().sum::<usize>().max(1) as f64;
        Self {
            swap2: counts[0] as f64 / total,
            swap3: counts[1] as f64 / total,
            swap_puzzlet: counts[2] as f64 / total,
        }
    }

    pub fn large_swap_fraction(&self) -> f64 {
        self.swap3 + self.swap_puzzlet
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub swaps: usize,
    pub total_reward: f64,
    pub perfect: bool,
    pub kind_mix: KindMix,
}

/// Training driver owning all mutable agent state. Checkpoints capture the
/// complete state (networks, optimizer moments, replay buffer, RNG
/// position), so a resumed run continues the exact trajectory of an
/// uninterrupted one.
pub struct Trainer {
    dims: BoardDims,
    policy_ctx: PolicyContext,
    actor: Mlp,
    critic: Mlp,
    evaluator: Mlp,
    adam_actor: AdamState,
    adam_critic: AdamState,
    buffer: ReplayBuffer,
    rng: ChaCha12Rng,
    seed: u64,
    episode: usize,
    train_cfg: TrainConfig,
    evo_cfg: EvoConfig,
    reward_params: RewardParams,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrainerMeta {
    seed: u64,
    rng_word_hi: u64,
    rng_word_lo: u64,
    episode: usize,
    dims: BoardDims,
    train_cfg: TrainConfig,
    evo_cfg: EvoConfig,
    reward_params: RewardParams,
    buffer: ReplayBuffer,
}

impl Trainer {
    pub fn new(
        dims: BoardDims,
        train_cfg: TrainConfig,
        evo_cfg: EvoConfig,
        reward_params: RewardParams,
        seed: u64,
    ) -> Result<Self, AgentError> {
        train_cfg.validate()?;
        evo_cfg.validate()?;
        reward_params.validate()?;
        let policy_ctx = PolicyContext::new(dims);
        // Zeroed output heads: the untrained actor samples uniformly and the
        // untrained value nets stay silent in the lookahead, so early action
        // selection runs on reward alone instead of init noise.
        let actor = Mlp::init_zero_head(&policy_ctx.actor_sizes(&train_cfg.hidden), seed ^ 0xAC70)?;
        let critic =
            Mlp::init_zero_head(&policy_ctx.value_sizes(&train_cfg.hidden), seed ^ 0xC217)?;
        let evaluator = critic.clone();
        let adam_actor = AdamState::new(&actor, AdamConfig::with_lr(train_cfg.actor_lr));
        let adam_critic = AdamState::new(&critic, AdamConfig::with_lr(train_cfg.critic_lr));
        let buffer = ReplayBuffer::new(train_cfg.buffer_capacity);
        Ok(Self {
            dims,
            policy_ctx,
            actor,
            critic,
            evaluator,
            adam_actor,
            adam_critic,
            buffer,
            rng: ChaCha12Rng::seed_from_u64(seed),
            seed,
            episode: 0,
            train_cfg,
            evo_cfg,
            reward_params,
        })
    }

    pub fn episodes_done(&self) -> usize {
        self.episode
    }

    pub fn dims(&self) -> BoardDims {
        self.dims
    }

    pub fn train_config(&self) -> &TrainConfig {
        &self.train_cfg
    }

    pub fn agent(&self) -> AgentParams {
        AgentParams {
            dims: self.dims,
            actor: self.actor.clone(),
            critic: self.critic.clone(),
            evaluator: self.evaluator.clone(),
        }
    }

    fn features_of(
        &self,
        state: &Permutation,
        spec: &PuzzleSpec,
        model: &dyn PerceptionModel,
        weights: &EvidenceWeights,
    ) -> Result<Vec<f64>, AgentError> {
        Ok(state_features(&aggregate_evidence(
            state, spec, model, weights,
        )?))
    }

    /// Curriculum kind prior for the current episode.
    fn curriculum_prior(&self) -> Option<([f64; 3], f64)> {
        let sched = &self.train_cfg.curriculum;
        if sched.weight <= 0.0 {
            return None;
        }
        let span = self.train_cfg.iterations.saturating_sub(1).max(1) as f64;
        let t = (self.episode as f64 / span).clamp(0.0, 1.0);
        let mut mix = sched.start_mix;
        for (m, end) in mix.iter_mut().zip(&sched.end_mix) {
            *m += (end - *m) * t;
        }
        Some((mix, sched.weight.min(1.0)))
    }

    /// Initial parents: freshly sampled actions plus historical actions
    /// from the most recent trajectories, adapted to the board.
    fn build_parents(
        &mut self,
        features: &[f64],
        prior: Option<([f64; 3], f64)>,
    ) -> Result<Vec<Action>, AgentError> {
        let sampled = sample_actions(
            &self.actor,
            &self.policy_ctx,
            features,
            self.evo_cfg.sample_count,
            prior,
            &mut self.rng,
        )?;
        let mut parents: Vec<Action> = sampled.into_iter().map(|s| s.action).collect();
        for action in self.buffer.recent_actions(self.evo_cfg.historical_count) {
            parents.push(evolve::adapt_to_board(&action, self.dims, &mut self.rng));
        }
        Ok(parents)
    }

    /// Run `episodes` more training iterations with one perception model
    /// shared by every puzzle, returning the log records.
    pub fn run(
        &mut self,
        puzzles: &[TrainPuzzle],
        model: &dyn PerceptionModel,
        weights: &EvidenceWeights,
        episodes: usize,
    ) -> Result<Vec<EpisodeRecord>, AgentError> {
        let models: Vec<&dyn PerceptionModel> = puzzles.iter().map(|_| model).collect();
        self.run_with_models(puzzles, &models, weights, episodes)
    }

    /// Run `episodes` more training iterations with one perception model
    /// per puzzle (statistics-based models are tied to their image).
    pub fn run_with_models(
        &mut self,
        puzzles: &[TrainPuzzle],
        models: &[&dyn PerceptionModel],
        weights: &EvidenceWeights,
        episodes: usize,
    ) -> Result<Vec<EpisodeRecord>, AgentError> {
        if puzzles.is_empty() {
            return Err(AgentError::EmptyPuzzleSet);
        }
        if models.len() != puzzles.len() {
            return Err(AgentError::InvalidConfig(format!(
                "{} models for {} puzzles",
                models.len(),
                puzzles.len()
            )));
        }
        for p in puzzles {
            let d = p.spec.dims();
            if d != self.dims {
                return Err(AgentError::BoardMismatch {
                    rows: self.dims.rows,
                    cols: self.dims.cols,
                    got_rows: d.rows,
                    got_cols: d.cols,
                });
            }
        }
        let mut records = Vec::with_capacity(episodes);
        for _ in 0..episodes {
            let (record, steps) = self.run_episode(puzzles, models, weights)?;
            if let Some(steps) = steps {
                self.buffer
                    .push(Trajectory::new(steps).map_err(AgentError::TrajectoryInvariant)?);
                self.update_networks()?;
            }
            records.push(record);
            self.episode += 1;
        }
        Ok(records)
    }

    fn run_episode(
        &mut self,
        puzzles: &[TrainPuzzle],
        models: &[&dyn PerceptionModel],
        weights: &EvidenceWeights,
    ) -> Result<(EpisodeRecord, Option<Vec<Transition>>), AgentError> {
        let idx = self.rng.random_range(0..puzzles.len());
        let puzzle = &puzzles[idx];
        let model = models[idx];
        let prior = self.curriculum_prior();
        let mut state = puzzle.start.clone();
        let mut steps: Vec<Transition> = Vec::new();
        let mut kind_counts = [0usize; 3];
        let mut total_reward = 0.0;

        if !state.is_identity() {
            let mut features = self.features_of(&state, &puzzle.spec, model, weights)?;
            for t in 0..self.train_cfg.max_swaps {
                let parents = self.build_parents(&features, prior)?;
                let evaluator = self.evaluator.clone();
                let ctx = LookaheadCtx {
                    spec: &puzzle.spec,
                    model,
                    weights,
                    reward_params: &self.reward_params,
                    discount: self.train_cfg.discount,
                    evaluator: &evaluator,
                };
                let outcome = evolve_action(&parents, &state, &ctx, &self.evo_cfg, &mut self.rng)?;
                let action = outcome.action;
                let next = apply_action(&state, &action, self.dims)?;
                let step_reward = reward(&state, &next, self.dims, &self.reward_params);
                let done = next.is_identity() || t + 1 == self.train_cfg.max_swaps;
                let next_features = self.features_of(&next, &puzzle.spec, model, weights)?;
                let log_prob_old =
                    action_log_prob(&self.actor, &self.policy_ctx, &features, &action)?;
                kind_counts[action.kind().index()] += 1;
                total_reward += step_reward;
                steps.push(Transition {
                    features: std::mem::take(&mut features),
                    action,
                    log_prob_old,
                    reward: step_reward,
                    next_features: next_features.clone(),
                    done,
                });
                state = next;
                features = next_features;
                if done {
                    break;
                }
            }
        }

        let record = EpisodeRecord {
            episode: self.episode,
            swaps: steps.len(),
            total_reward,
            perfect: state.is_identity(),
            kind_mix: KindMix::from_counts(kind_counts),
        };
        let steps = if steps.is_empty() { None } else { Some(steps) };
        Ok((record, steps))
    }

    /// One batch update: critic regression toward return-to-go, actor
    /// ascent on the clipped surrogate, evaluator soft update.
    fn update_networks(&mut self) -> Result<(), AgentError> {
        if self.buffer.is_empty() {
            return Ok(());
        }
        let batch = self
            .buffer
            .sample_steps(self.train_cfg.batch_size, &mut self.rng);
        if batch.is_empty() {
            return Ok(());
        }
        let mut acc_actor = MlpGrads::zeros_like(&self.actor);
        let mut acc_critic = MlpGrads::zeros_like(&self.critic);
        let mut actor_loss_sum = 0.0;
        let mut critic_loss_sum = 0.0;
        for &(ti, si) in &batch {
            let traj = self.buffer.trajectory(ti);
            let step = &traj.steps()[si];

            let cl = critic_loss(traj.tail(si), &self.critic, self.train_cfg.discount)?;
            let trace_c = self.critic.forward_trace(&step.features)?;
            acc_critic.add_assign(&self.critic.backward(&trace_c, &[cl.dloss_dvalue])?);
            critic_loss_sum += cl.loss;

            let value_next = if step.done {
                0.0
            } else {
                self.critic.forward(&step.next_features)?[0]
            };
            let advantage = compute_advantage(
                step.reward,
                cl.value,
                value_next,
                self.train_cfg.discount,
                step.done,
            );

            let trace_a = self.actor.forward_trace(&step.features)?;
            let logits = trace_a.output().to_vec();
            let (log_prob_new, dlogp_dlogits) =
                log_prob_grad(&logits, &self.policy_ctx, &step.action)?;
            let pl = policy_loss(
                log_prob_new,
                step.log_prob_old,
                advantage,
                self.train_cfg.clip_epsilon,
            );
            actor_loss_sum += pl.loss;
            if pl.dloss_dlogp != 0.0 {
                let upstream: Vec<f64> = dlogp_dlogits.iter().map(|g| g * pl.dloss_dlogp).collect();
                acc_actor.add_assign(&self.actor.backward(&trace_a, &upstream)?);
            }
        }

        let n = batch.len() as f64;
        if !actor_loss_sum.is_finite() || !critic_loss_sum.is_finite() {
            return Err(AgentError::NonFiniteLoss {
                episode: self.episode,
                detail: format!(
                    "actor loss sum {actor_loss_sum}, critic loss sum {critic_loss_sum}, \
                     actor norm {:.3e}, critic norm {:.3e}, buffer {} trajectories / {} steps",
                    l2(&self.actor.flatten()),
                    l2(&self.critic.flatten()),
                    self.buffer.len(),
                    self.buffer.total_steps()
                ),
            });
        }
        acc_actor.scale(1.0 / n);
        acc_actor.clip_global_norm(self.train_cfg.max_grad_norm);
        acc_critic.scale(1.0 / n);
        acc_critic.clip_global_norm(self.train_cfg.max_grad_norm);
        adam_step(&mut self.actor, &acc_actor, &mut self.adam_actor)?;
        adam_step(&mut self.critic, &acc_critic, &mut self.adam_critic)?;
        soft_update_evaluator(
            &self.critic,
            &mut self.evaluator,
            self.train_cfg.soft_update_rate,
        )?;
        Ok(())
    }

    /// Write the full training state.
    pub fn save(&self, path: &Path) -> Result<(), AgentError> {
        let word_pos = self.rng.get_word_pos();
        let meta = TrainerMeta {
            seed: self.seed,
            rng_word_hi: (word_pos >> 64) as u64,
            rng_word_lo: word_pos as u64,
            episode: self.episode,
            dims: self.dims,
            train_cfg: self.train_cfg.clone(),
            evo_cfg: self.evo_cfg.clone(),
            reward_params: self.reward_params,
            buffer: self.buffer.clone(),
        };
        let meta = serde_json::to_value(&meta)
            .map_err(|e| AgentError::MalformedCheckpoint(e.to_string()))?;
        write_checkpoint(
            path,
            &[
                ("actor", &self.actor),
                ("critic", &self.critic),
                ("evaluator", &self.evaluator),
            ],
            &[("actor", &self.adam_actor), ("critic", &self.adam_critic)],
            meta,
        )?;
        Ok(())
    }

    /// Restore a trainer from [`Trainer::save`] output.
    pub fn load(path: &Path) -> Result<Self, AgentError> {
        let ckpt = read_checkpoint(path)?;
        let meta: TrainerMeta = serde_json::from_value(ckpt.meta.clone())
            .map_err(|e| AgentError::MalformedCheckpoint(e.to_string()))?;
        let missing = |name: &str| AgentError::MalformedCheckpoint(format!("missing {name}"));
        let actor = ckpt
            .network("actor")
            .ok_or_else(|| missing("actor"))?
            .clone();
        let critic = ckpt
            .network("critic")
            .ok_or_else(|| missing("critic"))?
            .clone();
        let evaluator = ckpt
            .network("evaluator")
            .ok_or_else(|| missing("evaluator"))?
            .clone();
        let adam_actor = ckpt
            .optimizer("actor")
            .ok_or_else(|| missing("actor optimizer"))?
            .clone();
        let adam_critic = ckpt
            .optimizer("critic")
            .ok_or_else(|| missing("critic optimizer"))?
            .clone();
        let mut rng = ChaCha12Rng::seed_from_u64(meta.seed);
        rng.set_word_pos(((meta.rng_word_hi as u128) << 64) | meta.rng_word_lo as u128);
        Ok(Self {
            dims: meta.dims,
            policy_ctx: PolicyContext::new(meta.dims),
            actor,
            critic,
            evaluator,
            adam_actor,
            adam_critic,
            buffer: meta.buffer,
            rng,
            seed: meta.seed,
            episode: meta.episode,
            train_cfg: meta.train_cfg,
            evo_cfg: meta.evo_cfg,
            reward_params: meta.reward_params,
        })
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Train a fresh agent for `train_cfg.iterations` episodes.
pub fn train(
    puzzles: &[TrainPuzzle],
    model: &dyn PerceptionModel,
    weights: &EvidenceWeights,
    train_cfg: TrainConfig,
    evo_cfg: EvoConfig,
    reward_params: RewardParams,
    seed: u64,
) -> Result<(AgentParams, Vec<EpisodeRecord>), AgentError> {
    let dims = puzzles
        .first()
        .ok_or(AgentError::EmptyPuzzleSet)?
        .spec
        .dims();
    let episodes = train_cfg.iterations;
    let mut trainer = Trainer::new(dims, train_cfg, evo_cfg, reward_params, seed)?;
    let log = trainer.run(puzzles, model, weights, episodes)?;
    Ok((trainer.agent(), log))
}

/// Result of a greedy-evolved solve run.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub actions: Vec<Action>,
    pub metrics: MetricsReport,
    pub final_state: Permutation,
    pub evidence_evals: u64,
}

/// Reassemble one puzzle with a trained agent: evolve an action per step
/// (no parameter updates) until perfect or the swap budget runs out.
#[allow(clippy::too_many_arguments)]
pub fn solve(
    spec: &PuzzleSpec,
    start: &Permutation,
    agent: &AgentParams,
    model: &dyn PerceptionModel,
    weights: &EvidenceWeights,
    reward_params: &RewardParams,
    evo_cfg: &EvoConfig,
    discount: f64,
    max_swaps: usize,
    seed: u64,
) -> Result<SolveOutcome, AgentError> {
    let dims = spec.dims();
    if dims != agent.dims {
        return Err(AgentError::BoardMismatch {
            rows: agent.dims.rows,
            cols: agent.dims.cols,
            got_rows: dims.rows,
            got_cols: dims.cols,
        });
    }
    evo_cfg.validate()?;
    let policy_ctx = PolicyContext::new(dims);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut state = start.clone();
    let mut actions = Vec::new();
    let mut evidence_evals = 0u64;
    while !state.is_identity() && actions.len() < max_swaps {
        let report = aggregate_evidence(&state, spec, model, weights)?;
        evidence_evals += 1;
        let features = state_features(&report);
        let sampled = sample_actions(
            &agent.actor,
            &policy_ctx,
            &features,
            evo_cfg.sample_count,
            None,
            &mut rng,
        )?;
        let parents: Vec<Action> = sampled.into_iter().map(|s| s.action).collect();
        let ctx = LookaheadCtx {
            spec,
            model,
            weights,
            reward_params,
            discount,
            evaluator: &agent.evaluator,
        };
        let outcome = evolve_action(&parents, &state, &ctx, evo_cfg, &mut rng)?;
        evidence_evals += outcome.evidence_evals;
        state = apply_action(&state, &outcome.action, dims)?;
        actions.push(outcome.action);
    }
    Ok(SolveOutcome {
        metrics: metrics(&state, dims),
        actions,
        final_state: state,
        evidence_evals,
    })
}

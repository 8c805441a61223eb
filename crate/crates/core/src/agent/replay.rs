//! Episode storage for experience replay.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::puzzle::Action;

/// One environment step: features seen, action taken, reward collected,
/// features after, and whether the episode ended here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub features: Vec<f64>,
    pub action: Action,
    /// Actor log-probability of `action` at collection time; the
    /// denominator of the update-time probability ratio.
    pub log_prob_old: f64,
    pub reward: f64,
    pub next_features: Vec<f64>,
    pub done: bool,
}

/// An episode's ordered transitions. `done` is set exactly on the final
/// record: episodes stop on perfect reassembly or on the swap budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    steps: Vec<Transition>,
}

impl Trajectory {
    pub fn new(steps: Vec<Transition>) -> Result<Self, &'static str> {
        if steps.is_empty() {
            return Err("trajectory must contain at least one step");
        }
        let last = steps.len() - 1;
        for (i, step) in steps.iter().enumerate() {
            if step.done != (i == last) {
                return Err("done must be set exactly on the final record");
            }
        }
        Ok(Self { steps })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[Transition] {
        &self.steps
    }

    /// Tail of the episode starting at `step`.
    pub fn tail(&self, step: usize) -> &[Transition] {
        &self.steps[step..]
    }
}

/// Bounded FIFO of trajectories; pushing beyond capacity evicts the oldest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayBuffer {
    trajectories: VecDeque<Trajectory>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            trajectories: VecDeque::with_capacity(capacity.min(1024)),
            capacity: capacity.max(1),
        }
    }

    pub fn push(&mut self, trajectory: Trajectory) {
        if self.trajectories.len() == self.capacity {
            self.trajectories.pop_front();
        }
        self.trajectories.push_back(trajectory);
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn total_steps(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    pub fn trajectory(&self, index: usize) -> &Trajectory {
        &self.trajectories[index]
    }

    /// Uniform sample (with replacement) over every stored step, as
    /// `(trajectory, step)` index pairs.
    pub fn sample_steps(&self, count: usize, rng: &mut ChaCha12Rng) -> Vec<(usize, usize)> {
        let total = self.total_steps();
        if total == 0 {
            return Vec::new();
        }
        // Cumulative lengths for flat-index lookup.
        let lens: Vec<usize> = self.trajectories.iter().map(Trajectory::len).collect();
        (0..count)
            .map(|_| {
                let mut flat = rng.random_range(0..total);
                for (ti, &len) in lens.iter().enumerate() {
                    if flat < len {
                        return (ti, flat);
                    }
                    flat -= len;
                }
                unreachable!("flat index within total")
            })
            .collect()
    }

    /// Most recent `count` actions, newest trajectories first.
    pub fn recent_actions(&self, count: usize) -> Vec<Action> {
        let mut out = Vec::with_capacity(count);
        'outer: for traj in self.trajectories.iter().rev() {
            for step in traj.steps().iter().rev() {
                out.push(step.action);
                if out.len() == count {
                    break 'outer;
                }
            }
        }
        out
    }
}

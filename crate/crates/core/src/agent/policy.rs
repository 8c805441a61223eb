//! Factored swap policy over the action space.
//!
//! A flat softmax over every action is infeasible on large boards (the
//! 3-cycle family alone is cubic in cell count), so the actor emits three
//! heads: a 3-way action-kind distribution and two position distributions,
//! each the width of the board. An action is assembled factor by factor
//! under masks that rule out off-board positions, repeats, overlapping
//! blocks, and the identity mapping; a 3-cycle's third position reuses the
//! second head under a tightened mask. Log-probabilities are sums of the
//! factor log-probabilities of the action's canonical encoding.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::agent::AgentError;
use crate::nn::Mlp;
use crate::perception::feature_len;
use crate::puzzle::{Action, ActionKind, BoardDims, CycleDir};

/// Precomputed board facts the policy needs for masking.
#[derive(Debug, Clone)]
pub struct PolicyContext {
    dims: BoardDims,
    /// Anchors that have at least one disjoint partner block.
    pairable: Vec<bool>,
    kind_available: [bool; 3],
}

impl PolicyContext {
    pub fn new(dims: BoardDims) -> Self {
        let cells = dims.cells();
        let mut pairable = vec![false; cells];
        for p in dims.pairable_anchors() {
            pairable[p] = true;
        }
        let kind_available = [cells >= 2, cells >= 3, pairable.iter().any(|&p| p)];
        Self {
            dims,
            pairable,
            kind_available,
        }
    }

    pub fn dims(&self) -> BoardDims {
        self.dims
    }

    pub fn kind_available(&self) -> [bool; 3] {
        self.kind_available
    }

    /// Layer sizes for an actor on this board.
    pub fn actor_sizes(&self, hidden: &[usize]) -> Vec<usize> {
        let mut sizes = vec![feature_len(self.dims)];
        sizes.extend_from_slice(hidden);
        sizes.push(3 + 2 * self.dims.cells());
        sizes
    }

    /// Layer sizes for a value network on this board.
    pub fn value_sizes(&self, hidden: &[usize]) -> Vec<usize> {
        let mut sizes = vec![feature_len(self.dims)];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        sizes
    }

    fn kind_logits<'a>(&self, logits: &'a [f64]) -> &'a [f64] {
        &logits[0..3]
    }

    fn pos1_logits<'a>(&self, logits: &'a [f64]) -> &'a [f64] {
        &logits[3..3 + self.dims.cells()]
    }

    fn pos2_logits<'a>(&self, logits: &'a [f64]) -> &'a [f64] {
        &logits[3 + self.dims.cells()..3 + 2 * self.dims.cells()]
    }

    fn pos1_offset(&self) -> usize {
        3
    }

    fn pos2_offset(&self) -> usize {
        3 + self.dims.cells()
    }

    fn pos1_mask(&self, kind: ActionKind) -> Vec<bool> {
        match kind {
            ActionKind::Swap2 | ActionKind::Swap3 => vec![true; self.dims.cells()],
            ActionKind::SwapPuzzlet => self.pairable.clone(),
        }
    }

    fn pos2_mask(&self, kind: ActionKind, first: usize) -> Vec<bool> {
        match kind {
            ActionKind::Swap2 | ActionKind::Swap3 => {
                let mut m = vec![true; self.dims.cells()];
                m[first] = false;
                m
            }
            ActionKind::SwapPuzzlet => (0..self.dims.cells())
                .map(|p| self.pairable[p] && p != first && self.dims.blocks_disjoint(first, p))
                .collect(),
        }
    }

    fn pos3_mask(&self, first: usize, second: usize) -> Vec<bool> {
        let mut m = vec![true; self.dims.cells()];
        m[first] = false;
        m[second] = false;
        m
    }
}

/// Masked softmax probabilities; masked entries are exactly zero.
fn masked_probs(logits: &[f64], mask: &[bool]) -> Result<Vec<f64>, AgentError> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(l, _)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(AgentError::AllMasked);
    }
    let mut probs = vec![0.0; logits.len()];
    let mut total = 0.0;
    for (i, (&l, &m)) in logits.iter().zip(mask).enumerate() {
        if m {
            let e = (l - max).exp();
            probs[i] = e;
            total += e;
        }
    }
    for p in &mut probs {
        *p /= total;
    }
    Ok(probs)
}

/// Log-probability of `index` under the masked softmax.
fn masked_log_prob(logits: &[f64], mask: &[bool], index: usize) -> Result<f64, AgentError> {
    debug_assert!(mask[index], "selected index must be unmasked");
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(l, _)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(AgentError::AllMasked);
    }
    let lse: f64 = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(l, _)| (l - max).exp())
        .sum::<f64>()
        .ln()
        + max;
    Ok(logits[index] - lse)
}

fn sample_index(probs: &[f64], rng: &mut ChaCha12Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_unmasked = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_unmasked = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    // Floating-point shortfall: fall back to the last feasible entry.
    last_unmasked
}

/// An action together with the actor's log-probability of its canonical
/// encoding at sampling time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledAction {
    pub action: Action,
    pub log_prob: f64,
}

/// Sample `count` masked actions from the factored policy. Duplicates are
/// allowed. `kind_prior` (with its blend weight) tilts only the sampling
/// distribution over kinds; reported log-probabilities are always the pure
/// actor's.
pub fn sample_actions(
    actor: &Mlp,
    ctx: &PolicyContext,
    features: &[f64],
    count: usize,
    kind_prior: Option<([f64; 3], f64)>,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<SampledAction>, AgentError> {
    let logits = actor.forward(features)?;
    let kind_mask = [
        ctx.kind_available[0],
        ctx.kind_available[1],
        ctx.kind_available[2],
    ];
    let mut kind_probs = masked_probs(ctx.kind_logits(&logits), &kind_mask)?;
    if let Some((prior, weight)) = kind_prior {
        let mut masked_prior = [0.0; 3];
        let mut total = 0.0;
        for i in 0..3 {
            if kind_mask[i] {
                masked_prior[i] = prior[i].max(0.0);
                total += masked_prior[i];
            }
        }
        if total > 0.0 && (0.0..=1.0).contains(&weight) {
            for i in 0..3 {
                kind_probs[i] = (1.0 - weight) * kind_probs[i] + weight * masked_prior[i] / total;
            }
        }
    }

    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let kind = ActionKind::ALL[sample_index(&kind_probs, rng)];
        let m1 = ctx.pos1_mask(kind);
        let p1 = masked_probs(ctx.pos1_logits(&logits), &m1)?;
        let first = sample_index(&p1, rng);
        let m2 = ctx.pos2_mask(kind, first);
        let p2 = masked_probs(ctx.pos2_logits(&logits), &m2)?;
        let second = sample_index(&p2, rng);
        let action = match kind {
            ActionKind::Swap2 => Action::Swap2 {
                a: first,
                b: second,
            },
            ActionKind::SwapPuzzlet => Action::SwapPuzzlet {
                a: first,
                b: second,
            },
            ActionKind::Swap3 => {
                let m3 = ctx.pos3_mask(first, second);
                let p3 = masked_probs(ctx.pos2_logits(&logits), &m3)?;
                let third = sample_index(&p3, rng);
                Action::Swap3 {
                    a: first,
                    b: second,
                    c: third,
                    dir: CycleDir::Forward,
                }
            }
        }
        .canonical();
        let log_prob = log_prob_from_logits(&logits, ctx, &action)?;
        out.push(SampledAction { action, log_prob });
    }
    Ok(out)
}

/// Canonical slots of an action for factor lookup.
fn canonical_slots(action: &Action) -> (ActionKind, Vec<usize>) {
    let canon = action.canonical();
    (canon.kind(), canon.positions())
}

/// Log-probability of an action's canonical encoding under the actor
/// logits: the sum of its factor log-probabilities.
pub fn log_prob_from_logits(
    logits: &[f64],
    ctx: &PolicyContext,
    action: &Action,
) -> Result<f64, AgentError> {
    let (kind, slots) = canonical_slots(action);
    let kind_mask = ctx.kind_available;
    let mut lp = masked_log_prob(ctx.kind_logits(logits), &kind_mask, kind.index())?;
    let m1 = ctx.pos1_mask(kind);
    lp += masked_log_prob(ctx.pos1_logits(logits), &m1, slots[0])?;
    let m2 = ctx.pos2_mask(kind, slots[0]);
    lp += masked_log_prob(ctx.pos2_logits(logits), &m2, slots[1])?;
    if kind == ActionKind::Swap3 {
        let m3 = ctx.pos3_mask(slots[0], slots[1]);
        lp += masked_log_prob(ctx.pos2_logits(logits), &m3, slots[2])?;
    }
    Ok(lp)
}

/// Forward the actor and score one action.
pub fn action_log_prob(
    actor: &Mlp,
    ctx: &PolicyContext,
    features: &[f64],
    action: &Action,
) -> Result<f64, AgentError> {
    let logits = actor.forward(features)?;
    log_prob_from_logits(&logits, ctx, action)
}

/// Log-probability plus its gradient with respect to the actor logits.
///
/// For a masked softmax, `d log p(i) / d logit(j) = delta(i,j) - p(j)` over
/// the unmasked support; the 3-cycle's extra factor accumulates a second
/// contribution onto the shared second-position head.
pub fn log_prob_grad(
    logits: &[f64],
    ctx: &PolicyContext,
    action: &Action,
) -> Result<(f64, Vec<f64>), AgentError> {
    let (kind, slots) = canonical_slots(action);
    let mut grad = vec![0.0; logits.len()];
    let mut lp = 0.0;

    let factor = |head_logits: &[f64],
                  mask: &[bool],
                  selected: usize,
                  offset: usize,
                  grad: &mut Vec<f64>|
     -> Result<f64, AgentError> {
        let probs = masked_probs(head_logits, mask)?;
        for (j, (&p, &m)) in probs.iter().zip(mask).enumerate() {
            if m {
                grad[offset + j] += if j == selected { 1.0 - p } else { -p };
            }
        }
        masked_log_prob(head_logits, mask, selected)
    };

    let kind_mask = ctx.kind_available;
    lp += factor(
        ctx.kind_logits(logits),
        &kind_mask,
        kind.index(),
        0,
        &mut grad,
    )?;
    let m1 = ctx.pos1_mask(kind);
    lp += factor(
        ctx.pos1_logits(logits),
        &m1,
        slots[0],
        ctx.pos1_offset(),
        &mut grad,
    )?;
    let m2 = ctx.pos2_mask(kind, slots[0]);
    lp += factor(
        ctx.pos2_logits(logits),
        &m2,
        slots[1],
        ctx.pos2_offset(),
        &mut grad,
    )?;
    if kind == ActionKind::Swap3 {
        let m3 = ctx.pos3_mask(slots[0], slots[1]);
        lp += factor(
            ctx.pos2_logits(logits),
            &m3,
            slots[2],
            ctx.pos2_offset(),
            &mut grad,
        )?;
    }
    Ok((lp, grad))
}

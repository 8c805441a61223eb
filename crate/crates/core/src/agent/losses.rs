//! Scalar learning targets: advantage, the clipped policy objective, the
//! critic's return-to-go regression, and the evaluator soft update.

use crate::agent::replay::Transition;
use crate::agent::AgentError;
use crate::nn::Mlp;

/// One-step advantage: `R + discount * V(s') * (1 - done) - V(s)`.
/// Terminal steps bootstrap from nothing.
pub fn compute_advantage(
    reward: f64,
    value_s: f64,
    value_next: f64,
    discount: f64,
    done: bool,
) -> f64 {
    let bootstrap = if done { 0.0 } else { discount * value_next };
    reward + bootstrap - value_s
}

/// Clipped-objective evaluation for one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyLoss {
    /// Surrogate objective value (to ascend).
    pub objective: f64,
    /// `-objective`, the quantity descended by the optimizer.
    pub loss: f64,
    /// d(loss)/d(log_prob_new). Zero when the clipped branch is active and
    /// saturated, so such samples contribute no actor gradient.
    pub dloss_dlogp: f64,
}

/// Probability-ratio surrogate with symmetric clipping:
/// `min(ratio * adv, clamp(ratio, 1-eps, 1+eps) * adv)`.
pub fn policy_loss(
    log_prob_new: f64,
    log_prob_old: f64,
    advantage: f64,
    clip_epsilon: f64,
) -> PolicyLoss {
    let ratio = (log_prob_new - log_prob_old).exp();
    let clipped_ratio = ratio.clamp(1.0 - clip_epsilon, 1.0 + clip_epsilon);
    let unclipped = ratio * advantage;
    let clipped = clipped_ratio * advantage;
    let objective = unclipped.min(clipped);
    // d(ratio)/d(logp_new) = ratio; gradient flows only through the
    // unclipped branch (at ties the branches coincide inside the clip
    // window, where the derivative is the same).
    let dobj_dlogp = if unclipped <= clipped {
        advantage * ratio
    } else {
        0.0
    };
    PolicyLoss {
        objective,
        loss: -objective,
        dloss_dlogp: -dobj_dlogp,
    }
}

/// Discounted return-to-go of each step, by backward accumulation.
pub fn returns_to_go(rewards: &[f64], discount: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (i, &r) in rewards.iter().enumerate().rev() {
        acc = r + discount * acc;
        out[i] = acc;
    }
    out
}

/// Critic regression on one trajectory tail: squared error between the
/// predicted value of the segment's head state and the empirical
/// discounted return accumulated over the segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticLoss {
    pub loss: f64,
    pub value: f64,
    pub target: f64,
    /// d(loss)/d(value) at the head state.
    pub dloss_dvalue: f64,
}

pub fn critic_loss(
    segment: &[Transition],
    critic: &Mlp,
    discount: f64,
) -> Result<CriticLoss, AgentError> {
    let head = segment.first().ok_or(AgentError::EmptySegment)?;
    let value = critic.forward(&head.features)?[0];
    let mut target = 0.0;
    for step in segment.iter().rev() {
        target = step.reward + discount * target;
    }
    let err = value - target;
    Ok(CriticLoss {
        loss: err * err,
        value,
        target,
        dloss_dvalue: 2.0 * err,
    })
}

/// Soft update: `evaluator = rate * critic + (1 - rate) * evaluator`.
pub fn soft_update_evaluator(
    critic: &Mlp,
    evaluator: &mut Mlp,
    rate: f64,
) -> Result<(), AgentError> {
    evaluator.blend_from(critic, rate)?;
    Ok(())
}

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("non-finite gradient entry {0}; step rejected")]
    NonFiniteGradient(usize),
    #[error("gradient has {got} entries, parameters have {want}")]
    Layout { want: usize, got: usize },
    #[error("learning rate must be positive and finite, got {0}")]
    LearningRate(f64),
}

/// Moment accumulators of Adam.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n: usize) -> AdamState {
        AdamState { m: vec![0.0; n], v: vec![0.0; n], step: 0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// One bias-corrected Adam update of `params[range]`.
///
/// Entries outside `range` are untouched. A non-finite gradient entry in
/// the range rejects the whole step and leaves `params` and `state`
/// unchanged.
pub fn adam_step_range(
    params: &mut [f64],
    grad: &[f64],
    state: &mut AdamState,
    lr: f64,
    range: Range<usize>,
) -> Result<(), OptimError> {
    adam_step_ranges(params, grad, state, lr, &[range])
}

/// Adam update restricted to several disjoint ranges (one optimizer step).
pub fn adam_step_ranges(
    params: &mut [f64],
    grad: &[f64],
    state: &mut AdamState,
    lr: f64,
    ranges: &[Range<usize>],
) -> Result<(), OptimError> {
    if grad.len() != params.len() || state.m.len() != params.len() {
        return Err(OptimError::Layout { want: params.len(), got: grad.len() });
    }
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(OptimError::LearningRate(lr));
    }
    for range in ranges {
        if let Some(k) = grad[range.clone()].iter().position(|g| !g.is_finite()) {
            return Err(OptimError::NonFiniteGradient(range.start + k));
        }
    }
    state.step += 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(state.step as i32);
    let c2 = 1.0 - b2.powi(state.step as i32);
    for k in ranges.iter().flat_map(|r| r.clone()) {
        let g = grad[k];
        state.m[k] = b1 * state.m[k] + (1.0 - b1) * g;
        state.v[k] = b2 * state.v[k] + (1.0 - b2) * g * g;
        let mh = state.m[k] / c1;
        let vh = state.v[k] / c2;
        params[k] -= lr * mh / (vh.sqrt() + state.eps);
    }
    Ok(())
}

/// Adam update of every parameter.
pub fn adam_step(params: &mut [f64], grad: &[f64], state: &mut AdamState, lr: f64) -> Result<(), OptimError> {
    let n = params.len();
    adam_step_range(params, grad, state, lr, 0..n)
}

/// Step decay: `lr(e) = start * gamma^(number of milestones <= e)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDecay {
    pub lr: f64,
    pub gamma: f64,
    pub milestones: Vec<usize>,
}

impl StepDecay {
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let passed = self.milestones.iter().filter(|&&m| m <= epoch).count();
        self.lr * self.gamma.powi(passed as i32)
    }

    /// Milestones scaled from a run of `from` epochs to one of `to` epochs.
    pub fn rescaled(&self, from: usize, to: usize) -> StepDecay {
        StepDecay {
            lr: self.lr,
            gamma: self.gamma,
            milestones: self.milestones.iter().map(|&m| m * to / from).collect(),
        }
    }

    pub fn validate(&self, epochs: usize) -> Result<(), String> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(format!("learning rate must be positive, got {}", self.lr));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(format!("decay factor must be positive, got {}", self.gamma));
        }
        if self.milestones.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("milestones must be strictly increasing: {:?}", self.milestones));
        }
        if let Some(&last) = self.milestones.last() {
            if last >= epochs {
                return Err(format!("milestone {last} is not below the epoch count {epochs}"));
            }
        }
        Ok(())
    }
}

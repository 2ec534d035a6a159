//! k-bit flip-flop task generation and scoring.
//!
//! Each step the input is the zero vector with probability `1 - p`, or a
//! single-channel pulse of value +1 or -1 chosen uniformly over channels and
//! signs. A pulse on channel j sets the target bit j to the pulse sign; all
//! other bits hold ("no change"). Targets update at the same step as the
//! pulse.

use crate::error::{EnaError, Result};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    /// Number of bits k.
    pub bits: usize,
    /// Per-step pulse probability p.
    pub pulse_prob: f64,
    /// Sequence length in steps.
    pub length: usize,
    pub seed: u64,
}

impl TaskConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bits == 0 {
            return Err(EnaError::InvalidParameter("bits must be >= 1".into()));
        }
        if !(self.pulse_prob > 0.0 && self.pulse_prob < 1.0) {
            return Err(EnaError::InvalidParameter(format!(
                "pulse probability must lie in (0, 1), got {}",
                self.pulse_prob
            )));
        }
        if self.length == 0 {
            return Err(EnaError::InvalidParameter("length must be >= 1".into()));
        }
        Ok(())
    }
}

/// Generated input/target pair. The memory state before the first pulse is
/// fixed to all +1 and recorded in `initial_memory`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskData {
    pub inputs: Vec<DVector<f64>>,
    pub targets: Vec<DVector<f64>>,
    pub initial_memory: DVector<f64>,
}

impl TaskData {
    pub fn bits(&self) -> usize {
        self.initial_memory.len()
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

pub fn generate(config: &TaskConfig) -> Result<TaskData> {
    config.validate()?;
    let k = config.bits;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut memory = DVector::from_element(k, 1.0);
    let initial_memory = memory.clone();
    let mut inputs = Vec::with_capacity(config.length);
    let mut targets = Vec::with_capacity(config.length);
    for _ in 0..config.length {
        let mut u = DVector::zeros(k);
        if rng.random::<f64>() < config.pulse_prob {
            let channel = rng.random_range(0..k);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            u[channel] = sign;
            memory[channel] = sign;
        }
        inputs.push(u);
        targets.push(memory.clone());
    }
    Ok(TaskData { inputs, targets, initial_memory })
}

/// Mean over steps and channels of the squared output error.
pub fn mse(outputs: &[DVector<f64>], targets: &[DVector<f64>]) -> Result<f64> {
    if outputs.is_empty() {
        return Err(EnaError::EmptyInput("mse over empty sequences".into()));
    }
    if outputs.len() != targets.len() {
        return Err(EnaError::DimensionMismatch(format!(
            "{} outputs vs {} targets",
            outputs.len(),
            targets.len()
        )));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (z, y) in outputs.iter().zip(targets.iter()) {
        if z.len() != y.len() {
            return Err(EnaError::DimensionMismatch(format!(
                "output width {} vs target width {}",
                z.len(),
                y.len()
            )));
        }
        sum += (z - y).norm_squared();
        count += z.len();
    }
    Ok(sum / count as f64)
}

/// Counts steps whose output sign disagrees with the target on some channel,
/// ignoring a per-channel settling window of `grace` steps after each target
/// change. Designed reservoirs whose read-out coordinate is driven
/// indirectly need a step or two to complete a switch.
pub fn switch_errors(
    outputs: &[DVector<f64>],
    targets: &[DVector<f64>],
    grace: usize,
) -> Result<usize> {
    if outputs.len() != targets.len() {
        return Err(EnaError::DimensionMismatch(format!(
            "{} outputs vs {} targets",
            outputs.len(),
            targets.len()
        )));
    }
    if outputs.is_empty() {
        return Ok(0);
    }
    let k = targets[0].len();
    let mut last_change = vec![0usize; k];
    let mut errors = 0;
    for step in 0..targets.len() {
        let mut bad = false;
        for c in 0..k {
            if step > 0 && targets[step][c] != targets[step - 1][c] {
                last_change[c] = step;
            }
            if step - last_change[c] >= grace && outputs[step][c] * targets[step][c] <= 0.0 {
                bad = true;
            }
        }
        if bad {
            errors += 1;
        }
    }
    Ok(errors)
}

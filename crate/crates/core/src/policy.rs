//! The sample-mean UCB index policy.
//!
//! Each arm carries the index
//!
//! ```text
//! g_i = rbar_i + sqrt(L ln n / T_i)
//! ```
//!
//! where `rbar_i` is the sample mean of the rewards observed from arm i,
//! `T_i` its play count, `n` the current step, and `L` the exploration
//! constant. Every arm is played once up front; afterwards the policy plays
//! the arm with the highest index. The sample mean is maintained recursively,
//! so a step costs O(K).

use serde::Serialize;
use thiserror::Error;

use crate::sim::BanditInstance;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("index is undefined for an arm with zero plays")]
    ZeroPlayCount,

    #[error("step must be at least 1, got {step}")]
    InvalidStep { step: f64 },
}

/// Exploration bonus `sqrt(L ln t / s)` for step `t` and play count `s`.
pub fn exploration_bonus(step: f64, plays: u64, exploration: f64) -> Result<f64, PolicyError> {
    if step.is_nan() || step < 1.0 {
        return Err(PolicyError::InvalidStep { step });
    }
    if plays == 0 {
        return Err(PolicyError::ZeroPlayCount);
    }
    Ok((exploration * step.ln() / plays as f64).sqrt())
}

/// The policy's entire memory: per-arm play counts and sample means, the
/// global step count, and the exploration constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UcbState {
    exploration: f64,
    counts: Vec<u64>,
    means: Vec<f64>,
    step: u64,
}

impl UcbState {
    pub fn new(arms: usize, exploration: f64) -> Self {
        assert!(arms >= 1, "need at least one arm");
        assert!(
            exploration >= 0.0 && exploration.is_finite(),
            "exploration constant must be a nonnegative real"
        );
        UcbState {
            exploration,
            counts: vec![0; arms],
            means: vec![0.0; arms],
            step: 0,
        }
    }

    pub fn arms(&self) -> usize {
        self.counts.len()
    }

    pub fn exploration(&self) -> f64 {
        self.exploration
    }

    /// Completed plays so far; equals `sum_i T_i` after every step.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn play_counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sample_means(&self) -> &[f64] {
        &self.means
    }

    /// Index of one arm for the play currently being decided. The bonus uses
    /// `ln n` with n the 1-based number of that play.
    pub fn index(&self, arm: usize) -> Result<f64, PolicyError> {
        Ok(self.means[arm]
            + exploration_bonus((self.step + 1) as f64, self.counts[arm], self.exploration)?)
    }

    /// All indices; defined only once every arm has been played.
    pub fn indices(&self) -> Result<Vec<f64>, PolicyError> {
        (0..self.arms()).map(|i| self.index(i)).collect()
    }

    /// Chooses the next arm: arms 0..K-1 in order while any is unplayed,
    /// then the argmax index with ties broken toward the lowest arm.
    pub fn select_arm(&self) -> usize {
        let k = self.arms() as u64;
        if self.step < k {
            return self.step as usize;
        }
        let indices = self
            .indices()
            .expect("every arm has been played after the initialization phase");
        argmax_tie_lowest(&indices)
    }

    /// Records the reward of the arm just played: `T_arm += 1`,
    /// `rbar_arm += (r - rbar_arm) / T_arm`, `n += 1`.
    pub fn record_reward(&mut self, arm: usize, reward: f64) {
        self.counts[arm] += 1;
        self.means[arm] += (reward - self.means[arm]) / self.counts[arm] as f64;
        self.step += 1;
    }
}

/// Position of the maximum, lowest index on ties. Adding a common constant to
/// every value leaves the answer unchanged.
pub fn argmax_tie_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Arm with the highest stationary mean reward, ties to the lowest index.
pub fn best_arm(instance: &BanditInstance) -> usize {
    instance.best_arm()
}

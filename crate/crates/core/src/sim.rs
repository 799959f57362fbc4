//! Rested-bandit episode engine.
//!
//! At each step exactly one arm is played: that arm transitions once and
//! yields its *new* state's reward; every other arm stays frozen in place.
//! The regret of a run against the best single arm is
//!
//! ```text
//! R(n) = n mu* - (accumulated reward up to n)
//! ```
//!
//! which can be negative on finite samples. Trajectories are averaged over
//! seeded Monte Carlo runs; run r draws from the ChaCha stream
//! `(base_seed, r)`, so runs are mutually independent and the whole
//! experiment replays bit-identically from its base seed. Runs are
//! embarrassingly parallel and aggregation is ordered by run index, so the
//! result does not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::chain::Arm;
use crate::policy::UcbState;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("a bandit instance needs at least 2 arms, got {arms}")]
    TooFewArms { arms: usize },

    #[error("horizon {horizon} is shorter than the {arms}-arm initialization phase")]
    HorizonTooShort { horizon: u64, arms: usize },

    #[error("need at least 1 run")]
    NoRuns,

    #[error("checkpoint {checkpoint} is 0 or beyond the horizon {horizon}")]
    BadCheckpoint { checkpoint: u64, horizon: u64 },
}

/// A K-arm instance with the aggregates the bound evaluators need.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BanditInstance {
    arms: Vec<Arm>,
    best: usize,
    best_mean: f64,
    gaps: Vec<f64>,
    eps_min: f64,
    eps_max: f64,
    s_max: usize,
    r_max: f64,
    r_min: f64,
    pi_min: f64,
}

impl BanditInstance {
    pub fn new(arms: Vec<Arm>) -> Result<Self, SimError> {
        if arms.len() < 2 {
            return Err(SimError::TooFewArms { arms: arms.len() });
        }
        let mut best = 0;
        for (i, arm) in arms.iter().enumerate() {
            if arm.mean_reward() > arms[best].mean_reward() {
                best = i;
            }
        }
        let best_mean = arms[best].mean_reward();
        let gaps = arms.iter().map(|a| best_mean - a.mean_reward()).collect();
        let eps_min = arms
            .iter()
            .map(Arm::eigenvalue_gap)
            .fold(f64::INFINITY, f64::min);
        let eps_max = arms
            .iter()
            .map(Arm::eigenvalue_gap)
            .fold(f64::NEG_INFINITY, f64::max);
        let s_max = arms.iter().map(Arm::n_states).max().unwrap_or(0);
        let r_max = arms.iter().map(Arm::reward_max).fold(f64::NEG_INFINITY, f64::max);
        let r_min = arms.iter().map(Arm::reward_min).fold(f64::INFINITY, f64::min);
        let pi_min = arms
            .iter()
            .map(Arm::stationary_min)
            .fold(f64::INFINITY, f64::min);
        Ok(BanditInstance {
            arms,
            best,
            best_mean,
            gaps,
            eps_min,
            eps_max,
            s_max,
            r_max,
            r_min,
            pi_min,
        })
    }

    pub fn arms(&self) -> &[Arm] {
        &self.arms
    }

    pub fn arm(&self, i: usize) -> &Arm {
        &self.arms[i]
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    /// Index of the arm with the highest mean, ties to the lowest index.
    pub fn best_arm(&self) -> usize {
        self.best
    }

    /// `mu* = max_i mu_i`.
    pub fn best_mean(&self) -> f64 {
        self.best_mean
    }

    /// `Delta_i = mu* - mu_i`, zero exactly for optimal arms.
    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn eps_min(&self) -> f64 {
        self.eps_min
    }

    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    /// Global minimum stationary probability across all arms and states.
    pub fn pi_min(&self) -> f64 {
        self.pi_min
    }
}

/// Seed of one run: base seed plus the run's stream index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StreamSeed {
    pub base: u64,
    pub stream: u64,
}

impl StreamSeed {
    pub fn new(base: u64, stream: u64) -> Self {
        StreamSeed { base, stream }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base);
        rng.set_stream(self.stream);
        rng
    }
}

/// Everything observed in one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeRecord {
    /// Checkpoints the run was sampled at, increasing, last = horizon.
    pub checkpoints: Vec<u64>,
    /// Accumulated reward at each checkpoint.
    pub reward_at: Vec<f64>,
    /// Play counts per arm at each checkpoint (checkpoint-major).
    pub plays_at: Vec<Vec<u64>>,
    /// Reward accumulated per arm over the whole run.
    pub per_arm_reward: Vec<f64>,
    /// Arm states after the final step.
    pub final_states: Vec<usize>,
    pub total_reward: f64,
}

impl EpisodeRecord {
    /// Realized regret at checkpoint k against the best mean.
    pub fn regret_at(&self, k: usize, best_mean: f64) -> f64 {
        self.checkpoints[k] as f64 * best_mean - self.reward_at[k]
    }
}

/// Default logarithmic checkpoint grid: starts at the end of the
/// initialization phase and grows by ~1.3x up to the horizon.
pub fn default_checkpoints(horizon: u64, arms: usize) -> Vec<u64> {
    let mut grid = Vec::new();
    let mut c = (arms as u64).max(1).min(horizon);
    while c < horizon {
        grid.push(c);
        c = ((c as f64 * 1.3).ceil() as u64).max(c + 1);
    }
    grid.push(horizon);
    grid
}

fn validate_checkpoints(checkpoints: &[u64], horizon: u64) -> Result<Vec<u64>, SimError> {
    let mut cps = checkpoints.to_vec();
    cps.sort_unstable();
    cps.dedup();
    for &c in &cps {
        if c == 0 || c > horizon {
            return Err(SimError::BadCheckpoint {
                checkpoint: c,
                horizon,
            });
        }
    }
    if cps.last() != Some(&horizon) {
        cps.push(horizon);
    }
    Ok(cps)
}

/// Runs one episode, invoking `on_step(step, arm, states)` after every play
/// with the post-transition states of all arms. Used by the tests to check
/// that unplayed arms stay frozen; the no-hook entry point is [`run_episode`].
pub fn run_episode_with<F>(
    instance: &BanditInstance,
    exploration: f64,
    horizon: u64,
    seed: StreamSeed,
    checkpoints: &[u64],
    mut on_step: F,
) -> Result<EpisodeRecord, SimError>
where
    F: FnMut(u64, usize, &[usize]),
{
    let k = instance.len();
    if horizon < k as u64 {
        return Err(SimError::HorizonTooShort {
            horizon,
            arms: k,
        });
    }
    let checkpoints = validate_checkpoints(checkpoints, horizon)?;

    let mut rng = seed.rng();
    let mut states: Vec<usize> = instance
        .arms()
        .iter()
        .map(|arm| arm.sample_initial(&mut rng))
        .collect();

    let mut policy = UcbState::new(k, exploration);
    let mut total_reward = 0.0;
    let mut per_arm_reward = vec![0.0; k];
    let mut reward_at = Vec::with_capacity(checkpoints.len());
    let mut plays_at = Vec::with_capacity(checkpoints.len());
    let mut next_checkpoint = 0;

    for step in 1..=horizon {
        let arm_idx = policy.select_arm();
        let arm = instance.arm(arm_idx);
        let next = arm
            .sample_next(states[arm_idx], &mut rng)
            .expect("states stay in range");
        states[arm_idx] = next;
        let reward = arm.reward(next);
        policy.record_reward(arm_idx, reward);
        total_reward += reward;
        per_arm_reward[arm_idx] += reward;
        on_step(step, arm_idx, &states);

        if checkpoints[next_checkpoint] == step {
            reward_at.push(total_reward);
            plays_at.push(policy.play_counts().to_vec());
            next_checkpoint += 1;
        }
    }

    Ok(EpisodeRecord {
        checkpoints,
        reward_at,
        plays_at,
        per_arm_reward,
        final_states: states,
        total_reward,
    })
}

/// Runs one episode of the UCB policy against a rested instance.
pub fn run_episode(
    instance: &BanditInstance,
    exploration: f64,
    horizon: u64,
    seed: StreamSeed,
    checkpoints: &[u64],
) -> Result<EpisodeRecord, SimError> {
    run_episode_with(instance, exploration, horizon, seed, checkpoints, |_, _, _| {})
}

/// Mean regret and dispersion across seeded Monte Carlo runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretTrajectory {
    pub horizons: Vec<u64>,
    pub mean_regret: Vec<f64>,
    pub std_error: Vec<f64>,
    /// Mean play counts per arm at each horizon (horizon-major).
    pub mean_plays: Vec<Vec<f64>>,
    pub runs: u64,
    pub base_seed: u64,
}

impl RegretTrajectory {
    /// Mean play counts at the final horizon.
    pub fn final_mean_plays(&self) -> &[f64] {
        self.mean_plays.last().expect("at least one checkpoint")
    }

    pub fn final_mean_regret(&self) -> f64 {
        *self.mean_regret.last().expect("at least one checkpoint")
    }

    pub fn final_std_error(&self) -> f64 {
        *self.std_error.last().expect("at least one checkpoint")
    }
}

/// Averages `runs` independent episodes; run r uses stream `(base_seed, r)`.
pub fn monte_carlo_regret(
    instance: &BanditInstance,
    exploration: f64,
    horizon: u64,
    runs: u64,
    base_seed: u64,
    checkpoints: &[u64],
) -> Result<RegretTrajectory, SimError> {
    if runs == 0 {
        return Err(SimError::NoRuns);
    }
    let records: Vec<EpisodeRecord> = (0..runs)
        .into_par_iter()
        .map(|r| {
            run_episode(
                instance,
                exploration,
                horizon,
                StreamSeed::new(base_seed, r),
                checkpoints,
            )
        })
        .collect::<Result<_, _>>()?;

    let horizons = records[0].checkpoints.clone();
    let k = instance.len();
    let best_mean = instance.best_mean();
    let n_cp = horizons.len();

    let mut mean_regret = Vec::with_capacity(n_cp);
    let mut std_error = Vec::with_capacity(n_cp);
    let mut mean_plays = Vec::with_capacity(n_cp);
    for cp in 0..n_cp {
        let regrets: Vec<f64> = records.iter().map(|rec| rec.regret_at(cp, best_mean)).collect();
        let mean = regrets.iter().sum::<f64>() / runs as f64;
        let se = if runs > 1 {
            let var = regrets.iter().map(|r| (r - mean).powi(2)).sum::<f64>()
                / (runs - 1) as f64;
            (var / runs as f64).sqrt()
        } else {
            0.0
        };
        mean_regret.push(mean);
        std_error.push(se);

        let mut plays = vec![0.0; k];
        for rec in &records {
            for (i, &t) in rec.plays_at[cp].iter().enumerate() {
                plays[i] += t as f64;
            }
        }
        for p in &mut plays {
            *p /= runs as f64;
        }
        mean_plays.push(plays);
    }

    Ok(RegretTrajectory {
        horizons,
        mean_regret,
        std_error,
        mean_plays,
        runs,
        base_seed,
    })
}

/// Gap-weighted play counts against the direct regret at the final horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretDecomposition {
    /// `sum_i Delta_i E[T_i(n)]`, estimated from mean play counts.
    pub gap_weighted_plays: f64,
    /// Mean of `n mu* - accumulated reward`.
    pub direct_regret: f64,
    /// `direct_regret - gap_weighted_plays`; bounded in expectation by the
    /// reward-chain constant reported by the analysis module.
    pub difference: f64,
}

/// Compares the two regret bookkeeping routes on a finished trajectory.
pub fn regret_decomposition(
    trajectory: &RegretTrajectory,
    instance: &BanditInstance,
) -> RegretDecomposition {
    let gap_weighted_plays = trajectory
        .final_mean_plays()
        .iter()
        .zip(instance.gaps())
        .map(|(t, d)| t * d)
        .sum();
    let direct_regret = trajectory.final_mean_regret();
    RegretDecomposition {
        gap_weighted_plays,
        direct_regret,
        difference: direct_regret - gap_weighted_plays,
    }
}

//! Finite Markov reward chains backing the bandit arms.
//!
//! An arm is an irreducible, aperiodic, reversible chain over a finite state
//! space with one strictly positive reward per state. Construction validates
//! the chain and precomputes the derived quantities every other module needs:
//!
//! ```text
//! stationary pi :  pi P = pi,  sum_x pi_x = 1
//! mean reward   :  mu = sum_x r_x pi_x
//! eigenvalue gap:  eps = 1 - lambda_2
//! ```
//!
//! `lambda_2` is the second largest eigenvalue of P. For reversible chains the
//! spectrum is real, and it is computed from the symmetrized similar matrix
//! `D^{1/2} P D^{-1/2}` (D = diag(pi)), whose symmetry is exactly the detailed
//! balance condition `pi_x p_xy = pi_y p_yx`.
//!
//! Two-state chains admit closed forms used throughout the tests:
//!
//! ```text
//! pi  = [p10, p01] / (p01 + p10)
//! eps = p01 + p10
//! ```
//!
//! Arms are immutable after construction and safe to share across concurrent
//! simulation runs; RNG streams are always per-run.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::linalg;

/// Row sums of the transition matrix must match 1 this tightly.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Allowed residual of the detailed balance condition.
pub const DETAILED_BALANCE_TOL: f64 = 1e-9;
/// Allowed residual of `pi P = pi` for the computed stationary vector.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;
/// Allowed deviation of a user-supplied initial distribution from summing to 1.
pub const INITIAL_DIST_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("transition matrix must be square, row {row} has {len} entries for {n} states")]
    NonSquareMatrix { row: usize, len: usize, n: usize },

    #[error("chain needs at least 2 states, got {n}")]
    TooFewStates { n: usize },

    #[error("{vector} has {len} entries but the chain has {n} states")]
    DimensionMismatch {
        vector: &'static str,
        len: usize,
        n: usize,
    },

    #[error("transition entry ({row},{col}) = {value} is outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },

    #[error("row {row} of the transition matrix sums to {sum}, not 1")]
    NonStochasticRow { row: usize, sum: f64 },

    #[error("chain is reducible: state {state} does not communicate with state 0")]
    Reducible { state: usize },

    #[error("chain is periodic with period {period}")]
    Periodic { period: u64 },

    #[error("chain is not reversible: detailed balance residual {residual} exceeds {tol}")]
    NonReversible { residual: f64, tol: f64 },

    #[error("reward for state {state} is {value}; rewards must be strictly positive")]
    NonPositiveReward { state: usize, value: f64 },

    #[error("initial distribution entry {state} = {value}; entries must be strictly positive")]
    NonPositiveInitial { state: usize, value: f64 },

    #[error("initial distribution sums to {sum}, not 1")]
    InitialDistNotNormalized { sum: f64 },

    #[error("stationary solve failed: matrix is numerically singular")]
    StationarySolveFailed,

    #[error("stationary residual {residual} exceeds {tol}")]
    StationaryResidualTooLarge { residual: f64, tol: f64 },

    #[error("stationary entry {state} = {value} is not strictly positive")]
    StationaryNotPositive { state: usize, value: f64 },

    #[error("eigensolve did not converge")]
    EigenSolveFailed,

    #[error("eigenvalue gap {gap} is outside (0, 2]")]
    GapOutOfRange { gap: f64 },

    #[error("theta = {theta} is outside (0, 10): the two-state family degenerates at the endpoints")]
    ThetaOutOfRange { theta: f64 },

    #[error("state index {state} is out of range for a {n}-state chain")]
    InvalidStateIndex { state: usize, n: usize },
}

/// One bandit arm: a validated Markov reward chain plus its derived
/// stationary distribution, eigenvalue gap, and mean reward.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Arm {
    transition: Vec<Vec<f64>>,
    rewards: Vec<f64>,
    initial_dist: Vec<f64>,
    stationary: Vec<f64>,
    gap: f64,
    mean: f64,
}

impl Arm {
    /// Builds and validates an arm. `initial_dist = None` defaults to the
    /// stationary distribution.
    pub fn new(
        transition: Vec<Vec<f64>>,
        rewards: Vec<f64>,
        initial_dist: Option<Vec<f64>>,
    ) -> Result<Self, ChainError> {
        let n = transition.len();
        validate_transition(&transition)?;
        if rewards.len() != n {
            return Err(ChainError::DimensionMismatch {
                vector: "rewards",
                len: rewards.len(),
                n,
            });
        }
        for (state, &r) in rewards.iter().enumerate() {
            if r.is_nan() || r <= 0.0 {
                return Err(ChainError::NonPositiveReward { state, value: r });
            }
        }

        let stationary = stationary_of_validated(&transition)?;
        let gap = gap_of_validated(&transition, &stationary)?;
        let mean = rewards
            .iter()
            .zip(stationary.iter())
            .map(|(r, p)| r * p)
            .sum();

        let initial_dist = match initial_dist {
            None => stationary.clone(),
            Some(mut q) => {
                if q.len() != n {
                    return Err(ChainError::DimensionMismatch {
                        vector: "initial_dist",
                        len: q.len(),
                        n,
                    });
                }
                for (state, &v) in q.iter().enumerate() {
                    if v.is_nan() || v <= 0.0 {
                        return Err(ChainError::NonPositiveInitial { state, value: v });
                    }
                }
                let sum: f64 = q.iter().sum();
                if (sum - 1.0).abs() > INITIAL_DIST_SUM_TOL {
                    return Err(ChainError::InitialDistNotNormalized { sum });
                }
                for v in &mut q {
                    *v /= sum;
                }
                q
            }
        };

        Ok(Arm {
            transition,
            rewards,
            initial_dist,
            stationary,
            gap,
            mean,
        })
    }

    /// Two-state arm from the off-diagonal transition probabilities.
    pub fn two_state(p01: f64, p10: f64, r0: f64, r1: f64) -> Result<Self, ChainError> {
        Arm::new(
            vec![vec![1.0 - p01, p01], vec![p10, 1.0 - p10]],
            vec![r0, r1],
            None,
        )
    }

    pub fn n_states(&self) -> usize {
        self.transition.len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn transition_prob(&self, from: usize, to: usize) -> f64 {
        self.transition[from][to]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn reward(&self, state: usize) -> f64 {
        self.rewards[state]
    }

    pub fn reward_min(&self) -> f64 {
        self.rewards.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn reward_max(&self) -> f64 {
        self.rewards
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn stationary_min(&self) -> f64 {
        self.stationary
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Eigenvalue gap `eps = 1 - lambda_2`.
    pub fn eigenvalue_gap(&self) -> f64 {
        self.gap
    }

    /// Stationary mean reward `mu = sum_x r_x pi_x`.
    pub fn mean_reward(&self) -> f64 {
        self.mean
    }

    /// Draws the next state from row `current` of the transition matrix.
    /// Advances the stream deterministically given its seed.
    pub fn sample_next<R: Rng + ?Sized>(
        &self,
        current: usize,
        rng: &mut R,
    ) -> Result<usize, ChainError> {
        if current >= self.n_states() {
            return Err(ChainError::InvalidStateIndex {
                state: current,
                n: self.n_states(),
            });
        }
        Ok(sample_index(&self.transition[current], rng))
    }

    /// Draws a start state from the arm's initial distribution.
    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.initial_dist, rng)
    }

    /// Draws a start state from the stationary distribution.
    pub fn sample_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.stationary, rng)
    }
}

/// Inverse-CDF draw from a probability vector.
fn sample_index<R: Rng + ?Sized>(dist: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &p) in dist.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        cum += p;
        if u < cum {
            return i;
        }
    }
    // Rounding pushed the cumulative sum below u; take the last reachable state.
    last_positive
}

/// The two-state family parametrized by theta in (0, 10):
/// `p10 = 1 - (theta/10)^2`, `p01 = (theta/10)^3`, rewards (1, 2).
/// Its mean reward is strictly increasing in theta.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaFamilyPoint {
    theta: f64,
    arm: Arm,
}

impl ThetaFamilyPoint {
    pub fn new(theta: f64) -> Result<Self, ChainError> {
        if theta.is_nan() || theta <= 0.0 || theta >= 10.0 {
            return Err(ChainError::ThetaOutOfRange { theta });
        }
        let arm = Arm::two_state(theta_p01(theta), theta_p10(theta), 1.0, 2.0)?;
        Ok(ThetaFamilyPoint { theta, arm })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn arm(&self) -> &Arm {
        &self.arm
    }

    pub fn p01(&self) -> f64 {
        theta_p01(self.theta)
    }

    pub fn p10(&self) -> f64 {
        theta_p10(self.theta)
    }
}

pub fn theta_p01(theta: f64) -> f64 {
    (theta / 10.0).powi(3)
}

pub fn theta_p10(theta: f64) -> f64 {
    1.0 - (theta / 10.0).powi(2)
}

/// Builds the two-state family arm for a given theta.
pub fn theta_arm(theta: f64) -> Result<Arm, ChainError> {
    ThetaFamilyPoint::new(theta).map(|p| p.arm)
}

/// Builds and validates an arm; the free-function spelling of [`Arm::new`].
pub fn make_arm(
    transition: Vec<Vec<f64>>,
    rewards: Vec<f64>,
    initial_dist: Option<Vec<f64>>,
) -> Result<Arm, ChainError> {
    Arm::new(transition, rewards, initial_dist)
}

/// Stationary distribution of a valid irreducible stochastic matrix.
///
/// Solves `(P^T - I) pi = 0` with the last equation replaced by the
/// normalization `sum pi = 1`, then applies one refinement pass. Deterministic
/// and exact at these sizes, unlike power iteration.
pub fn stationary_distribution(transition: &[Vec<f64>]) -> Result<Vec<f64>, ChainError> {
    validate_transition(transition)?;
    stationary_of_validated(transition)
}

/// Eigenvalue gap `eps = 1 - lambda_2` of a valid reversible chain.
///
/// Rejects non-reversible input: the symmetrized operator only shares the
/// spectrum of P under detailed balance, so the result would misrepresent
/// lambda_2 otherwise.
pub fn eigenvalue_gap(transition: &[Vec<f64>]) -> Result<f64, ChainError> {
    validate_transition(transition)?;
    let stationary = stationary_of_validated(transition)?;
    gap_of_validated(transition, &stationary)
}

fn validate_transition(transition: &[Vec<f64>]) -> Result<(), ChainError> {
    let n = transition.len();
    if n < 2 {
        return Err(ChainError::TooFewStates { n });
    }
    for (row, r) in transition.iter().enumerate() {
        if r.len() != n {
            return Err(ChainError::NonSquareMatrix {
                row,
                len: r.len(),
                n,
            });
        }
        let mut sum = 0.0;
        for (col, &p) in r.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(ChainError::EntryOutOfRange { row, col, value: p });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(ChainError::NonStochasticRow { row, sum });
        }
    }
    check_irreducible(transition)?;
    check_aperiodic(transition)?;
    Ok(())
}

/// Strong connectivity of the positive-entry digraph: every state reachable
/// from state 0 forwards and backwards.
fn check_irreducible(transition: &[Vec<f64>]) -> Result<(), ChainError> {
    let n = transition.len();
    let forward = reachable_from_zero(transition, false);
    let backward = reachable_from_zero(transition, true);
    for state in 0..n {
        if !forward[state] || !backward[state] {
            return Err(ChainError::Reducible { state });
        }
    }
    Ok(())
}

fn reachable_from_zero(transition: &[Vec<f64>], reversed: bool) -> Vec<bool> {
    let n = transition.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for v in 0..n {
            let p = if reversed {
                transition[v][u]
            } else {
                transition[u][v]
            };
            if p > 0.0 && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Period of an irreducible chain: gcd over all positive edges (u, v) of
/// `d(u) + 1 - d(v)`, with d the BFS levels from state 0. A self-loop makes
/// the gcd 1 immediately.
fn check_aperiodic(transition: &[Vec<f64>]) -> Result<(), ChainError> {
    let n = transition.len();
    let mut dist = vec![i64::MIN; n];
    dist[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if transition[u][v] > 0.0 && dist[v] == i64::MIN {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }

    let mut g: u64 = 0;
    for u in 0..n {
        for v in 0..n {
            if transition[u][v] > 0.0 {
                g = gcd(g, (dist[u] + 1 - dist[v]).unsigned_abs());
            }
        }
    }
    if g != 1 {
        return Err(ChainError::Periodic { period: g });
    }
    Ok(())
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn stationary_of_validated(transition: &[Vec<f64>]) -> Result<Vec<f64>, ChainError> {
    let n = transition.len();
    // (P^T - I) pi = 0 with the last row replaced by the normalization.
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = transition[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    a[n - 1].fill(1.0);
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;

    let mut pi = linalg::solve_refined(&a, &b).ok_or(ChainError::StationarySolveFailed)?;
    let sum: f64 = pi.iter().sum();
    for v in &mut pi {
        *v /= sum;
    }

    for (state, &v) in pi.iter().enumerate() {
        if v.is_nan() || v <= 0.0 {
            return Err(ChainError::StationaryNotPositive { state, value: v });
        }
    }
    let residual = stationary_residual(transition, &pi);
    if residual > STATIONARY_RESIDUAL_TOL {
        return Err(ChainError::StationaryResidualTooLarge {
            residual,
            tol: STATIONARY_RESIDUAL_TOL,
        });
    }
    Ok(pi)
}

/// `max_y |(pi P)_y - pi_y|`.
pub fn stationary_residual(transition: &[Vec<f64>], pi: &[f64]) -> f64 {
    let n = transition.len();
    (0..n)
        .map(|y| {
            let back: f64 = (0..n).map(|x| pi[x] * transition[x][y]).sum();
            (back - pi[y]).abs()
        })
        .fold(0.0, f64::max)
}

/// `max_{x,y} |pi_x p_xy - pi_y p_yx|`.
pub fn detailed_balance_residual(transition: &[Vec<f64>], pi: &[f64]) -> f64 {
    let n = transition.len();
    let mut worst = 0.0f64;
    for x in 0..n {
        for y in x + 1..n {
            worst = worst.max((pi[x] * transition[x][y] - pi[y] * transition[y][x]).abs());
        }
    }
    worst
}

#[allow(clippy::needless_range_loop)]
fn gap_of_validated(transition: &[Vec<f64>], pi: &[f64]) -> Result<f64, ChainError> {
    let residual = detailed_balance_residual(transition, pi);
    if residual > DETAILED_BALANCE_TOL {
        return Err(ChainError::NonReversible {
            residual,
            tol: DETAILED_BALANCE_TOL,
        });
    }

    // D^{1/2} P D^{-1/2}; symmetric under detailed balance. Averaging the
    // mirror entries removes the residual asymmetry within tolerance.
    let n = transition.len();
    let mut sym = vec![vec![0.0; n]; n];
    for x in 0..n {
        for y in 0..n {
            sym[x][y] = (pi[x] / pi[y]).sqrt() * transition[x][y];
        }
    }
    for x in 0..n {
        for y in x + 1..n {
            let avg = 0.5 * (sym[x][y] + sym[y][x]);
            sym[x][y] = avg;
            sym[y][x] = avg;
        }
    }

    let eigs = linalg::symmetric_eigenvalues(&sym).ok_or(ChainError::EigenSolveFailed)?;
    let gap = 1.0 - eigs[1];
    if gap.is_nan() || gap <= 0.0 || gap > 2.0 + 1e-12 {
        return Err(ChainError::GapOutOfRange { gap });
    }
    Ok(gap.min(2.0))
}

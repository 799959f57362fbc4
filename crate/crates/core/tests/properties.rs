//! Property tests for the chain constructors, the policy, and the episode
//! engine.

use banditlab_core::{
    chain, default_checkpoints, make_arm, regret_bound, run_episode, run_episode_with, Arm,
    BanditInstance, StreamSeed, UcbState,
};
use proptest::prelude::*;

fn two_state_instance() -> BanditInstance {
    BanditInstance::new(vec![
        Arm::two_state(0.3, 0.5, 1.0, 1.2).unwrap(),
        Arm::two_state(0.6, 0.3, 1.0, 1.5).unwrap(),
        Arm::two_state(0.7, 0.2, 1.0, 1.8).unwrap(),
    ])
    .unwrap()
}

/// Random reversible chain: a birth-death chain with positive self-loops.
fn birth_death(n: usize, ups: &[f64], downs: &[f64]) -> Vec<Vec<f64>> {
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        let up = if i + 1 < n { ups[i] } else { 0.0 };
        let down = if i > 0 { downs[i - 1] } else { 0.0 };
        if i + 1 < n {
            p[i][i + 1] = up;
        }
        if i > 0 {
            p[i][i - 1] = down;
        }
        p[i][i] = 1.0 - up - down;
    }
    p
}

proptest! {
    #[test]
    fn two_state_solver_agrees_with_closed_forms(
        p01 in 1e-6f64..1.0,
        p10 in 1e-6f64..1.0,
    ) {
        let arm = Arm::two_state(p01, p10, 1.0, 2.0).unwrap();
        let s = p01 + p10;
        prop_assert!((arm.stationary()[0] - p10 / s).abs() <= 1e-12);
        prop_assert!((arm.stationary()[1] - p01 / s).abs() <= 1e-12);
        prop_assert!((arm.eigenvalue_gap() - s).abs() <= 1e-12);
    }

    #[test]
    fn reversible_chains_validate_cleanly(
        ups in proptest::collection::vec(0.05f64..0.45, 4),
        downs in proptest::collection::vec(0.05f64..0.45, 4),
        n in 2usize..=5,
    ) {
        let transition = birth_death(n, &ups, &downs);
        let rewards: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let arm = make_arm(transition, rewards, None).unwrap();
        prop_assert!(
            chain::stationary_residual(arm.transition(), arm.stationary()) <= 1e-10
        );
        prop_assert!(
            chain::detailed_balance_residual(arm.transition(), arm.stationary()) <= 1e-9
        );
        let gap = arm.eigenvalue_gap();
        prop_assert!(gap > 0.0 && gap <= 2.0);
    }

    #[test]
    fn argmax_is_shift_invariant(
        values in proptest::collection::vec(-1e6f64..1e6, 1..12),
        shift in 1e-3f64..1e6,
    ) {
        use banditlab_core::policy::argmax_tie_lowest;
        let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
        prop_assert_eq!(argmax_tie_lowest(&values), argmax_tie_lowest(&shifted));
    }

    #[test]
    fn episodes_conserve_plays_and_bound_sample_means(
        seed in 0u64..5_000,
        exploration in 0.0f64..64.0,
    ) {
        let inst = two_state_instance();
        let horizon = 600;
        let cps = default_checkpoints(horizon, inst.len());
        let rec = run_episode(&inst, exploration, horizon, StreamSeed::new(seed, 0), &cps)
            .unwrap();

        for (cp, plays) in rec.checkpoints.iter().zip(rec.plays_at.iter()) {
            prop_assert_eq!(plays.iter().sum::<u64>(), *cp);
        }
        // After the initialization phase every arm has been played.
        let first = &rec.plays_at[0];
        prop_assert!(first.iter().all(|&t| t >= 1));

        // Per-arm reward totals stay within the arm's reward range.
        let final_plays = rec.plays_at.last().unwrap();
        for (i, arm) in inst.arms().iter().enumerate() {
            let mean = rec.per_arm_reward[i] / final_plays[i] as f64;
            prop_assert!(mean >= arm.reward_min() - 1e-12);
            prop_assert!(mean <= arm.reward_max() + 1e-12);
        }
    }

    #[test]
    fn bound_monotone_in_horizon_and_exploration(
        l_low in 10.0f64..500.0,
        l_extra in 1.0f64..2000.0,
        n_low in 2u64..10_000,
        n_extra in 1u64..100_000,
    ) {
        let inst = two_state_instance();
        let report = regret_bound(&inst, l_low);
        prop_assert!(report.bound_at(n_low + n_extra) >= report.bound_at(n_low));
        let report_hi = regret_bound(&inst, l_low + l_extra);
        prop_assert!(report_hi.bound_at(n_low) > report.bound_at(n_low));
    }
}

#[test]
fn greedy_degenerates_to_the_dominant_arm() {
    // L = 0: after one arm dominates on sample mean, it is played forever.
    let mut state = UcbState::new(3, 0.0);
    state.record_reward(0, 1.0);
    state.record_reward(1, 5.0);
    state.record_reward(2, 2.0);
    for _ in 0..500 {
        let arm = state.select_arm();
        assert_eq!(arm, 1);
        state.record_reward(arm, 5.0);
    }
}

#[test]
fn policy_is_deterministic_in_the_reward_sequence() {
    let rewards = [1.0, 1.4, 0.9, 2.0, 1.1, 1.7, 0.4, 1.2];
    let drive = || -> Vec<usize> {
        let mut state = UcbState::new(2, 2.0);
        let mut chosen = Vec::new();
        for (i, &r) in rewards.iter().enumerate() {
            let arm = state.select_arm();
            chosen.push(arm);
            state.record_reward(arm, r + (i % 3) as f64 * 0.1);
        }
        chosen
    };
    assert_eq!(drive(), drive());
}

#[test]
fn recursive_mean_matches_compensated_batch_mean() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(424242);
    let rewards: Vec<f64> = (0..10_000).map(|_| 1.0 + rng.random::<f64>()).collect();

    let mut state = UcbState::new(1, 0.0);
    for &r in &rewards {
        state.record_reward(0, r);
    }

    // Neumaier-compensated batch sum as the independent route.
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &r in &rewards {
        let t = sum + r;
        if sum.abs() >= r.abs() {
            comp += (sum - t) + r;
        } else {
            comp += (r - t) + sum;
        }
        sum = t;
    }
    let batch = (sum + comp) / rewards.len() as f64;
    assert!(
        (state.sample_means()[0] - batch).abs() <= 1e-12,
        "recursive {} vs batch {}",
        state.sample_means()[0],
        batch
    );
}

#[test]
fn frozen_arms_hold_their_state_between_plays() {
    let inst = two_state_instance();
    let mut snapshots: Vec<(usize, Vec<usize>)> = Vec::new();
    run_episode_with(
        &inst,
        2.0,
        800,
        StreamSeed::new(1234, 0),
        &[800],
        |_, arm, states| snapshots.push((arm, states.to_vec())),
    )
    .unwrap();

    for w in snapshots.windows(2) {
        let (arm, ref after) = w[1];
        let (_, ref before) = w[0];
        for i in 0..before.len() {
            if i != arm {
                assert_eq!(after[i], before[i], "arm {i} moved without being played");
            }
        }
    }
}

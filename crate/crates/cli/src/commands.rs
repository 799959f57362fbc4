//! The five commands: inspect, simulate, bound, lower-bound, deviation-check.

use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;

use banditlab_core::{
    default_checkpoints, gillman_empirical_check, kl_rate_report, min_exploration_constant,
    monte_carlo_regret, regret_bound, BanditInstance, StartSpec, StoppingRule,
};

use crate::config::{config_hash, ExperimentConfig};
use crate::CliError;

/// Writes to the configured path, or stdout when none is set.
fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| {
            CliError::Config(format!("cannot write output {}: {e}", path.display()))
        }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Hash of the experiment inputs. The output path is excluded: it does not
/// influence the numbers, and rewrites of the same experiment to different
/// destinations must stay byte-comparable.
fn experiment_hash(config: &ExperimentConfig, command: &str) -> String {
    let mut canonical = config.clone();
    canonical.output = None;
    config_hash(&(command, canonical))
}

fn provenance(config: &ExperimentConfig, command: &str) -> serde_json::Value {
    json!({
        "config_hash": experiment_hash(config, command),
        "base_seed": config.base_seed,
    })
}

fn json_report<T: Serialize>(body: &T) -> String {
    let mut text = serde_json::to_string_pretty(body).expect("reports serialize");
    text.push('\n');
    text
}

/// Per-arm derived quantities plus the instance aggregates, laid out like a
/// parameter table.
pub fn cmd_inspect(config: &ExperimentConfig) -> Result<(), CliError> {
    let instance = config.build_instance()?;
    let mut text = format!(
        "# config_hash={} base_seed={}\n",
        experiment_hash(config, "inspect"),
        config.base_seed
    );
    let label = config.preset.as_deref().unwrap_or("custom");
    text.push_str(&format!("instance: {label} ({} arms)\n", instance.len()));

    let all_two_state = instance.arms().iter().all(|a| a.n_states() == 2);
    if all_two_state {
        text.push_str("arm  p01     p10     rewards        pi_1    eps     mu      gap\n");
        for (i, arm) in instance.arms().iter().enumerate() {
            text.push_str(&format!(
                "{:>3}  {:<6.4}  {:<6.4}  {:<13}  {:.4}  {:.4}  {:.4}  {:.4}\n",
                i + 1,
                arm.transition_prob(0, 1),
                arm.transition_prob(1, 0),
                arm.rewards()
                    .iter()
                    .map(|r| format!("{r:.2}"))
                    .collect::<Vec<_>>()
                    .join(", "),
                arm.stationary()[1],
                arm.eigenvalue_gap(),
                arm.mean_reward(),
                instance.gaps()[i],
            ));
        }
    } else {
        for (i, arm) in instance.arms().iter().enumerate() {
            text.push_str(&format!(
                "arm {} ({} states): eps = {:.4}, mu = {:.4}, gap = {:.4}\n  pi = [{}]\n  rewards = [{}]\n",
                i + 1,
                arm.n_states(),
                arm.eigenvalue_gap(),
                arm.mean_reward(),
                instance.gaps()[i],
                arm.stationary()
                    .iter()
                    .map(|p| format!("{p:.4}"))
                    .collect::<Vec<_>>()
                    .join(", "),
                arm.rewards()
                    .iter()
                    .map(|r| format!("{r:.2}"))
                    .collect::<Vec<_>>()
                    .join(", "),
            ));
        }
    }

    text.push_str(&format!(
        "mu* = {:.4} (arm {})\n",
        instance.best_mean(),
        instance.best_arm() + 1
    ));
    text.push_str(&format!(
        "eps_min = {:.4}  eps_max = {:.4}  S_max = {}  r_max = {:.4}  r_min = {:.4}  pi_min = {:.4}\n",
        instance.eps_min(),
        instance.eps_max(),
        instance.s_max(),
        instance.r_max(),
        instance.r_min(),
        instance.pi_min(),
    ));
    text.push_str(&format!(
        "L_min = {:.4} (90 S_max^2 r_max^2 / eps_min)\n",
        min_exploration_constant(&instance)
    ));
    emit(&config.output, &text)
}

fn checkpoints_for(config: &ExperimentConfig, instance: &BanditInstance) -> Vec<u64> {
    match &config.checkpoints {
        Some(cps) => cps.clone(),
        None => default_checkpoints(config.horizon, instance.len()),
    }
}

/// Monte Carlo regret trajectories as CSV, deterministic in the base seed.
pub fn cmd_simulate(config: &ExperimentConfig) -> Result<(), CliError> {
    let instance = config.build_instance()?;
    let checkpoints = checkpoints_for(config, &instance);
    let trajectory = monte_carlo_regret(
        &instance,
        config.policy.l,
        config.horizon,
        config.runs,
        config.base_seed,
        &checkpoints,
    )?;

    let mut csv = format!(
        "# config_hash={} base_seed={}\n",
        experiment_hash(config, "simulate"),
        config.base_seed
    );
    csv.push_str("horizon,mean_regret,std_error");
    for i in 1..=instance.len() {
        csv.push_str(&format!(",plays_{i}"));
    }
    csv.push('\n');
    for (k, &horizon) in trajectory.horizons.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{}",
            horizon, trajectory.mean_regret[k], trajectory.std_error[k]
        ));
        for plays in &trajectory.mean_plays[k] {
            csv.push_str(&format!(",{plays}"));
        }
        csv.push('\n');
    }
    emit(&config.output, &csv)
}

/// Regret-bound constants and evaluations at the requested horizons.
pub fn cmd_bound(config: &ExperimentConfig, horizons: &[u64]) -> Result<(), CliError> {
    let instance = config.build_instance()?;
    let report = regret_bound(&instance, config.policy.l);
    let evaluations: Vec<serde_json::Value> = horizons
        .iter()
        .map(|&n| json!({ "horizon": n, "bound": report.bound_at(n) }))
        .collect();

    let body = json!({
        "provenance": provenance(config, "bound"),
        "constant_note": "the additive constant uses the upper estimate sum_i sum_y r_y / pi_min",
        "report": report,
        "evaluations": evaluations,
    });
    emit(&config.output, &json_report(&body))
}

/// Asymptotic lower-bound coefficient for a theta-family instance.
pub fn cmd_lower_bound(config: &ExperimentConfig) -> Result<(), CliError> {
    let thetas = config.effective_thetas().ok_or_else(|| {
        CliError::Config(
            "lower-bound needs a theta-family instance: set `thetas` or preset S2".to_string(),
        )
    })?;
    if thetas.len() < 2 {
        return Err(CliError::Config(
            "lower-bound needs at least 2 arms".to_string(),
        ));
    }
    let report = kl_rate_report(&thetas)?;
    let body = json!({
        "provenance": provenance(config, "lower-bound"),
        "report": report,
    });
    emit(&config.output, &json_report(&body))
}

pub struct DeviationParams {
    /// Arm to validate; `None` runs every arm.
    pub arm: Option<usize>,
    /// Steps per occupation-time trajectory.
    pub steps: u64,
    pub gammas: Vec<f64>,
    /// States forming the subset A.
    pub subset: Vec<usize>,
    pub rule: StoppingRule,
}

/// Empirical validation of the occupation-time tail bound and the
/// stopping-time occupancy deviation, per arm.
pub fn cmd_deviation_check(
    config: &ExperimentConfig,
    params: &DeviationParams,
) -> Result<(), CliError> {
    let instance = config.build_instance()?;
    let arm_indices: Vec<usize> = match params.arm {
        Some(i) => {
            if i >= instance.len() {
                return Err(CliError::Config(format!(
                    "arm {} is out of range for a {}-arm instance",
                    i,
                    instance.len()
                )));
            }
            vec![i]
        }
        None => (0..instance.len()).collect(),
    };

    let mut sections = Vec::new();
    for &i in &arm_indices {
        let arm = instance.arm(i);
        // Distinct seeds per arm and validator keep the streams disjoint.
        let gillman_seed = config.base_seed.wrapping_add(i as u64 * 1_000_003);
        let occupancy_seed = gillman_seed.wrapping_add(500_009);

        let gillman = gillman_empirical_check(
            arm,
            &params.subset,
            params.steps,
            &params.gammas,
            config.runs,
            gillman_seed,
            StartSpec::InitialDist,
        )
        .map_err(CliError::from)?;
        let occupancy = banditlab_core::occupancy_deviation_check(
            arm,
            params.rule,
            config.runs,
            occupancy_seed,
            StartSpec::InitialDist,
        )
        .map_err(CliError::from)?;

        let gillman_all_hold = gillman.all_hold();
        let occupancy_any_exceeds = occupancy.any_exceeds();
        sections.push(json!({
            "arm": i + 1,
            "gillman": gillman,
            "gillman_all_hold": gillman_all_hold,
            "occupancy": occupancy,
            "occupancy_any_exceeds": occupancy_any_exceeds,
        }));
    }

    let body = json!({
        "provenance": provenance(config, "deviation-check"),
        "runs": config.runs,
        "arms": sections,
    });
    emit(&config.output, &json_report(&body))
}

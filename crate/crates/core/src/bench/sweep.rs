use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::baseline::{self, Method};
use crate::error::Result;
use crate::field::Scalar;
use crate::model::{GroundTruth, ProblemInstance};
use crate::scenario::{self, CorruptionConfig, DoaConfig};

use super::config::{Scenario, SweepConfig};
use super::metrics::{is_success, normalized_error};

/// Summary of one `(method, axis value)` cell.
///
/// Equality ignores `wall_time`, the only field that depends on the machine.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub method: Method,
    pub axis: &'static str,
    pub axis_value: usize,
    /// `successes / trials`.
    pub success_rate: f64,
    /// Mean normalized squared error over trials.
    pub nmse: f64,
    pub nmse_median: f64,
    pub mean_iters: f64,
    pub trials: usize,
    pub successes: usize,
    /// Trials whose solver returned an error.
    pub failures: usize,
    /// Summed solver time in seconds.
    pub wall_time: f64,
}

impl PartialEq for ResultRow {
    fn eq(&self, other: &Self) -> bool {
        self.method == other.method
            && self.axis == other.axis
            && self.axis_value == other.axis_value
            && self.success_rate.to_bits() == other.success_rate.to_bits()
            && self.nmse.to_bits() == other.nmse.to_bits()
            && self.nmse_median.to_bits() == other.nmse_median.to_bits()
            && self.mean_iters.to_bits() == other.mean_iters.to_bits()
            && self.trials == other.trials
            && self.successes == other.successes
            && self.failures == other.failures
    }
}

/// Result of one method on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub method: Method,
    /// `None` when the solver failed.
    pub error: Option<f64>,
    pub iters: usize,
    pub seconds: f64,
}

fn solve_all<T: Scalar>(
    methods: &[Method],
    problem: &ProblemInstance<T>,
    truth: &GroundTruth<T>,
    cfg: &SweepConfig,
) -> Vec<TrialOutcome> {
    methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let res = baseline::solve(method, problem, Some(truth), &cfg.hyper, &cfg.solver);
            let seconds = start.elapsed().as_secs_f64();
            match res.and_then(|r| Ok((normalized_error(&r.x_hat, &truth.x_true)?, r.iters))) {
                Ok((err, iters)) if err.is_finite() => TrialOutcome {
                    method,
                    error: Some(err),
                    iters,
                    seconds,
                },
                _ => TrialOutcome {
                    method,
                    error: None,
                    iters: 0,
                    seconds,
                },
            }
        })
        .collect()
}

/// Generates trial `trial` at `axis_value` and runs every configured method.
pub fn run_trial(cfg: &SweepConfig, point: usize, trial: usize) -> Result<Vec<TrialOutcome>> {
    let axis_value = cfg.values[point];
    let (m, t) = cfg.point(axis_value);
    let seed = scenario::trial_seed(cfg.master_seed, point as u64, trial as u64);
    let corruption = CorruptionConfig {
        t,
        amplitude_range: cfg.amplitude,
        mode: cfg.corruption_mode,
    };
    Ok(match cfg.scenario {
        Scenario::Doa => {
            let doa = DoaConfig {
                m,
                n: cfg.n,
                spacing_ratio: cfg.spacing_ratio,
            };
            let (p, truth) = scenario::make_instance(&doa, cfg.k, &corruption, cfg.noise_var, seed)?;
            solve_all(&cfg.methods, &p, &truth, cfg)
        }
        Scenario::Gaussian => {
            let (p, truth) = scenario::make_gaussian_instance(
                m,
                cfg.n,
                cfg.k,
                &corruption,
                cfg.noise_var,
                seed,
            )?;
            solve_all(&cfg.methods, &p, &truth, cfg)
        }
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs every `(axis value, trial)` pair, in parallel when `threads > 1`,
/// and aggregates one row per `(method, axis value)`, ordered by method then
/// axis value. Output does not depend on `threads`.
pub fn run_sweep(cfg: &SweepConfig, threads: usize) -> Result<Vec<ResultRow>> {
    cfg.validate()
        .map_err(|e| crate::BcsError::InvalidInstance(e.to_string()))?;
    let jobs: Vec<(usize, usize)> = (0..cfg.values.len())
        .flat_map(|p| (0..cfg.trials).map(move |t| (p, t)))
        .collect();

    let run = || -> Result<Vec<Vec<TrialOutcome>>> {
        jobs.par_iter()
            .map(|&(p, t)| run_trial(cfg, p, t))
            .collect()
    };
    let outcomes = if threads <= 1 {
        jobs.iter()
            .map(|&(p, t)| run_trial(cfg, p, t))
            .collect::<Result<Vec<_>>>()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| crate::BcsError::Numerical(format!("thread pool: {e}")))?
            .install(run)?
    };

    let mut methods = cfg.methods.clone();
    methods.sort();
    let mut rows = Vec::new();
    for &method in &methods {
        for (p, &axis_value) in cfg.values.iter().enumerate() {
            let cell: Vec<&TrialOutcome> = jobs
                .iter()
                .zip(&outcomes)
                .filter(|((jp, _), _)| *jp == p)
                .map(|(_, o)| o.iter().find(|o| o.method == method).expect("method ran"))
                .collect();
            let errors: Vec<f64> = cell.iter().map(|o| o.error.unwrap_or(1.0)).collect();
            let successes = cell
                .iter()
                .filter(|o| o.error.is_some_and(|e| is_success(e, cfg.success_threshold)))
                .count();
            let failures = cell.iter().filter(|o| o.error.is_none()).count();
            let trials = cell.len();
            rows.push(ResultRow {
                method,
                axis: cfg.axis.name(),
                axis_value,
                success_rate: successes as f64 / trials as f64,
                nmse: errors.iter().sum::<f64>() / trials as f64,
                nmse_median: median(errors),
                mean_iters: cell.iter().map(|o| o.iters as f64).sum::<f64>() / trials as f64,
                trials,
                successes,
                failures,
                wall_time: cell.iter().map(|o| o.seconds).sum(),
            });
        }
    }
    Ok(rows)
}

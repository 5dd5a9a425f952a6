use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charges::{energy, gradient, ChargeConfig};
use crate::classify::{classify, Classification, StationarityReport, GRADIENT_TOL};
use crate::{Error, Result};

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRule {
    pub initial_step: f64,
    /// Multiplier applied to the step after each accepted move.
    pub growth: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        Self { initial_step: 1e-2, growth: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub energy: f64,
    pub gradient_norm: f64,
    pub step_size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Stationary,
    Collapse,
    Escape,
    StepBudget,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descent {
    pub trajectory: Vec<TrajectoryPoint>,
    pub termination: Termination,
    pub terminal: ChargeConfig,
    pub report: StationarityReport,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gradient descent on positions with Armijo backtracking.
pub fn descend(start: &ChargeConfig, max_steps: usize, rule: StepRule) -> Result<Descent> {
    if !(rule.initial_step > 0.0) || !(rule.growth >= 1.0) {
        return Err(Error::InvalidParameter("step rule needs a positive step and growth ≥ 1".into()));
    }
    let mut c = start.clone();
    let mut e = energy(&c);
    let mut alpha = rule.initial_step;
    let mut trajectory = Vec::new();
    let mut termination = Termination::StepBudget;
    for step in 0..=max_steps {
        let g = gradient(&c);
        let gnorm = norm(&g);
        trajectory.push(TrajectoryPoint { step, energy: e, gradient_norm: gnorm, step_size: alpha });
        let report = classify(&c);
        match report.classification {
            Classification::CollapseDiverged => {
                termination = Termination::Collapse;
                break;
            }
            Classification::EscapeDiverged => {
                termination = Termination::Escape;
                break;
            }
            _ if report.scaled_gradient < GRADIENT_TOL => {
                termination = Termination::Stationary;
                break;
            }
            _ => {}
        }
        if step == max_steps {
            break;
        }
        let g2 = gnorm * gnorm;
        let mut accepted = None;
        while alpha >= MIN_STEP {
            let trial: Vec<f64> = c.positions().iter().zip(&g).map(|(x, d)| x - alpha * d).collect();
            if let Ok(next) = c.moved(trial) {
                let en = energy(&next);
                if en.is_finite() && en <= e - ARMIJO * alpha * g2 {
                    accepted = Some((next, en));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((next, en)) => {
                c = next;
                e = en;
                alpha *= rule.growth;
            }
            None => {
                termination = Termination::LineSearchFailed;
                break;
            }
        }
    }
    let report = classify(&c);
    Ok(Descent { trajectory, termination, terminal: c, report })
}

/// Positions uniform in `[0, 1]^n`, masses uniform on the unit sphere.
pub fn random_config(d: usize, n: usize, s: f64, rng: &mut ChaCha8Rng) -> Result<ChargeConfig> {
    loop {
        let positions: Vec<f64> = (0..d * n).map(|_| rng.gen::<f64>()).collect();
        let masses: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        match ChargeConfig::normalized(n, s, positions, masses) {
            Err(Error::CoincidentPoints(..)) => continue,
            other => return other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub d: usize,
    pub n: usize,
    pub s: f64,
    pub trials: usize,
    pub seed: u64,
    pub max_steps: usize,
}

/// A stationary-stable terminal state, kept at full precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryFind {
    pub trial: usize,
    pub config: ChargeConfig,
    pub report: StationarityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub params: SweepParams,
    pub p: f64,
    pub counts: BTreeMap<String, usize>,
    pub weakly_stable: usize,
    pub line_search_failures: usize,
    pub stable_finds: Vec<StationaryFind>,
    /// One row per trial in trial order; not part of the JSON summary.
    #[serde(skip)]
    pub trials: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub termination: Termination,
    pub steps: usize,
    pub report: StationarityReport,
}

/// Per-trial RNG: ChaCha8 keyed by the master seed, stream = trial index.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

pub fn conjecture_sweep(params: SweepParams) -> Result<SweepSummary> {
    if params.d < 2 || params.trials < 1 {
        return Err(Error::InvalidParameter("a sweep needs d ≥ 2 and at least one trial".into()));
    }
    let outcomes: Vec<(usize, Descent)> = (0..params.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(params.seed, trial);
            let start = random_config(params.d, params.n, params.s, &mut rng)?;
            Ok((trial, descend(&start, params.max_steps, StepRule::default())?))
        })
        .collect::<Result<_>>()?;
    let mut counts: BTreeMap<String, usize> =
        Classification::ALL.iter().map(|c| (c.as_str().to_string(), 0)).collect();
    let mut weakly_stable = 0;
    let mut line_search_failures = 0;
    let mut stable_finds = Vec::new();
    let mut trials = Vec::with_capacity(outcomes.len());
    for (trial, run) in outcomes {
        trials.push(TrialRecord {
            trial,
            termination: run.termination,
            steps: run.trajectory.last().map_or(0, |t| t.step),
            report: run.report.clone(),
        });
        *counts.entry(run.report.classification.as_str().to_string()).or_default() += 1;
        weakly_stable += run.report.weakly_stable as usize;
        line_search_failures += (run.termination == Termination::LineSearchFailed) as usize;
        if run.report.classification == Classification::StationaryStable {
            stable_finds.push(StationaryFind { trial, config: run.terminal, report: run.report });
        }
    }
    let p = params.n as f64 + 2.0 * params.s;
    Ok(SweepSummary { params, p, counts, weakly_stable, line_search_failures, stable_finds, trials })
}

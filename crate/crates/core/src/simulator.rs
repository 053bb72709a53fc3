//! Monte Carlo trial engine for the unordered, ordered, fixed-k, and
//! full-transmission schemes, plus a discrete-event simulation of the
//! timer-based ordered transmission protocol.
//!
//! Trials are independent: each derives its own counter-based random stream
//! from `(seed, trial index)`, so aggregates are bitwise identical no matter
//! how many worker threads execute them or in which order.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::CoreError;
use crate::estimator::{should_stop, PosteriorState, StoppingConfig};
use crate::model::{
    sample_population, trial_rng, GaussianPrior, PrecisionBand, SensorPopulation,
};
use crate::numeric::CompensatedSum;

/// Transmission scheme that produced a trial outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Unordered,
    Ordered,
    FullData,
    FixedK,
}

/// Which sensors a fixed-k trial absorbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedKScheme {
    /// The k highest-precision sensors.
    Ordered,
    /// A uniformly random k-subset, absorbed in random order.
    Unordered,
}

/// Result of a single trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub scheme: Scheme,
    /// Transmissions used; `N` with `stopped_early = false` when the
    /// stopping rule was never satisfied.
    pub k_star: usize,
    pub estimate: f64,
    pub squared_error: f64,
    pub stopped_early: bool,
}

/// Logical event in the timer protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimerEvent {
    pub time: f64,
    pub kind: TimerEventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimerEventKind {
    Transmission(usize),
    StopBroadcast,
}

fn finish(
    scheme: Scheme,
    pop: &SensorPopulation,
    state: &PosteriorState,
    stopped_early: bool,
) -> TrialOutcome {
    let estimate = state.mean();
    TrialOutcome {
        scheme,
        k_star: state.count(),
        estimate,
        squared_error: (estimate - pop.theta_true()).powi(2),
        stopped_early,
    }
}

/// Sensor indices in the order the ordered scheme absorbs them: descending
/// precision, ties broken by ascending index.
pub fn ordered_absorption(pop: &SensorPopulation) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&a, &b| {
        let sa = &pop.sensors()[a];
        let sb = &pop.sensors()[b];
        sb.precision.total_cmp(&sa.precision).then(a.cmp(&b))
    });
    order
}

/// Absorbs measurements following `order`, stopping at the first count where
/// the stopping rule holds (including at zero measurements when the
/// threshold is nonpositive).
pub fn run_trial_in_order(
    pop: &SensorPopulation,
    prior: &GaussianPrior,
    config: &StoppingConfig,
    scheme: Scheme,
    order: &[usize],
) -> TrialOutcome {
    let mut state = PosteriorState::from_prior(prior);
    if should_stop(&state, config, prior) {
        return finish(scheme, pop, &state, true);
    }
    for &idx in order {
        let sensor = &pop.sensors()[idx];
        state = state
            .update(sensor.measurement, sensor.precision)
            .expect("population precisions are positive");
        if should_stop(&state, config, prior) {
            return finish(scheme, pop, &state, true);
        }
    }
    finish(scheme, pop, &state, false)
}

/// Unordered scheme: measurements arrive in a uniformly random permutation
/// drawn from the trial's own stream, independent of the measurement values.
pub fn run_unordered_trial<R: Rng>(
    pop: &SensorPopulation,
    prior: &GaussianPrior,
    config: &StoppingConfig,
    rng: &mut R,
) -> TrialOutcome {
    run_unordered_trial_traced(pop, prior, config, rng).0
}

/// Same as [`run_unordered_trial`] but also returns the absorption order, so
/// tests can verify prefix sums against the stopping rule.
pub fn run_unordered_trial_traced<R: Rng>(
    pop: &SensorPopulation,
    prior: &GaussianPrior,
    config: &StoppingConfig,
    rng: &mut R,
) -> (TrialOutcome, Vec<usize>) {
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.shuffle(rng);
    let outcome = run_trial_in_order(pop, prior, config, Scheme::Unordered, &order);
    (outcome, order)
}

/// Ordered scheme: measurements arrive in descending precision order.
pub fn run_ordered_trial(
    pop: &SensorPopulation,
    prior: &GaussianPrior,
    config: &StoppingConfig,
) -> TrialOutcome {
    let order = ordered_absorption(pop);
    run_trial_in_order(pop, prior, config, Scheme::Ordered, &order)
}

/// Full-data scheme: every sensor transmits.
pub fn run_full_trial(pop: &SensorPopulation, prior: &GaussianPrior) -> TrialOutcome {
    let mut state = PosteriorState::from_prior(prior);
    for sensor in pop.sensors() {
        state = state
            .update(sensor.measurement, sensor.precision)
            .expect("population precisions are positive");
    }
    finish(Scheme::FullData, pop, &state, false)
}

/// Absorbs exactly `k` measurements regardless of the stopping rule: the
/// top-k precisions for [`FixedKScheme::Ordered`], a random k-subset in
/// random order for [`FixedKScheme::Unordered`].
pub fn run_fixed_k_trial<R: Rng>(
    pop: &SensorPopulation,
    prior: &GaussianPrior,
    k: usize,
    scheme: FixedKScheme,
    rng: &mut R,
) -> Result<TrialOutcome, CoreError> {
    if k > pop.len() {
        return Err(CoreError::invalid(
            "k",
            format!("must not exceed the population size {}", pop.len()),
        ));
    }
    let order: Vec<usize> = match scheme {
        FixedKScheme::Ordered => ordered_absorption(pop)[..k].to_vec(),
        FixedKScheme::Unordered => {
            let mut all: Vec<usize> = (0..pop.len()).collect();
            let (chosen, _) = all.partial_shuffle(rng, k);
            chosen.to_vec()
        }
    };
    let mut state = PosteriorState::from_prior(prior);
    for idx in order {
        let sensor = &pop.sensors()[idx];
        state = state
            .update(sensor.measurement, sensor.precision)
            .expect("population precisions are positive");
    }
    Ok(finish(Scheme::FixedK, pop, &state, false))
}

/// Event-driven simulation of the timer protocol: sensor `i` schedules its
/// transmission at `timer_coeff / precision_i` (proportional to its noise
/// variance), the fusion center absorbs events in time order and broadcasts
/// a stop signal at the first event satisfying the stopping rule.
///
/// Start-time ties from f64 rounding are broken by descending precision then
/// ascending index, so the outcome is bit-identical to [`run_ordered_trial`].
/// When the rule is never satisfied the stop broadcast closes the log at the
/// final transmission time; when the prior alone satisfies it the log is a
/// single broadcast at time zero.
pub fn simulate_timer_protocol(
    pop: &SensorPopulation,
    prior: &GaussianPrior,
    config: &StoppingConfig,
    timer_coeff: f64,
) -> Result<(Vec<TimerEvent>, TrialOutcome), CoreError> {
    if !(timer_coeff.is_finite() && timer_coeff > 0.0) {
        return Err(CoreError::invalid(
            "timer_coeff",
            "must be finite and > 0",
        ));
    }

    let mut schedule: Vec<(f64, usize)> = pop
        .sensors()
        .iter()
        .map(|s| (timer_coeff / s.precision, s.index))
        .collect();
    schedule.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| {
                pop.sensors()[b.1]
                    .precision
                    .total_cmp(&pop.sensors()[a.1].precision)
            })
            .then(a.1.cmp(&b.1))
    });
    debug_assert_eq!(
        schedule.iter().map(|&(_, i)| i).collect::<Vec<_>>(),
        ordered_absorption(pop),
        "timer schedule must reproduce the precision ordering"
    );

    let mut events = Vec::with_capacity(pop.len() + 1);
    let mut state = PosteriorState::from_prior(prior);
    if should_stop(&state, config, prior) {
        events.push(TimerEvent {
            time: 0.0,
            kind: TimerEventKind::StopBroadcast,
        });
        return Ok((events, finish(Scheme::Ordered, pop, &state, true)));
    }

    let mut stopped = false;
    let mut last_time = 0.0;
    for &(time, idx) in &schedule {
        let sensor = &pop.sensors()[idx];
        state = state
            .update(sensor.measurement, sensor.precision)
            .expect("population precisions are positive");
        events.push(TimerEvent {
            time,
            kind: TimerEventKind::Transmission(idx),
        });
        last_time = time;
        if should_stop(&state, config, prior) {
            stopped = true;
            break;
        }
    }
    events.push(TimerEvent {
        time: last_time,
        kind: TimerEventKind::StopBroadcast,
    });
    Ok((events, finish(Scheme::Ordered, pop, &state, stopped)))
}

/// Sample statistics of one outcome column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateStats {
    pub trials: usize,
    pub mean_k: f64,
    pub mean_k_se: f64,
    pub mse: f64,
    pub mse_se: f64,
    /// False when fewer than two trials make the standard errors undefined;
    /// they are reported as zero in that case.
    pub se_defined: bool,
}

/// Two-pass mean and standard error (sample standard deviation over the
/// square root of the trial count), with compensated accumulation in a fixed
/// order so results do not depend on scheduling.
pub fn aggregate(outcomes: &[TrialOutcome]) -> AggregateStats {
    assert!(!outcomes.is_empty(), "cannot aggregate zero trials");
    let n = outcomes.len();
    let nf = n as f64;

    let mut k_sum = CompensatedSum::new();
    let mut err_sum = CompensatedSum::new();
    for o in outcomes {
        k_sum.add(o.k_star as f64);
        err_sum.add(o.squared_error);
    }
    let mean_k = k_sum.value() / nf;
    let mse = err_sum.value() / nf;

    if n < 2 {
        return AggregateStats {
            trials: n,
            mean_k,
            mean_k_se: 0.0,
            mse,
            mse_se: 0.0,
            se_defined: false,
        };
    }

    let mut k_dev = CompensatedSum::new();
    let mut err_dev = CompensatedSum::new();
    for o in outcomes {
        k_dev.add((o.k_star as f64 - mean_k).powi(2));
        err_dev.add((o.squared_error - mse).powi(2));
    }
    let k_var = k_dev.value() / (nf - 1.0);
    let err_var = err_dev.value() / (nf - 1.0);

    AggregateStats {
        trials: n,
        mean_k,
        mean_k_se: (k_var / nf).sqrt(),
        mse,
        mse_se: (err_var / nf).sqrt(),
        se_defined: true,
    }
}

/// Parameters for a Monte Carlo run: a fresh population is drawn per trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloConfig {
    pub prior: GaussianPrior,
    pub band: PrecisionBand,
    pub sensor_count: usize,
    pub stopping: StoppingConfig,
    pub trials: usize,
    pub seed: u64,
}

/// Outcomes of the three stopping-rule schemes on one shared population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTrial {
    pub unordered: TrialOutcome,
    pub ordered: TrialOutcome,
    pub full: TrialOutcome,
}

/// Per-scheme aggregates of a paired run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeComparison {
    pub unordered: AggregateStats,
    pub ordered: AggregateStats,
    pub full: AggregateStats,
}

fn stopping_trial(cfg: &MonteCarloConfig, trial: usize) -> PairedTrial {
    let mut rng = trial_rng(cfg.seed, trial as u64);
    let pop = sample_population(&cfg.prior, &cfg.band, cfg.sensor_count, &mut rng)
        .expect("Monte Carlo configuration was validated");
    let unordered = run_unordered_trial(&pop, &cfg.prior, &cfg.stopping, &mut rng);
    let ordered = run_ordered_trial(&pop, &cfg.prior, &cfg.stopping);
    let full = run_full_trial(&pop, &cfg.prior);
    PairedTrial {
        unordered,
        ordered,
        full,
    }
}

fn validate_mc(cfg: &MonteCarloConfig) -> Result<(), CoreError> {
    if cfg.trials < 1 {
        return Err(CoreError::invalid("trials", "must be >= 1"));
    }
    if cfg.sensor_count < 1 {
        return Err(CoreError::invalid("sensor_count", "must be >= 1"));
    }
    if cfg.band.lower() <= 0.0 {
        return Err(CoreError::invalid(
            "band.lower",
            "sampling requires a strictly positive lower precision bound",
        ));
    }
    Ok(())
}

/// Runs paired stopping-rule trials, one independent stream per trial.
pub fn stopping_trials(cfg: &MonteCarloConfig) -> Result<Vec<PairedTrial>, CoreError> {
    validate_mc(cfg)?;
    Ok((0..cfg.trials)
        .into_par_iter()
        .map(|t| stopping_trial(cfg, t))
        .collect())
}

/// Paired Monte Carlo aggregates for the unordered, ordered, and full-data
/// schemes. Deterministic for a fixed seed regardless of worker threads.
pub fn monte_carlo(cfg: &MonteCarloConfig) -> Result<SchemeComparison, CoreError> {
    let trials = stopping_trials(cfg)?;
    let unordered: Vec<TrialOutcome> = trials.iter().map(|t| t.unordered).collect();
    let ordered: Vec<TrialOutcome> = trials.iter().map(|t| t.ordered).collect();
    let full: Vec<TrialOutcome> = trials.iter().map(|t| t.full).collect();
    Ok(SchemeComparison {
        unordered: aggregate(&unordered),
        ordered: aggregate(&ordered),
        full: aggregate(&full),
    })
}

/// Runs paired fixed-k trials; returns `(ordered, unordered)` outcomes per
/// trial on a shared population.
pub fn fixed_k_trials(
    cfg: &MonteCarloConfig,
    k: usize,
) -> Result<Vec<(TrialOutcome, TrialOutcome)>, CoreError> {
    validate_mc(cfg)?;
    if k > cfg.sensor_count {
        return Err(CoreError::invalid(
            "k",
            format!("must not exceed sensor_count = {}", cfg.sensor_count),
        ));
    }
    Ok((0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg.seed, t as u64);
            let pop = sample_population(&cfg.prior, &cfg.band, cfg.sensor_count, &mut rng)
                .expect("Monte Carlo configuration was validated");
            let ordered = run_fixed_k_trial(&pop, &cfg.prior, k, FixedKScheme::Ordered, &mut rng)
                .expect("k was validated");
            let unordered =
                run_fixed_k_trial(&pop, &cfg.prior, k, FixedKScheme::Unordered, &mut rng)
                    .expect("k was validated");
            (ordered, unordered)
        })
        .collect())
}

/// Aggregates of paired fixed-k trials, `(ordered, unordered)`.
pub fn fixed_k_monte_carlo(
    cfg: &MonteCarloConfig,
    k: usize,
) -> Result<(AggregateStats, AggregateStats), CoreError> {
    let trials = fixed_k_trials(cfg, k)?;
    let ordered: Vec<TrialOutcome> = trials.iter().map(|t| t.0).collect();
    let unordered: Vec<TrialOutcome> = trials.iter().map(|t| t.1).collect();
    Ok((aggregate(&ordered), aggregate(&unordered)))
}

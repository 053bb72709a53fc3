//! Sequential Bayesian estimation over a simulated sensor network with
//! ordered and unordered transmission schemes.
//!
//! A fusion center estimates an unknown scalar from noisy sensor
//! measurements, stopping as soon as the posterior credible interval is
//! tight enough — equivalently, once the absorbed measurement precisions
//! reach a threshold. Sensors can transmit in random order or best-first
//! (descending precision, realized physically by variance-proportional
//! timers), and the crate provides:
//!
//! * the information-form estimator and stopping rule ([`estimator`]),
//! * population sampling with counter-based deterministic streams
//!   ([`model`]),
//! * closed-form expected transmission counts for the unordered scheme and
//!   upper/lower bounds for the ordered scheme, each validated by
//!   independent quadrature and Monte Carlo oracles ([`analytic`]),
//! * a Monte Carlo trial engine plus a discrete-event timer-protocol
//!   simulation ([`simulator`]).
//!
//! Closed forms are validated up to N = 50 sensors.

pub mod analytic;
pub mod error;
pub mod estimator;
pub mod model;
pub mod numeric;
pub mod quad;
pub mod simulator;

pub use analytic::{
    diagnostics_summary, irwin_hall_cdf, ordered_lower_bound, ordered_lower_bound_term,
    ordered_upper_bound, ordered_upper_bound_term, order_statistic_pdf, prob_topk_sum_leq,
    relative_difference, s1_closed_form, unordered_expected_k, upper_bound_diagnostics,
    upper_bound_quadrature_oracle, DiagnosticsSummary, McProbability, NormalizedSum,
    OrderedSpectrum, S1Reading, UpperBoundBranch, UpperBoundDiagnosticsRow, UpperBoundTerm,
};
pub use error::CoreError;
pub use estimator::{should_stop, PosteriorState, StoppingConfig};
pub use model::{
    derive_seed, sample_population, stopping_threshold, trial_rng, GaussianPrior, PrecisionBand,
    ProblemInstance, Sensor, SensorPopulation, TrialRng,
};
pub use simulator::{
    aggregate, fixed_k_monte_carlo, fixed_k_trials, monte_carlo, ordered_absorption,
    run_fixed_k_trial, run_full_trial, run_ordered_trial, run_trial_in_order,
    run_unordered_trial, run_unordered_trial_traced, simulate_timer_protocol, stopping_trials,
    AggregateStats, FixedKScheme, MonteCarloConfig, PairedTrial, Scheme, SchemeComparison,
    TimerEvent, TimerEventKind, TrialOutcome,
};

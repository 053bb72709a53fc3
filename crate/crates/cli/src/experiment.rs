//! Experiment runners producing the CSV tables.
//!
//! Sweep points use independent derived seeds, so every figure's data is
//! reproducible from `(config, seed)` alone and invariant to thread count.

use thiserror::Error;

use seqest_core::{
    derive_seed, diagnostics_summary, monte_carlo, fixed_k_monte_carlo, ordered_lower_bound,
    ordered_upper_bound, unordered_expected_k, upper_bound_diagnostics, CoreError, GaussianPrior,
    MonteCarloConfig, PrecisionBand, ProblemInstance, S1Reading, StoppingConfig,
};

use crate::config::{ConfigError, ExperimentConfig, ExperimentKind};
use crate::output::{CsvCell, ResultTable};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] CoreError),
    #[error("non-finite value in column `{column}`, row {row}")]
    NonFinite { column: String, row: usize },
    #[error("failed writing `{path}`: {message}")]
    Io { path: String, message: String },
}

impl ExperimentError {
    /// Process exit code: 1 for configuration errors, 2 for runtime
    /// (numerical or I/O) failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 1,
            _ => 2,
        }
    }
}

struct Point {
    prior: GaussianPrior,
    band: PrecisionBand,
    stopping: StoppingConfig,
    seed: u64,
}

fn sweep_point(cfg: &ExperimentConfig, index: usize) -> Result<Point, ExperimentError> {
    let tau = cfg.tau_sweep[index];
    let prior = GaussianPrior::new(cfg.prior_mean, tau)?;
    let band = PrecisionBand::new(cfg.band_lower, cfg.band_upper)?;
    let stopping = StoppingConfig::new(cfg.alpha, cfg.epsilon, &prior)?;
    Ok(Point {
        prior,
        band,
        stopping,
        seed: derive_seed(cfg.seed, index as u64),
    })
}

fn base_notes(cfg: &ExperimentConfig) -> Vec<String> {
    vec![
        format!("experiment={}", cfg.kind),
        format!("trials={}", cfg.trials),
        format!("seed={}", cfg.seed),
    ]
}

/// Dispatches on the experiment kind and produces its result table.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable, ExperimentError> {
    cfg.validate()?;
    match cfg.kind {
        ExperimentKind::MseVsTau => run_mse_vs_tau(cfg),
        ExperimentKind::MseVsK => run_mse_vs_k(cfg),
        ExperimentKind::EkVsTau => run_ek_vs_tau(cfg),
        ExperimentKind::Diagnostics => run_diagnostics(cfg),
    }
}

fn run_mse_vs_tau(cfg: &ExperimentConfig) -> Result<ResultTable, ExperimentError> {
    let mut rows = Vec::with_capacity(cfg.tau_sweep.len());
    for index in 0..cfg.tau_sweep.len() {
        let point = sweep_point(cfg, index)?;
        let mc = monte_carlo(&MonteCarloConfig {
            prior: point.prior,
            band: point.band,
            sensor_count: cfg.sensor_count,
            stopping: point.stopping,
            trials: cfg.trials,
            seed: point.seed,
        })?;
        rows.push(vec![
            CsvCell::Num(cfg.tau_sweep[index]),
            CsvCell::Num(mc.unordered.mse),
            CsvCell::Num(mc.ordered.mse),
            CsvCell::Num(mc.full.mse),
            CsvCell::Num(mc.unordered.mse_se),
            CsvCell::Num(mc.ordered.mse_se),
            CsvCell::Num(mc.full.mse_se),
        ]);
    }
    let mut notes = base_notes(cfg);
    notes.push(
        "mse averages include trials where the stopping rule was never satisfied (k* = n)"
            .to_string(),
    );
    Ok(ResultTable {
        header: vec![
            "tau0_sq",
            "mse_unordered",
            "mse_ordered",
            "mse_full",
            "mse_unordered_se",
            "mse_ordered_se",
            "mse_full_se",
        ],
        rows,
        notes,
    })
}

fn run_mse_vs_k(cfg: &ExperimentConfig) -> Result<ResultTable, ExperimentError> {
    let point = sweep_point(cfg, 0)?;
    let mut rows = Vec::with_capacity(cfg.k_sweep.len());
    for (index, &k) in cfg.k_sweep.iter().enumerate() {
        let (ordered, unordered) = fixed_k_monte_carlo(
            &MonteCarloConfig {
                prior: point.prior,
                band: point.band,
                sensor_count: cfg.sensor_count,
                stopping: point.stopping,
                trials: cfg.trials,
                seed: derive_seed(cfg.seed, index as u64),
            },
            k,
        )?;
        rows.push(vec![
            CsvCell::Int(k as u64),
            CsvCell::Num(ordered.mse),
            CsvCell::Num(unordered.mse),
            CsvCell::Num(ordered.mse_se),
            CsvCell::Num(unordered.mse_se),
        ]);
    }
    let mut notes = base_notes(cfg);
    notes.push(format!("tau0_sq={} (first sweep value)", cfg.tau_sweep[0]));
    Ok(ResultTable {
        header: vec![
            "k",
            "mse_ordered",
            "mse_unordered",
            "mse_ordered_se",
            "mse_unordered_se",
        ],
        rows,
        notes,
    })
}

fn run_ek_vs_tau(cfg: &ExperimentConfig) -> Result<ResultTable, ExperimentError> {
    let mut rows = Vec::with_capacity(cfg.tau_sweep.len());
    for index in 0..cfg.tau_sweep.len() {
        let point = sweep_point(cfg, index)?;
        let inst =
            ProblemInstance::new(cfg.sensor_count, point.band, point.stopping.threshold())?;
        let analytic = unordered_expected_k(&inst);
        let lower = ordered_lower_bound(&inst);
        let upper = ordered_upper_bound(&inst);
        let mc = monte_carlo(&MonteCarloConfig {
            prior: point.prior,
            band: point.band,
            sensor_count: cfg.sensor_count,
            stopping: point.stopping,
            trials: cfg.trials,
            seed: point.seed,
        })?;
        rows.push(vec![
            CsvCell::Num(cfg.tau_sweep[index]),
            CsvCell::Num(analytic),
            CsvCell::Num(mc.unordered.mean_k),
            CsvCell::Num(mc.ordered.mean_k),
            CsvCell::Num(lower),
            CsvCell::Num(upper),
            CsvCell::Num(mc.unordered.mean_k_se),
            CsvCell::Num(mc.ordered.mean_k_se),
        ]);
    }
    Ok(ResultTable {
        header: vec![
            "tau0_sq",
            "ek_unordered_analytic",
            "ek_unordered_mc",
            "ek_ordered_mc",
            "bound_lower",
            "bound_upper",
            "ek_unordered_mc_se",
            "ek_ordered_mc_se",
        ],
        rows,
        notes: base_notes(cfg),
    })
}

fn run_diagnostics(cfg: &ExperimentConfig) -> Result<ResultTable, ExperimentError> {
    let point = sweep_point(cfg, 0)?;
    let inst = ProblemInstance::new(cfg.sensor_count, point.band, point.stopping.threshold())?;
    let rows_data = upper_bound_diagnostics(&inst)?;
    let summary = diagnostics_summary(&rows_data);

    let rows = rows_data
        .iter()
        .map(|row| {
            vec![
                CsvCell::Int(row.k as u64),
                CsvCell::Int(row.j as u64),
                CsvCell::Text(row.branch.label().to_string()),
                CsvCell::Num(row.closed_form),
                CsvCell::Num(row.quadrature),
                CsvCell::Num(row.abs_difference),
            ]
        })
        .collect();

    let mut notes = base_notes(cfg);
    notes.push(format!(
        "tau0_sq={} (first sweep value), threshold={}",
        cfg.tau_sweep[0],
        inst.threshold()
    ));
    debug_assert_eq!(summary.adopted_reading, S1Reading::BracketPower);
    notes.push(
        "validated binomial reading: expanded bracket power, C(k, i)".to_string(),
    );
    notes.push(format!(
        "max relative difference vs quadrature: {:.3e}",
        summary.max_relative_difference
    ));
    notes.push(format!(
        "rejected binomial reading C(n-k-1, i): max relative difference {:.3e}",
        summary.alternate_max_relative_difference
    ));
    Ok(ResultTable {
        header: vec![
            "k",
            "j",
            "branch",
            "s1_closed_form",
            "quadrature",
            "abs_difference",
        ],
        rows,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(kind: &str, extra: &str) -> ExperimentConfig {
        ExperimentConfig::parse(&format!(
            "experiment={kind} n=8 trials=50 tau0_sq=1 k_sweep=1,4,8 {extra}"
        ))
        .unwrap()
    }

    #[test]
    fn single_point_single_trial_runs() {
        let cfg = ExperimentConfig::parse("experiment=mse_vs_tau n=5 trials=1 tau0_sq=2").unwrap();
        let table = run_experiment(&cfg).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].len(), table.header.len());
    }

    #[test]
    fn ek_table_has_eight_columns() {
        let table = run_experiment(&tiny("ek_vs_tau", "")).unwrap();
        assert_eq!(table.header.len(), 8);
        assert!(table.rows.iter().all(|r| r.len() == 8));
    }

    #[test]
    fn mse_vs_k_rows_follow_sweep() {
        let table = run_experiment(&tiny("mse_vs_k", "")).unwrap();
        assert_eq!(table.rows.len(), 3);
        assert_eq!(table.rows[2][0], CsvCell::Int(8));
    }

    #[test]
    fn diagnostics_table_and_notes() {
        let table = run_experiment(&tiny("diagnostics", "")).unwrap();
        assert_eq!(table.header.len(), 6);
        assert_eq!(table.rows.len(), (1..=8).sum::<usize>());
        assert!(table
            .notes
            .iter()
            .any(|n| n.contains("validated binomial reading")));
    }
}

//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (visible with `--nocapture`). Every tolerance is pinned here, in code.
//!
//! Criteria run at the library's validated scale: N = 50 sensors,
//! prior mean 2, precision band [0.2, 1], interval half-width target 0.4 at
//! multiplier 1.96, 1e5 Monte Carlo trials per sweep point.

use std::sync::LazyLock;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use seqest_cli::{csv_bytes, run_experiment, ExperimentConfig};
use seqest_core::{
    diagnostics_summary, fixed_k_trials, irwin_hall_cdf, order_statistic_pdf,
    ordered_lower_bound, ordered_upper_bound, quad::adaptive_quadrature, run_ordered_trial,
    sample_population, simulate_timer_protocol, stopping_trials, trial_rng,
    unordered_expected_k, upper_bound_diagnostics, GaussianPrior, MonteCarloConfig,
    PosteriorState, PrecisionBand, ProblemInstance, SchemeComparison, StoppingConfig,
    TimerEventKind, TrialOutcome,
};

const SENSORS: usize = 50;
const PRIOR_MEAN: f64 = 2.0;
const BAND_LOWER: f64 = 0.2;
const BAND_UPPER: f64 = 1.0;
const ALPHA: f64 = 1.96;
const EPSILON: f64 = 0.4;
const TRIALS: usize = 100_000;
const SWEEP_SEED: u64 = 42;

fn band() -> PrecisionBand {
    PrecisionBand::new(BAND_LOWER, BAND_UPPER).unwrap()
}

fn tau_sweep() -> Vec<f64> {
    (1..=10).map(|i| 0.5 * i as f64).collect()
}

fn combined_se(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

fn report(criterion: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {verdict} — {detail}");
    assert!(ok, "criterion {criterion} failed: {detail}");
}

struct SweepPoint {
    tau: f64,
    analytic: f64,
    bound_lower: f64,
    bound_upper: f64,
    comparison: SchemeComparison,
    pathwise_violations: usize,
}

/// Shared stopping-scheme sweep for criteria 1-4, computed once.
static SWEEP: LazyLock<Vec<SweepPoint>> = LazyLock::new(|| {
    tau_sweep()
        .iter()
        .enumerate()
        .map(|(index, &tau)| {
            let prior = GaussianPrior::new(PRIOR_MEAN, tau).unwrap();
            let stopping = StoppingConfig::new(ALPHA, EPSILON, &prior).unwrap();
            let inst = ProblemInstance::new(SENSORS, band(), stopping.threshold()).unwrap();
            let trials = stopping_trials(&MonteCarloConfig {
                prior,
                band: band(),
                sensor_count: SENSORS,
                stopping,
                trials: TRIALS,
                seed: seqest_core::derive_seed(SWEEP_SEED, index as u64),
            })
            .unwrap();
            let pathwise_violations = trials
                .iter()
                .filter(|t| t.ordered.k_star > t.unordered.k_star)
                .count();
            let unordered: Vec<TrialOutcome> = trials.iter().map(|t| t.unordered).collect();
            let ordered: Vec<TrialOutcome> = trials.iter().map(|t| t.ordered).collect();
            let full: Vec<TrialOutcome> = trials.iter().map(|t| t.full).collect();
            SweepPoint {
                tau,
                analytic: unordered_expected_k(&inst),
                bound_lower: ordered_lower_bound(&inst),
                bound_upper: ordered_upper_bound(&inst),
                comparison: SchemeComparison {
                    unordered: seqest_core::aggregate(&unordered),
                    ordered: seqest_core::aggregate(&ordered),
                    full: seqest_core::aggregate(&full),
                },
                pathwise_violations,
            }
        })
        .collect()
});

#[test]
fn criterion_01_analytic_matches_unordered_monte_carlo() {
    let started = Instant::now();
    let mut worst_sigmas = 0.0f64;
    for point in SWEEP.iter() {
        let mc = &point.comparison.unordered;
        let sigmas = (point.analytic - mc.mean_k).abs() / mc.mean_k_se;
        worst_sigmas = worst_sigmas.max(sigmas);
    }
    report(
        "1 (analytic vs MC unordered mean)",
        worst_sigmas <= 3.0,
        &format!(
            "max deviation {worst_sigmas:.2} standard errors over {} points, {} trials each, {:.1?} elapsed",
            SWEEP.len(),
            TRIALS,
            started.elapsed()
        ),
    );
}

#[test]
fn criterion_02_bounds_bracket_ordered_monte_carlo() {
    let mut ok = true;
    let mut details = String::new();
    for point in SWEEP.iter() {
        let mc = &point.comparison.ordered;
        let low_ok = point.bound_lower - 3.0 * mc.mean_k_se <= mc.mean_k;
        let high_ok = mc.mean_k <= point.bound_upper + 3.0 * mc.mean_k_se;
        let ordered_ok = point.bound_lower <= point.bound_upper;
        if !(low_ok && high_ok && ordered_ok) {
            ok = false;
            details = format!(
                "tau0_sq={}: bounds [{}, {}] vs MC {} (se {})",
                point.tau, point.bound_lower, point.bound_upper, mc.mean_k, mc.mean_k_se
            );
            break;
        }
    }
    if ok {
        details = format!(
            "lower <= MC <= upper within 3 se at all {} points; lower <= upper exactly",
            SWEEP.len()
        );
    }
    report("2 (bound bracketing)", ok, &details);
}

#[test]
fn criterion_03_ordering_saves_transmissions() {
    let mut min_sigmas = f64::INFINITY;
    let mut violations = 0usize;
    let mut dominance_ok = true;
    for point in SWEEP.iter() {
        let unordered = &point.comparison.unordered;
        let ordered = &point.comparison.ordered;
        let gap = unordered.mean_k - ordered.mean_k;
        let sigmas = gap / combined_se(unordered.mean_k_se, ordered.mean_k_se);
        min_sigmas = min_sigmas.min(sigmas);
        violations += point.pathwise_violations;
        // Ordering never increases the expected transmission count, so the
        // unordered closed form must dominate the ordered MC mean.
        dominance_ok &= point.analytic >= ordered.mean_k - 3.0 * ordered.mean_k_se;
    }
    report(
        "3 (transmission savings)",
        min_sigmas > 3.0 && violations == 0 && dominance_ok,
        &format!(
            "min separation {min_sigmas:.1} combined se; {violations} pathwise violations over {} paired trials; closed form dominates ordered MC",
            SWEEP.len() * TRIALS
        ),
    );
}

#[test]
fn criterion_04_mse_parity_at_equal_target() {
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut details = String::new();
    for point in SWEEP.iter() {
        let u = &point.comparison.unordered;
        let o = &point.comparison.ordered;
        let f = &point.comparison.full;
        let parity_sigmas = (o.mse - u.mse).abs() / combined_se(o.mse_se, u.mse_se);
        worst = worst.max(parity_sigmas);
        let full_ok = f.mse <= o.mse + 3.0 * combined_se(f.mse_se, o.mse_se)
            && f.mse <= u.mse + 3.0 * combined_se(f.mse_se, u.mse_se);
        if parity_sigmas > 3.0 || !full_ok {
            ok = false;
            details = format!(
                "tau0_sq={}: mse u={} o={} full={} (parity {parity_sigmas:.2} se)",
                point.tau, u.mse, o.mse, f.mse
            );
            break;
        }
    }
    if ok {
        details = format!("max |mse gap| {worst:.2} combined se; full-data mse lowest within 3 se");
    }
    report("4 (mse parity at equal accuracy target)", ok, &details);
}

#[test]
fn criterion_05_fixed_budget_ordering_dominates() {
    let prior = GaussianPrior::new(PRIOR_MEAN, 1.0).unwrap();
    let stopping = StoppingConfig::new(ALPHA, EPSILON, &prior).unwrap();
    let budgets = [1usize, 5, 10, 20, 30, 40, 50];
    let mut strict_mid_separation = false;
    let mut ok = true;
    let mut details = String::new();

    for (index, &k) in budgets.iter().enumerate() {
        let pairs = fixed_k_trials(
            &MonteCarloConfig {
                prior,
                band: band(),
                sensor_count: SENSORS,
                stopping,
                trials: TRIALS,
                seed: seqest_core::derive_seed(1001, index as u64),
            },
            k,
        )
        .unwrap();
        let ordered: Vec<TrialOutcome> = pairs.iter().map(|p| p.0).collect();
        let unordered: Vec<TrialOutcome> = pairs.iter().map(|p| p.1).collect();
        let o = seqest_core::aggregate(&ordered);
        let u = seqest_core::aggregate(&unordered);
        let se = combined_se(o.mse_se, u.mse_se);

        if k == SENSORS {
            // Identical measurement sets: any difference is float ordering.
            let gap = (o.mse - u.mse).abs();
            if gap > 1e-9 * o.mse.max(1.0) {
                ok = false;
                details = format!("k={k}: full-set mse differs by {gap}");
                break;
            }
        } else {
            if o.mse > u.mse + 3.0 * se {
                ok = false;
                details = format!("k={k}: ordered mse {} above unordered {}", o.mse, u.mse);
                break;
            }
            if (5..=40).contains(&k) && u.mse - o.mse > 3.0 * se {
                strict_mid_separation = true;
            }
        }
    }
    if ok && !strict_mid_separation {
        ok = false;
        details = "no mid-range budget showed strict separation".to_string();
    }
    if ok {
        details = format!(
            "ordered mse <= unordered at k in {budgets:?}; strict separation mid-range; equality at k=50"
        );
    }
    report("5 (fixed-budget dominance)", ok, &details);
}

#[test]
fn criterion_06_irwin_hall_vs_empirical_cdf() {
    // Two-sided 3-sigma-equivalent Kolmogorov band: c solves 2 exp(-2c^2) = 0.0027.
    const KS_CONSTANT: f64 = 1.8176;
    const SAMPLES: usize = 1_000_000;
    const CHUNKS: usize = 1000;
    let per_chunk = SAMPLES / CHUNKS;

    let mut details = String::new();
    for &k in &[2usize, 10, 50] {
        let mut sums: Vec<f64> = (0..CHUNKS as u64)
            .into_par_iter()
            .flat_map_iter(|chunk| {
                let mut rng = trial_rng(2002 + k as u64, chunk);
                (0..per_chunk)
                    .map(|_| (0..k).map(|_| rng.random::<f64>()).sum::<f64>())
                    .collect::<Vec<f64>>()
            })
            .collect();
        sums.sort_unstable_by(|a, b| a.total_cmp(b));

        let n = sums.len() as f64;
        let statistic = sums
            .par_iter()
            .enumerate()
            .map(|(i, &x)| {
                let cdf = irwin_hall_cdf(x, k);
                let upper = ((i + 1) as f64 / n - cdf).abs();
                let lower = (cdf - i as f64 / n).abs();
                upper.max(lower)
            })
            .reduce(|| 0.0, f64::max);
        let band = KS_CONSTANT / n.sqrt();
        details.push_str(&format!("k={k}: D={statistic:.2e} (band {band:.2e}); "));
        if statistic > band {
            report("6 (Irwin-Hall vs empirical CDF)", false, &details);
        }
    }
    // Clamping: probe values across and beyond the support.
    for &k in &[2usize, 10, 50] {
        for i in 0..=300 {
            let x = -1.0 + (k as f64 + 2.0) * i as f64 / 300.0;
            let v = irwin_hall_cdf(x, k);
            if !(0.0..=1.0).contains(&v) {
                report("6 (Irwin-Hall vs empirical CDF)", false, "output left [0,1]");
            }
        }
    }
    report("6 (Irwin-Hall vs empirical CDF)", true, &details);
}

#[test]
fn criterion_07_closed_form_matches_quadrature() {
    let prior = GaussianPrior::new(PRIOR_MEAN, 1.0).unwrap();
    let inst =
        ProblemInstance::from_accuracy(SENSORS, band(), ALPHA, EPSILON, &prior).unwrap();
    let rows = upper_bound_diagnostics(&inst).unwrap();
    let summary = diagnostics_summary(&rows);
    let ok = summary.max_relative_difference <= 1e-6
        && summary.alternate_max_relative_difference > 1e-3
        && rows.len() == (1..=SENSORS).sum::<usize>();
    report(
        "7 (closed form vs quadrature)",
        ok,
        &format!(
            "validated reading: binomial over the expanded bracket power C(k, i) — max rel diff {:.2e} across {} (k, j) terms; rejected reading C(n-k-1, i) deviates up to {:.2e}",
            summary.max_relative_difference,
            summary.rows,
            summary.alternate_max_relative_difference
        ),
    );
}

#[test]
fn criterion_08_order_statistic_density_normalizes() {
    let mut worst = 0.0f64;
    for k in 0..SENSORS {
        let integral = adaptive_quadrature(
            |x| order_statistic_pdf(x, k, SENSORS, &band()),
            BAND_LOWER,
            BAND_UPPER,
            1e-12,
            1e-12,
            4000,
        )
        .unwrap()
        .value;
        worst = worst.max((integral - 1.0).abs());
    }
    report(
        "8 (order-statistic density normalization)",
        worst <= 1e-9,
        &format!("max |integral - 1| = {worst:.2e} over k = 0..{}", SENSORS - 1),
    );
}

#[test]
fn criterion_09_estimator_invariants() {
    const CASES: usize = 10_000;
    let relative = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
    let (worst_perm, worst_batch) = (0..CASES as u64)
        .into_par_iter()
        .map(|case| {
            let mut rng = trial_rng(3003, case);
            let count = rng.random_range(1..=SENSORS);
            // Sign-definite values keep posterior means bounded away from
            // zero, where relative comparison is meaningful.
            let mean = rng.random_range(0.5..10.0);
            let variance = rng.random_range(0.05..20.0);
            let prior = GaussianPrior::new(mean, variance).unwrap();
            let measurements: Vec<(f64, f64)> = (0..count)
                .map(|_| (rng.random_range(1.0..100.0), rng.random_range(0.01..10.0)))
                .collect();

            let absorb = |order: &[usize]| {
                let mut state = PosteriorState::from_prior(&prior);
                for &i in order {
                    let (y, z) = measurements[i];
                    state = state.update(y, z).unwrap();
                }
                state
            };
            let forward: Vec<usize> = (0..count).collect();
            let mut reversed = forward.clone();
            reversed.reverse();
            let mut shuffled = forward.clone();
            use rand::seq::SliceRandom;
            shuffled.shuffle(&mut rng);

            let a = absorb(&forward);
            let b = absorb(&reversed);
            let c = absorb(&shuffled);
            let perm = relative(a.mean(), b.mean())
                .max(relative(a.variance(), b.variance()))
                .max(relative(a.mean(), c.mean()))
                .max(relative(a.variance(), c.variance()));

            let precision_total: f64 =
                1.0 / variance + measurements.iter().map(|&(_, z)| z).sum::<f64>();
            let information_total: f64 =
                mean / variance + measurements.iter().map(|&(y, z)| z * y).sum::<f64>();
            let batch = relative(a.mean(), information_total / precision_total)
                .max(relative(a.variance(), 1.0 / precision_total));
            (perm, batch)
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1)));

    report(
        "9 (estimator invariants)",
        worst_perm <= 1e-10 && worst_batch <= 1e-12,
        &format!(
            "over {CASES} cases: permutation deviation {worst_perm:.2e} (limit 1e-10), batch deviation {worst_batch:.2e} (limit 1e-12)"
        ),
    );
}

#[test]
fn criterion_10_timer_protocol_equivalence() {
    const CASES: usize = 10_000;
    let prior = GaussianPrior::new(PRIOR_MEAN, 1.0).unwrap();
    let stopping = StoppingConfig::new(ALPHA, EPSILON, &prior).unwrap();
    let mismatches: usize = (0..CASES as u64)
        .into_par_iter()
        .map(|case| {
            let mut rng = trial_rng(4004, case);
            let pop = sample_population(&prior, &band(), SENSORS, &mut rng).unwrap();
            let direct = run_ordered_trial(&pop, &prior, &stopping);
            let (events, event_driven) =
                simulate_timer_protocol(&pop, &prior, &stopping, 1.0).unwrap();
            let log_ok = matches!(
                events.last(),
                Some(e) if e.kind == TimerEventKind::StopBroadcast
            ) && events[..events.len() - 1]
                .iter()
                .all(|e| matches!(e.kind, TimerEventKind::Transmission(_)));
            let equal = event_driven.k_star == direct.k_star
                && event_driven.estimate.to_bits() == direct.estimate.to_bits();
            usize::from(!(log_ok && equal))
        })
        .sum();
    report(
        "10 (timer-protocol equivalence)",
        mismatches == 0,
        &format!("{mismatches} mismatches over {CASES} trials; stop broadcast closes every log"),
    );
}

#[test]
fn criterion_11_csv_determinism_across_thread_counts() {
    let cfg = ExperimentConfig::parse("experiment=ek_vs_tau trials=20000").unwrap();
    let run_in_pool = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| csv_bytes(&run_experiment(&cfg).unwrap()).unwrap())
    };
    let single = run_in_pool(1);
    let multi = run_in_pool(4);
    report(
        "11 (csv determinism across thread counts)",
        single == multi,
        &format!(
            "full sweep ({} points, 20000 trials): {} bytes identical between 1- and 4-thread pools",
            cfg.tau_sweep.len(),
            single.len()
        ),
    );
}

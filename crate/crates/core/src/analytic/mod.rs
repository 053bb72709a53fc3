//! Closed-form transmission-count analytics and the independent oracles that
//! validate them.
//!
//! The unordered scheme's expected transmission count reduces, after mapping
//! each precision to `Uniform(0,1)`, to partial sums of the Irwin-Hall CDF.
//! The ordered scheme admits no tractable exact expression, so upper and
//! lower bounds are computed instead (see [`bounds`]), each cross-checked by
//! quadrature and Monte Carlo routes.

mod bounds;

pub use bounds::{
    diagnostics_summary, ordered_lower_bound, ordered_lower_bound_term, ordered_upper_bound,
    ordered_upper_bound_term, relative_difference, s1_closed_form, upper_bound_diagnostics,
    upper_bound_quadrature_oracle, DiagnosticsSummary, S1Reading, UpperBoundBranch,
    UpperBoundDiagnosticsRow, UpperBoundTerm,
};

use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::CoreError;
use crate::model::{PrecisionBand, ProblemInstance};
use crate::numeric::{CompensatedSum, DoubleDouble};

/// CDF of the sum of `k` independent `Uniform(0,1)` variables.
///
/// The alternating series is evaluated in double-double precision with the
/// symmetry `F(x) = 1 - F(k - x)` applied for `x > k/2`, which caps the
/// cancellation amplitude; the result is clamped to `[0,1]`. Validated up to
/// `k = 50` (the term/result amplitude ratio there, ~7e19, leaves ~1e-12 of
/// the ~32 significant digits carried).
pub fn irwin_hall_cdf(x: f64, k: usize) -> f64 {
    if k == 0 {
        return if x >= 0.0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    if x <= 0.0 {
        return 0.0;
    }
    if x >= kf {
        return 1.0;
    }
    let value = if x > 0.5 * kf {
        1.0 - irwin_hall_series(kf - x, k)
    } else {
        irwin_hall_series(x, k)
    };
    debug_assert!(
        (-1e-8..=1.0 + 1e-8).contains(&value),
        "Irwin-Hall series left its accuracy envelope: F({x}, {k}) = {value}"
    );
    value.clamp(0.0, 1.0)
}

/// Raw alternating series for `0 < x <= k/2`.
fn irwin_hall_series(x: f64, k: usize) -> f64 {
    let j_max = x.floor() as usize;
    let mut sum = DoubleDouble::ZERO;
    let mut binom = DoubleDouble::ONE;
    for j in 0..=j_max {
        // x - j is exact: subtracting a small integer from a larger positive
        // f64 lands in the same or a finer binade.
        let term = binom * DoubleDouble::from_f64(x - j as f64).powi(k);
        sum = if j % 2 == 0 { sum + term } else { sum - term };
        binom = binom.mul_f64((k - j) as f64) / DoubleDouble::from_f64((j + 1) as f64);
    }
    (sum / factorial_dd(k)).to_f64()
}

fn factorial_dd(k: usize) -> DoubleDouble {
    (2..=k).fold(DoubleDouble::ONE, |acc, t| acc.mul_f64(t as f64))
}

/// `n choose k` in f64; exact for the validated range (binomials up to
/// `C(50,25)` stay below 2^53).
pub(crate) fn binomial_f64(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    let mut value = 1.0;
    for i in 0..k {
        value = value * (n - i) as f64 / (i + 1) as f64;
    }
    value
}

/// Partial-sum threshold mapped onto `Uniform(0,1)` coordinates: the event
/// "sum of `count` precisions from the band stays at or below the raw
/// threshold" becomes an Irwin-Hall CDF query at the normalized threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedSum {
    count: usize,
    threshold: f64,
    cutoff: usize,
}

impl NormalizedSum {
    pub fn new(raw_threshold: f64, count: usize, band: &PrecisionBand) -> Self {
        let threshold = (raw_threshold - count as f64 * band.lower()) / band.width();
        let cutoff = threshold.floor().clamp(0.0, count as f64) as usize;
        Self {
            count,
            threshold,
            cutoff,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Threshold in `Uniform(0,1)` coordinates.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Last series index with a nonzero contribution,
    /// `min(max(floor(threshold), 0), count)`.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Probability that the normalized sum stays at or below the threshold.
    pub fn cdf(&self) -> f64 {
        irwin_hall_cdf(self.threshold, self.count)
    }
}

/// Expected number of transmissions for the unordered scheme: the sum over
/// `k = 0..N-1` of the probability that the first `k` absorbed precisions
/// have not yet reached the threshold. The `k = 0` term is 1 exactly when the
/// threshold is nonnegative. Result lies in `[0, N]`.
pub fn unordered_expected_k(inst: &ProblemInstance) -> f64 {
    let band = inst.band();
    let mut acc = CompensatedSum::new();
    for k in 0..inst.sensor_count() {
        acc.add(NormalizedSum::new(inst.threshold(), k, &band).cdf());
    }
    acc.value()
}

/// Density of the `(k+1)`-th largest of `n` iid `Uniform(lower, upper)` draws
/// at `x`; zero outside the band.
///
/// Panics if `k >= n` (there is no such order statistic).
pub fn order_statistic_pdf(x: f64, k: usize, n: usize, band: &PrecisionBand) -> f64 {
    assert!(k < n, "order statistic requires k < n (got k={k}, n={n})");
    if x < band.lower() || x > band.upper() {
        return 0.0;
    }
    let coeff = binomial_f64(n, k) * (n - k) as f64 / band.width().powi(n as i32);
    coeff * (x - band.lower()).powi((n - k - 1) as i32) * (band.upper() - x).powi(k as i32)
}

/// Precisions of one realization arranged in descending order with their
/// running partial sums (`partial_sum(k)` = sum of the `k` largest).
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedSpectrum {
    descending: Vec<f64>,
    prefix: Vec<f64>,
}

impl OrderedSpectrum {
    pub fn from_precisions(precisions: &[f64]) -> Self {
        let mut descending = precisions.to_vec();
        descending.sort_unstable_by(|a, b| b.total_cmp(a));
        let mut prefix = Vec::with_capacity(descending.len() + 1);
        prefix.push(0.0);
        for (i, z) in descending.iter().enumerate() {
            prefix.push(prefix[i] + z);
        }
        Self { descending, prefix }
    }

    pub fn len(&self) -> usize {
        self.descending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descending.is_empty()
    }

    /// The `rank`-th largest precision, zero-based.
    pub fn largest(&self, rank: usize) -> f64 {
        self.descending[rank]
    }

    pub fn descending(&self) -> &[f64] {
        &self.descending
    }

    /// Sum of the `k` largest precisions.
    pub fn partial_sum(&self, k: usize) -> f64 {
        self.prefix[k]
    }
}

/// Monte Carlo estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McProbability {
    pub probability: f64,
    pub standard_error: f64,
}

/// Monte Carlo estimate of the probability that the sum of the `k` largest of
/// `N` band-uniform draws stays at or below the instance threshold — the
/// quantity the ordered-scheme bounds bracket.
pub fn prob_topk_sum_leq<R: Rng>(
    inst: &ProblemInstance,
    k: usize,
    trials: usize,
    rng: &mut R,
) -> Result<McProbability, CoreError> {
    let n = inst.sensor_count();
    if k < 1 || k > n {
        return Err(CoreError::invalid("k", format!("must satisfy 1 <= k <= {n}")));
    }
    if trials == 0 {
        return Err(CoreError::invalid("trials", "must be >= 1"));
    }
    let band = inst.band();
    let dist = Uniform::new(band.lower(), band.upper())
        .map_err(|e| CoreError::invalid("band", e.to_string()))?;

    let mut draws = vec![0.0f64; n];
    let mut hits = 0usize;
    for _ in 0..trials {
        for slot in draws.iter_mut() {
            *slot = dist.sample(rng);
        }
        // Sum of the k largest: partition so the top k sit in the tail.
        draws.select_nth_unstable_by(n - k, |a, b| a.total_cmp(b));
        let top_sum: f64 = draws[n - k..].iter().sum();
        if top_sum <= inst.threshold() {
            hits += 1;
        }
    }
    let probability = hits as f64 / trials as f64;
    let standard_error = (probability * (1.0 - probability) / trials as f64).sqrt();
    Ok(McProbability {
        probability,
        standard_error,
    })
}

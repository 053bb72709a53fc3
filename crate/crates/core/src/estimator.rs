//! Information-form sequential Bayesian posterior updates and the stopping
//! predicate shared by both transmission schemes.
//!
//! The posterior over the unknown parameter stays Gaussian; tracking the
//! precision total and information total (instead of mean/variance) makes the
//! update a pair of additions, avoids catastrophic cancellation, and makes
//! permutation invariance exact in exact arithmetic.

use crate::error::CoreError;
use crate::model::GaussianPrior;

/// Running posterior in information form.
///
/// * `precision` — prior precision plus the precisions of all absorbed
///   measurements; the posterior variance is its inverse.
/// * `information` — prior mean times prior precision, plus
///   `precision * measurement` for each absorbed measurement; the posterior
///   mean is `information / precision`.
/// * `count` — number of absorbed measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorState {
    precision: f64,
    information: f64,
    count: usize,
}

impl PosteriorState {
    /// The prior as the zero-measurement posterior.
    pub fn from_prior(prior: &GaussianPrior) -> Self {
        Self {
            precision: prior.precision(),
            information: prior.mean() / prior.variance(),
            count: 0,
        }
    }

    /// Absorbs one measurement of the given precision.
    pub fn update(&self, measurement: f64, precision: f64) -> Result<Self, CoreError> {
        if !(precision.is_finite() && precision > 0.0) {
            return Err(CoreError::invalid(
                "precision",
                "must be finite and > 0",
            ));
        }
        if !measurement.is_finite() {
            return Err(CoreError::invalid("measurement", "must be finite"));
        }
        Ok(Self {
            precision: self.precision + precision,
            information: self.information + precision * measurement,
            count: self.count + 1,
        })
    }

    pub fn mean(&self) -> f64 {
        self.information / self.precision
    }

    pub fn variance(&self) -> f64 {
        1.0 / self.precision
    }

    pub fn summary(&self) -> (f64, f64) {
        (self.mean(), self.variance())
    }

    /// Half-width of the centered credible interval spanning `alpha`
    /// posterior standard deviations on each side.
    pub fn ci_halfwidth(&self, alpha: f64) -> f64 {
        debug_assert!(alpha > 0.0);
        alpha * self.variance().sqrt()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn precision(&self) -> f64 {
        self.precision
    }

    pub fn information(&self) -> f64 {
        self.information
    }
}

/// Accuracy target for the stopping rule: `alpha` posterior standard
/// deviations must fit within a half-width of `epsilon`, which is equivalent
/// to the absorbed precisions reaching `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingConfig {
    alpha: f64,
    epsilon: f64,
    threshold: f64,
}

impl StoppingConfig {
    /// Derives the threshold from the accuracy targets and prior.
    pub fn new(alpha: f64, epsilon: f64, prior: &GaussianPrior) -> Result<Self, CoreError> {
        let threshold = crate::model::stopping_threshold(alpha, epsilon, prior.variance())?;
        Ok(Self {
            alpha,
            epsilon,
            threshold,
        })
    }

    /// Uses a precomputed threshold. The caller is responsible for keeping it
    /// consistent with `(alpha, epsilon)` and the prior it will be used with.
    pub fn from_threshold(alpha: f64, epsilon: f64, threshold: f64) -> Result<Self, CoreError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(CoreError::invalid("alpha", "must be finite and > 0"));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(CoreError::invalid("epsilon", "must be finite and > 0"));
        }
        if !threshold.is_finite() {
            return Err(CoreError::invalid("threshold", "must be finite"));
        }
        Ok(Self {
            alpha,
            epsilon,
            threshold,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// True once the absorbed precision mass reaches the threshold, i.e. once the
/// credible-interval half-width is within target. Ties stop (inclusive
/// comparison), and a nonpositive threshold stops at zero measurements.
pub fn should_stop(
    state: &PosteriorState,
    config: &StoppingConfig,
    prior: &GaussianPrior,
) -> bool {
    state.precision() - prior.precision() >= config.threshold()
}

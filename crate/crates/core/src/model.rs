//! Domain types, parameter validation, and random sampling of sensor
//! populations.
//!
//! Every type here is an immutable value after construction, so instances can
//! be shared and sent across threads freely. Sampling takes an explicit
//! random stream, keyed by `(seed, stream index)`, so results are identical
//! regardless of execution order or parallelism.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::CoreError;

/// Gaussian prior belief on the unknown parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPrior {
    mean: f64,
    variance: f64,
}

impl GaussianPrior {
    pub fn new(mean: f64, variance: f64) -> Result<Self, CoreError> {
        if !mean.is_finite() {
            return Err(CoreError::invalid("mean", "must be finite"));
        }
        if !(variance.is_finite() && variance > 0.0) {
            return Err(CoreError::invalid(
                "variance",
                "must be finite and strictly positive",
            ));
        }
        Ok(Self { mean, variance })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Inverse variance of the prior.
    pub fn precision(&self) -> f64 {
        1.0 / self.variance
    }
}

/// Support of the per-sensor precision distribution, `Uniform(lower, upper)`.
///
/// `lower = 0` is admitted for analytic-formula inputs; sampling additionally
/// requires `lower > 0` (a zero precision would mean infinite noise variance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionBand {
    lower: f64,
    upper: f64,
}

impl PrecisionBand {
    pub fn new(lower: f64, upper: f64) -> Result<Self, CoreError> {
        if !(lower.is_finite() && lower >= 0.0) {
            return Err(CoreError::invalid("lower", "must be finite and >= 0"));
        }
        if !(upper.is_finite() && upper > lower) {
            return Err(CoreError::invalid(
                "upper",
                format!("must be finite and > lower ({lower})"),
            ));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, precision: f64) -> bool {
        (self.lower..=self.upper).contains(&precision)
    }
}

/// Population and threshold parameters shared by the analytic and simulation
/// paths. The stopping threshold is computed once (see
/// [`stopping_threshold`]) and cached here so the two paths cannot drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemInstance {
    sensor_count: usize,
    band: PrecisionBand,
    threshold: f64,
}

impl ProblemInstance {
    pub fn new(
        sensor_count: usize,
        band: PrecisionBand,
        threshold: f64,
    ) -> Result<Self, CoreError> {
        if sensor_count < 1 {
            return Err(CoreError::invalid("sensor_count", "must be >= 1"));
        }
        if !threshold.is_finite() {
            return Err(CoreError::invalid("threshold", "must be finite"));
        }
        Ok(Self {
            sensor_count,
            band,
            threshold,
        })
    }

    /// Builds an instance from accuracy targets, deriving the threshold.
    pub fn from_accuracy(
        sensor_count: usize,
        band: PrecisionBand,
        alpha: f64,
        epsilon: f64,
        prior: &GaussianPrior,
    ) -> Result<Self, CoreError> {
        let threshold = stopping_threshold(alpha, epsilon, prior.variance())?;
        Self::new(sensor_count, band, threshold)
    }

    pub fn sensor_count(&self) -> usize {
        self.sensor_count
    }

    pub fn band(&self) -> PrecisionBand {
        self.band
    }

    /// Accumulated-precision level at which collection may stop.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// One sensor's draw: its precision (inverse noise variance) and measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensor {
    pub index: usize,
    pub precision: f64,
    pub measurement: f64,
}

/// One realization of the network: the true parameter and all sensor draws.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorPopulation {
    theta_true: f64,
    sensors: Vec<Sensor>,
}

impl SensorPopulation {
    /// Assembles a population from parts, enforcing the structural
    /// invariants: positive precisions and indices covering `0..len`.
    pub fn from_parts(theta_true: f64, sensors: Vec<Sensor>) -> Result<Self, CoreError> {
        if sensors.is_empty() {
            return Err(CoreError::invalid("sensors", "must be nonempty"));
        }
        for (i, s) in sensors.iter().enumerate() {
            if s.index != i {
                return Err(CoreError::invalid(
                    "sensors",
                    format!("index {} at position {i} (must cover 0..len in order)", s.index),
                ));
            }
            if !(s.precision.is_finite() && s.precision > 0.0) {
                return Err(CoreError::invalid(
                    "sensors",
                    format!("precision of sensor {i} must be finite and > 0"),
                ));
            }
        }
        Ok(Self {
            theta_true,
            sensors,
        })
    }

    pub fn theta_true(&self) -> f64 {
        self.theta_true
    }

    pub fn sensors(&self) -> &[Sensor] {
        &self.sensors
    }

    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }
}

/// Threshold on accumulated precision equivalent to requiring the posterior
/// confidence interval of multiplier `alpha` to have half-width at most
/// `epsilon`: `(alpha/epsilon)^2 - 1/prior_variance`.
///
/// May be negative when the prior alone is precise enough; callers treat a
/// nonpositive threshold as "stop immediately with zero transmissions".
pub fn stopping_threshold(
    alpha: f64,
    epsilon: f64,
    prior_variance: f64,
) -> Result<f64, CoreError> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(CoreError::invalid("alpha", "must be finite and > 0"));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(CoreError::invalid("epsilon", "must be finite and > 0"));
    }
    if !(prior_variance.is_finite() && prior_variance > 0.0) {
        return Err(CoreError::invalid(
            "prior_variance",
            "must be finite and > 0",
        ));
    }
    Ok((alpha / epsilon).powi(2) - 1.0 / prior_variance)
}

/// Counter-based random stream for one trial (or any other indexed unit of
/// work). ChaCha keyed by the global seed with the stream id as its nonce:
/// draws depend only on `(seed, stream, position)`, never on scheduling.
pub type TrialRng = ChaCha8Rng;

pub fn trial_rng(seed: u64, stream: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an independent sub-seed, e.g. one per sweep point. SplitMix64.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draws one population: `theta ~ Normal(mean, variance)`, per-sensor
/// precisions `z_i ~ Uniform(lower, upper)`, measurements `y_i = theta + w_i`
/// with `w_i ~ Normal(0, 1/z_i)`. Deterministic given the stream state.
pub fn sample_population<R: Rng>(
    prior: &GaussianPrior,
    band: &PrecisionBand,
    sensor_count: usize,
    rng: &mut R,
) -> Result<SensorPopulation, CoreError> {
    if band.lower() <= 0.0 {
        return Err(CoreError::invalid(
            "band.lower",
            "sampling requires a strictly positive lower precision bound",
        ));
    }
    if sensor_count < 1 {
        return Err(CoreError::invalid("sensor_count", "must be >= 1"));
    }

    let precision_dist = Uniform::new(band.lower(), band.upper())
        .map_err(|e| CoreError::invalid("band", e.to_string()))?;
    let theta_dist = Normal::new(prior.mean(), prior.variance().sqrt())
        .map_err(|e| CoreError::invalid("prior", e.to_string()))?;
    let unit_normal = Normal::new(0.0, 1.0).expect("unit normal is valid");

    let theta_true = theta_dist.sample(rng);
    let sensors = (0..sensor_count)
        .map(|index| {
            let precision = precision_dist.sample(rng);
            let noise = unit_normal.sample(rng) / precision.sqrt();
            Sensor {
                index,
                precision,
                measurement: theta_true + noise,
            }
        })
        .collect();

    Ok(SensorPopulation {
        theta_true,
        sensors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_matches_hand_values() {
        let g = stopping_threshold(1.96, 0.4, 1.0).unwrap();
        assert!((g - 23.01).abs() < 1e-12);
        assert_eq!(stopping_threshold(2.0, 2.0, 1.0).unwrap(), 0.0);
        let g = stopping_threshold(1.96, 0.4, 4.0).unwrap();
        assert!((g - 23.76).abs() < 1e-12);
    }

    #[test]
    fn threshold_rejects_nonpositive_arguments() {
        assert!(stopping_threshold(0.0, 0.4, 1.0).is_err());
        assert!(stopping_threshold(1.96, 0.0, 1.0).is_err());
        assert!(stopping_threshold(1.96, 0.4, 0.0).is_err());
        assert!(stopping_threshold(f64::NAN, 0.4, 1.0).is_err());
    }

    #[test]
    fn band_and_prior_validation() {
        assert!(PrecisionBand::new(-0.1, 1.0).is_err());
        assert!(PrecisionBand::new(0.5, 0.5).is_err());
        assert!(PrecisionBand::new(0.5, 0.3).is_err());
        assert!(PrecisionBand::new(0.0, 1.0).is_ok());
        assert!(GaussianPrior::new(0.0, 0.0).is_err());
        assert!(GaussianPrior::new(0.0, -1.0).is_err());
        assert!(ProblemInstance::new(0, PrecisionBand::new(0.2, 1.0).unwrap(), 1.0).is_err());
    }

    #[test]
    fn instance_caches_derived_threshold() {
        let band = PrecisionBand::new(0.2, 1.0).unwrap();
        let prior = GaussianPrior::new(2.0, 1.0).unwrap();
        let inst = ProblemInstance::from_accuracy(50, band, 1.96, 0.4, &prior).unwrap();
        assert!((inst.threshold() - 23.01).abs() < 1e-12);
        assert_eq!(inst.sensor_count(), 50);
    }

    #[test]
    fn single_sensor_population() {
        let prior = GaussianPrior::new(2.0, 1.0).unwrap();
        let band = PrecisionBand::new(0.2, 1.0).unwrap();
        let mut rng = trial_rng(7, 0);
        let pop = sample_population(&prior, &band, 1, &mut rng).unwrap();
        assert_eq!(pop.len(), 1);
        assert_eq!(pop.sensors()[0].index, 0);
    }

    #[test]
    fn zero_lower_bound_rejected_for_sampling() {
        let prior = GaussianPrior::new(2.0, 1.0).unwrap();
        let band = PrecisionBand::new(0.0, 1.0).unwrap();
        let mut rng = trial_rng(7, 0);
        assert!(sample_population(&prior, &band, 5, &mut rng).is_err());
    }

    #[test]
    fn degenerate_prior_variance_pins_theta() {
        let prior = GaussianPrior::new(2.0, 1e-12).unwrap();
        let band = PrecisionBand::new(0.2, 1.0).unwrap();
        for stream in 0..32 {
            let mut rng = trial_rng(11, stream);
            let pop = sample_population(&prior, &band, 3, &mut rng).unwrap();
            assert!((pop.theta_true() - 2.0).abs() < 1e-4);
        }
    }

    #[test]
    fn identical_streams_are_bitwise_identical() {
        let prior = GaussianPrior::new(2.0, 1.0).unwrap();
        let band = PrecisionBand::new(0.2, 1.0).unwrap();
        let a = sample_population(&prior, &band, 20, &mut trial_rng(42, 3)).unwrap();
        let b = sample_population(&prior, &band, 20, &mut trial_rng(42, 3)).unwrap();
        assert_eq!(a, b);
        let c = sample_population(&prior, &band, 20, &mut trial_rng(43, 3)).unwrap();
        assert_ne!(a, c);
        let d = sample_population(&prior, &band, 20, &mut trial_rng(42, 4)).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn population_from_parts_validates() {
        let ok = SensorPopulation::from_parts(
            0.0,
            vec![
                Sensor { index: 0, precision: 1.0, measurement: 0.1 },
                Sensor { index: 1, precision: 0.5, measurement: -0.2 },
            ],
        );
        assert!(ok.is_ok());
        let bad_index = SensorPopulation::from_parts(
            0.0,
            vec![Sensor { index: 1, precision: 1.0, measurement: 0.0 }],
        );
        assert!(bad_index.is_err());
        let bad_precision = SensorPopulation::from_parts(
            0.0,
            vec![Sensor { index: 0, precision: 0.0, measurement: 0.0 }],
        );
        assert!(bad_precision.is_err());
    }

    #[test]
    fn derive_seed_spreads_indices() {
        let s0 = derive_seed(42, 0);
        let s1 = derive_seed(42, 1);
        assert_ne!(s0, s1);
        assert_ne!(derive_seed(42, 0), derive_seed(43, 0));
        // stable across calls
        assert_eq!(s0, derive_seed(42, 0));
    }
}

//! Extended-precision building blocks for the analytic formulas.
//!
//! The alternating binomial sums in this crate cancel catastrophically at the
//! scales the library is validated for (N = 50), so plain f64 accumulation is
//! not an option. Three tools cover the range of severity:
//!
//! * [`CompensatedSum`] — Neumaier running sum for ordinary f64 reductions
//!   (Monte Carlo aggregates, sums of per-k probabilities).
//! * [`DoubleDouble`] — ~106-bit float pairs for the Irwin-Hall series, whose
//!   worst cancellation amplitude (~7e19 at k = 50) fits comfortably.
//! * [`Dyadic`] — exact big-integer multiples of powers of two for the ordered
//!   upper-bound branch sums, whose amplitude (~1e25) exceeds what any fixed
//!   extended precision delivers at the required tolerance.

mod dd;
mod dyadic;
mod sum;

pub use dd::DoubleDouble;
pub use dyadic::{dyadic_ratio_to_f64, Dyadic};
pub use sum::CompensatedSum;

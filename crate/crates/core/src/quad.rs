//! Globally adaptive Gauss-Kronrod quadrature (7-15 pair).
//!
//! The segment with the largest error estimate is bisected until the summed
//! error meets `max(abs_tol, rel_tol * |integral|)` or the panel budget runs
//! out. Per-panel errors use the QUADPACK rescaling, which guards against
//! both over-optimistic raw `|K15 - G7|` differences and rounding floors.

use crate::error::CoreError;
use crate::numeric::CompensatedSum;

/// Converged integral with its error bound.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub panels: usize,
}

#[allow(clippy::excessive_precision)] // published rule constants, kept verbatim
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    lower: f64,
    upper: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, lower: f64, upper: f64) -> Panel {
    let center = 0.5 * (lower + upper);
    let half = 0.5 * (upper - lower);
    let f_center = f(center);

    let mut kronrod = f_center * WGK[7];
    let mut gauss = f_center * WG[3];
    let mut res_abs = kronrod.abs();
    let mut values = [0.0f64; 15];
    values[7] = f_center;

    for i in 0..7 {
        let offset = half * XGK[i];
        let lo = f(center - offset);
        let hi = f(center + offset);
        values[i] = lo;
        values[14 - i] = hi;
        let pair = lo + hi;
        kronrod += WGK[i] * pair;
        res_abs += WGK[i] * (lo.abs() + hi.abs());
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }

    let mean = kronrod * 0.5;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for i in 0..7 {
        res_asc += WGK[i] * ((values[i] - mean).abs() + (values[14 - i] - mean).abs());
    }

    let raw_err = ((kronrod - gauss) * half).abs();
    let value = kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();

    let mut error = raw_err;
    if res_asc != 0.0 && error != 0.0 {
        let scale = (200.0 * error / res_asc).powf(1.5);
        error = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }

    Panel {
        lower,
        upper,
        value,
        error,
    }
}

/// Integrates `f` over `[lower, upper]`.
pub fn adaptive_quadrature<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    upper: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<QuadratureResult, CoreError> {
    adaptive_quadrature_split(f, &[lower, upper], abs_tol, rel_tol, max_panels)
}

/// Integrates `f` over `[breakpoints[0], breakpoints[last]]`, seeding one
/// panel per consecutive pair. Seeding at known kinks (e.g. where a clamped
/// integrand reaches zero) keeps each panel smooth.
pub fn adaptive_quadrature_split<F: Fn(f64) -> f64>(
    f: F,
    breakpoints: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<QuadratureResult, CoreError> {
    assert!(breakpoints.len() >= 2, "need at least one interval");
    assert!(
        breakpoints.windows(2).all(|w| w[0] <= w[1]),
        "breakpoints must be nondecreasing"
    );

    let mut panels: Vec<Panel> = breakpoints
        .windows(2)
        .filter(|w| w[0] < w[1])
        .map(|w| gk15(&f, w[0], w[1]))
        .collect();
    if panels.is_empty() {
        return Ok(QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            panels: 0,
        });
    }

    loop {
        let mut total = CompensatedSum::new();
        let mut err = CompensatedSum::new();
        for p in &panels {
            total.add(p.value);
            err.add(p.error);
        }
        let total_value = total.value();
        let total_error = err.value();
        let tolerance = abs_tol.max(rel_tol * total_value.abs());

        if !total_value.is_finite() {
            return Err(CoreError::invalid(
                "integrand",
                "integrand produced a non-finite value",
            ));
        }
        if total_error <= tolerance {
            return Ok(QuadratureResult {
                value: total_value,
                error_estimate: total_error,
                panels: panels.len(),
            });
        }
        if panels.len() >= max_panels {
            return Err(CoreError::QuadratureDidNotConverge {
                value: total_value,
                achieved: total_error,
                requested: tolerance,
            });
        }

        let worst = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, _)| i)
            .expect("panel list is nonempty");
        let Panel { lower, upper, .. } = panels[worst];
        let mid = 0.5 * (lower + upper);
        if mid <= lower || mid >= upper {
            // Interval no longer splittable in f64; accept what we have.
            let p = panels[worst];
            panels[worst] = Panel { error: 0.0, ..p };
            continue;
        }
        panels[worst] = gk15(&f, lower, mid);
        panels.push(gk15(&f, mid, upper));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
        adaptive_quadrature(f, lo, hi, 1e-13, 1e-13, 2000)
            .expect("convergence")
            .value
    }

    #[test]
    fn polynomial_is_exact() {
        assert!((quad(|x| x * x, 0.0, 1.0) - 1.0 / 3.0).abs() < 1e-14);
        assert!((quad(|x| x.powi(49), 0.0, 1.0) - 0.02).abs() < 1e-14);
    }

    #[test]
    fn sine_over_half_period() {
        assert!((quad(f64::sin, 0.0, std::f64::consts::PI) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sharply_peaked_integrand() {
        // Narrow Gaussian bump: forces many subdivisions.
        let f = |x: f64| (-(x - 0.3).powi(2) / 2e-6).exp();
        let exact = (2e-6 * std::f64::consts::PI).sqrt();
        let got = quad(f, 0.0, 1.0);
        assert!((got - exact).abs() < 1e-12 * exact.max(1.0));
    }

    #[test]
    fn empty_interval_is_zero() {
        let r = adaptive_quadrature(|x| x, 2.0, 2.0, 1e-12, 1e-12, 10).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn split_points_match_plain_run() {
        let f = |x: f64| x.exp();
        let whole = quad(f, 0.0, 2.0);
        let split = adaptive_quadrature_split(f, &[0.0, 0.7, 2.0], 1e-13, 1e-13, 2000)
            .unwrap()
            .value;
        assert!((whole - split).abs() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_reports_achieved_error() {
        let err = adaptive_quadrature(|x: f64| x.sqrt().recip(), 1e-12, 1.0, 1e-14, 0.0, 4)
            .unwrap_err();
        match err {
            CoreError::QuadratureDidNotConverge {
                value, achieved, ..
            } => {
                assert!(value.is_finite());
                assert!(achieved > 1e-14);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}

//! Threshold schedule estimation from the noisy observation alone.
//!
//! A coarse split `Y = S + E` comes from an adaptive median filter (the
//! center-weighted one for random-valued noise). The statistics of `𝒟(S)`
//! and `E` then fix the two exponential threshold schedules.
//!
//! Three rules are available, see [`AlphaRule`]. The default one starts
//! both schedules at the peak coarse-noise magnitude `max|E|`; the signal
//! threshold decays to the mean sorted gap of `𝒟(S)` and the noise threshold
//! to a fixed fraction of its start. The two gap rules start the signal
//! schedule at `max|𝒟(S)|`, which on images is the DC coefficient.

use log::warn;

use crate::baselines::{acwmf, amf, AMF_DEFAULT_MAX_WINDOW};
use crate::error::{check_same_shape, IdtError, Result};
use crate::noise::NoiseKind;
use crate::scalar::Scalar;
use crate::solver::{SolverConfig, DEFAULT_MAX_ITERS};
use crate::transforms::{max_abs, DctPlan, SignalMatrix};

/// Estimated density at or above which the wider smoothing kernel is used.
pub const SIGMA_DENSITY_CUTOVER: f64 = 0.3;
/// Smoothing widths of the gap rules.
pub const SIGMA_LOW_DENSITY: f64 = 0.4;
pub const SIGMA_HIGH_DENSITY: f64 = 0.55;
/// Smoothing widths of the default rule. Narrower kernels leave an
/// undetected impulse dominating its own smoothed estimate, so it stays
/// below the noise threshold for good.
pub const CALIBRATED_SIGMA_LOW_DENSITY: f64 = 0.5;
pub const CALIBRATED_SIGMA_HIGH_DENSITY: f64 = 0.65;
/// Entries of `E` above this magnitude count towards the density estimate.
pub const DENSITY_EPS: f64 = 1e-9;
/// Lower bound on the gap, relative to the starting threshold.
pub const GAP_FLOOR_REL: f64 = 1e-6;
/// Final noise threshold of the default rule, relative to `max|E|`.
pub const NOISE_FLOOR_REL: f64 = 0.05;

/// How the coarse statistics become `(α₁, β₁, α₂, β₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaRule {
    /// `β₁ = β₂ = max|E|`; `α₁ = ln(β₁ / g₁) / K`, `α₂ = ln(1 / 0.05) / K`;
    /// σ of 0.5 or 0.65.
    #[default]
    Calibrated,
    /// `β₁ = max|𝒟(S)|`, `β₂ = max|E|`, `αᵢ = ln(βᵢ / max(gᵢ, 1e-6·βᵢ)) / K`;
    /// σ of 0.4 or 0.55.
    LogRatio,
    /// Peaks and σ as in `LogRatio`, `αᵢ = gᵢ` taken as is.
    Literal,
}

/// Estimated configuration plus the statistics behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamEstimate<T: Scalar> {
    pub config: SolverConfig<T>,
    /// Fraction of entries where the coarse noise is nonzero.
    pub density: f64,
    /// `max|𝒟(S)|`.
    pub peak_signal: T,
    /// `max|E|`.
    pub peak_noise: T,
    pub gap_signal: T,
    pub gap_noise: T,
    /// True when no schedule could be derived and defaults were returned.
    pub degenerate: bool,
}

/// Mean consecutive difference of the sorted magnitudes, i.e. the
/// magnitude range over `count − 1`. Zero for fewer than two entries.
pub fn mean_sorted_gap<T: Scalar>(m: &SignalMatrix<T>) -> T {
    if m.len() < 2 {
        return T::zero();
    }
    let (lo, hi) = m.iter().fold((T::infinity(), T::zero()), |(lo, hi), v| {
        (lo.min(v.abs()), hi.max(v.abs()))
    });
    (hi - lo) / T::from_usize_lossy(m.len() - 1)
}

fn log_ratio_rate<T: Scalar>(beta: T, floor: T, iters: usize) -> T {
    if beta <= T::zero() {
        return T::zero();
    }
    let floor = floor.max(T::lit(GAP_FLOOR_REL) * beta);
    ((beta / floor).ln() / T::from_usize_lossy(iters)).max(T::zero())
}

/// Estimated configuration for `iters` iterations with the default rule.
pub fn estimate_params<T: Scalar>(
    y: &SignalMatrix<T>,
    kind: NoiseKind,
    plan: &DctPlan<T>,
    iters: usize,
) -> Result<SolverConfig<T>> {
    estimate_params_with(y, kind, plan, iters, AlphaRule::default()).map(|e| e.config)
}

/// Full estimate with a selectable rule. The returned configuration has
/// clipping to `[0, 255]` and smoothing enabled; `iters == 0` means the
/// default budget.
pub fn estimate_params_with<T: Scalar>(
    y: &SignalMatrix<T>,
    kind: NoiseKind,
    plan: &DctPlan<T>,
    iters: usize,
    rule: AlphaRule,
) -> Result<ParamEstimate<T>> {
    if y.is_empty() {
        return Err(IdtError::Empty("estimate_params"));
    }
    check_same_shape(plan.shape(), y.dim())?;
    let iters = if iters == 0 { DEFAULT_MAX_ITERS } else { iters };

    if y.iter().all(|v| *v == T::zero()) {
        warn!("estimate_params: all-zero observation, returning default parameters");
        let mut config = SolverConfig::image(
            T::zero(),
            T::zero(),
            T::zero(),
            T::max_value(),
            T::lit(CALIBRATED_SIGMA_LOW_DENSITY),
        );
        config.max_iters = iters;
        return Ok(ParamEstimate {
            config,
            density: 0.0,
            peak_signal: T::zero(),
            peak_noise: T::zero(),
            gap_signal: T::zero(),
            gap_noise: T::zero(),
            degenerate: true,
        });
    }

    let coarse = match kind {
        NoiseKind::Rvin => acwmf(y),
        NoiseKind::Spn | NoiseKind::Mixed | NoiseKind::Missing => amf(y, AMF_DEFAULT_MAX_WINDOW)?,
    };
    let residual = y - &coarse;
    let coeffs = plan.forward(&coarse)?;

    let peak_signal = max_abs(&coeffs);
    let peak_noise = max_abs(&residual);
    let gap_signal = mean_sorted_gap(&coeffs);
    let gap_noise = mean_sorted_gap(&residual);

    let eps = T::lit(DENSITY_EPS);
    let density = residual.iter().filter(|v| v.abs() > eps).count() as f64 / y.len() as f64;
    let (low, high) = match rule {
        AlphaRule::Calibrated => (CALIBRATED_SIGMA_LOW_DENSITY, CALIBRATED_SIGMA_HIGH_DENSITY),
        AlphaRule::LogRatio | AlphaRule::Literal => (SIGMA_LOW_DENSITY, SIGMA_HIGH_DENSITY),
    };
    let sigma = T::lit(if density < SIGMA_DENSITY_CUTOVER {
        low
    } else {
        high
    });

    let (alpha1, beta1, alpha2, beta2) = match rule {
        AlphaRule::Calibrated => (
            log_ratio_rate(peak_noise, gap_signal, iters),
            peak_noise,
            log_ratio_rate(T::one(), T::lit(NOISE_FLOOR_REL), iters),
            peak_noise,
        ),
        AlphaRule::LogRatio => (
            log_ratio_rate(peak_signal, gap_signal, iters),
            peak_signal,
            log_ratio_rate(peak_noise, gap_noise, iters),
            peak_noise,
        ),
        AlphaRule::Literal => (gap_signal, peak_signal, gap_noise, peak_noise),
    };

    // Nothing looked impulsive: keep the noise estimate empty instead of
    // thresholding at zero, which would flag every entry.
    let degenerate = peak_noise <= T::lit(1e-12) * max_abs(y);
    let beta2 = if degenerate { T::max_value() } else { beta2 };
    let alpha2 = if degenerate { T::zero() } else { alpha2 };
    if degenerate {
        warn!("estimate_params: coarse filter found no impulses, noise estimate disabled");
    }

    let mut config = SolverConfig::image(alpha1, beta1, alpha2, beta2, sigma);
    config.max_iters = iters;
    Ok(ParamEstimate {
        config,
        density,
        peak_signal,
        peak_noise,
        gap_signal,
        gap_noise,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{corrupt, smooth_test_image, NoiseSpec};
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};

    #[test]
    fn gap_is_range_over_count() {
        let m = array![[3.0, -1.0], [0.0, 6.0]];
        assert_abs_diff_eq!(mean_sorted_gap(&m), 2.0);
        assert_eq!(mean_sorted_gap(&array![[5.0]]), 0.0);
    }

    #[test]
    fn beta1_is_peak_of_filtered_spectrum() {
        let x = smooth_test_image::<f64>(32, 32, 2);
        let y = corrupt(&x, &NoiseSpec::spn(0.2, 1)).unwrap().y;
        let plan = DctPlan::new(32, 32).unwrap();
        let e = estimate_params_with(&y, NoiseKind::Spn, &plan, 60, AlphaRule::LogRatio).unwrap();
        let expected = max_abs(&plan.forward(&amf(&y, 19).unwrap()).unwrap());
        assert_eq!(e.config.beta1, expected);
        assert_eq!(e.peak_signal, expected);
        let cfg = estimate_params(&y, NoiseKind::Spn, &plan, 60).unwrap();
        assert_eq!(cfg.beta1, e.peak_noise);
        assert_eq!(cfg.beta2, e.peak_noise);
        assert!(cfg.alpha1 >= 0.0 && cfg.alpha2 >= 0.0);
        assert!(cfg.signal_threshold(60) <= cfg.beta1);
        assert_eq!(cfg.max_iters, 60);
    }

    #[test]
    fn sigma_follows_density() {
        let x = smooth_test_image::<f64>(48, 48, 4);
        let plan = DctPlan::new(48, 48).unwrap();
        let low = corrupt(&x, &NoiseSpec::spn(0.1, 3)).unwrap().y;
        let high = corrupt(&x, &NoiseSpec::spn(0.5, 3)).unwrap().y;
        let e_low =
            estimate_params_with(&low, NoiseKind::Spn, &plan, 60, AlphaRule::LogRatio).unwrap();
        let e_high =
            estimate_params_with(&high, NoiseKind::Spn, &plan, 60, AlphaRule::LogRatio).unwrap();
        assert_eq!(e_low.config.sigma, SIGMA_LOW_DENSITY);
        assert_eq!(e_high.config.sigma, SIGMA_HIGH_DENSITY);
        assert!(e_high.density > e_low.density);
        assert_eq!(
            estimate_params(&low, NoiseKind::Spn, &plan, 60)
                .unwrap()
                .sigma,
            CALIBRATED_SIGMA_LOW_DENSITY
        );
        assert_eq!(
            estimate_params(&high, NoiseKind::Spn, &plan, 60)
                .unwrap()
                .sigma,
            CALIBRATED_SIGMA_HIGH_DENSITY
        );
    }

    #[test]
    fn literal_rule_uses_gap() {
        let x = smooth_test_image::<f64>(16, 16, 1);
        let y = corrupt(&x, &NoiseSpec::rvin(0.2, 8)).unwrap().y;
        let plan = DctPlan::new(16, 16).unwrap();
        let e = estimate_params_with(&y, NoiseKind::Rvin, &plan, 60, AlphaRule::Literal).unwrap();
        assert_eq!(e.config.alpha1, e.gap_signal);
        assert_eq!(e.config.alpha2, e.gap_noise);
    }

    #[test]
    fn zero_input_gives_defaults() {
        let y = Array2::<f64>::zeros((8, 8));
        let plan = DctPlan::new(8, 8).unwrap();
        let e = estimate_params_with(&y, NoiseKind::Spn, &plan, 60, AlphaRule::LogRatio).unwrap();
        assert!(e.degenerate);
        assert_eq!(e.config.beta1, 0.0);
        assert_eq!(e.config.noise_threshold(59), f64::MAX);
        assert!(estimate_params(&Array2::<f64>::zeros((0, 0)), NoiseKind::Spn, &plan, 60).is_err());
    }
}

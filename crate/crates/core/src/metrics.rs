//! Reconstruction quality metrics.
//!
//! PSNR and SNR return `+∞` when the estimate matches the reference exactly.

use ndarray::{Array2, Zip};

use crate::error::{check_same_shape, IdtError, Result};
use crate::scalar::Scalar;
use crate::transforms::SignalMatrix;

/// Success threshold on reconstruction SNR, in dB.
pub const SUCCESS_SNR_DB: f64 = 60.0;

pub fn frobenius_norm<T: Scalar>(m: &SignalMatrix<T>) -> T {
    m.iter().map(|v| *v * *v).sum::<T>().sqrt()
}

/// `‖a − b‖_F`. Shapes are assumed equal.
pub fn frobenius_distance<T: Scalar>(a: &SignalMatrix<T>, b: &SignalMatrix<T>) -> T {
    Zip::from(a)
        .and(b)
        .fold(T::zero(), |acc, &x, &y| acc + (x - y) * (x - y))
        .sqrt()
}

/// Mean squared entry difference.
pub fn mse<T: Scalar>(x: &SignalMatrix<T>, reference: &SignalMatrix<T>) -> Result<T> {
    check_same_shape(reference.dim(), x.dim())?;
    if x.is_empty() {
        return Err(IdtError::Empty("mse"));
    }
    let sq = frobenius_distance(x, reference);
    Ok(sq * sq / T::from_usize_lossy(x.len()))
}

/// `10·log10(peak² / MSE)` in dB.
pub fn psnr<T: Scalar>(x: &SignalMatrix<T>, reference: &SignalMatrix<T>, peak: T) -> Result<T> {
    let err = mse(x, reference)?;
    if err == T::zero() {
        return Ok(T::infinity());
    }
    Ok(T::lit(10.0) * (peak * peak / err).log10())
}

/// PSNR after rounding both inputs to 8-bit levels, for comparisons against
/// numbers measured on stored images.
pub fn psnr_quantized<T: Scalar>(x: &SignalMatrix<T>, reference: &SignalMatrix<T>) -> Result<T> {
    psnr(&quantize_8bit(x), &quantize_8bit(reference), T::lit(255.0))
}

/// Round half to even and clamp to `[0, 255]`.
pub fn quantize_8bit<T: Scalar>(m: &SignalMatrix<T>) -> SignalMatrix<T> {
    m.mapv(|v| T::lit(v.to_f64_lossy().round_ties_even().clamp(0.0, 255.0)))
}

/// `10·log10(‖ref‖² / ‖x − ref‖²)` in dB.
pub fn snr<T: Scalar>(x: &SignalMatrix<T>, reference: &SignalMatrix<T>) -> Result<T> {
    check_same_shape(reference.dim(), x.dim())?;
    let signal = frobenius_norm(reference);
    if signal == T::zero() {
        return Err(IdtError::InvalidArgument(
            "snr: reference is all zero".into(),
        ));
    }
    let err = frobenius_distance(x, reference);
    if err == T::zero() {
        return Ok(T::infinity());
    }
    Ok(T::lit(20.0) * (signal / err).log10())
}

/// Fraction of trials whose SNR is strictly above `threshold_db`.
pub fn success_rate(snrs: &[f64], threshold_db: f64) -> Result<f64> {
    if snrs.is_empty() {
        return Err(IdtError::Empty("success_rate"));
    }
    let hits = snrs.iter().filter(|s| **s > threshold_db).count();
    Ok(hits as f64 / snrs.len() as f64)
}

/// SSIM settings. Defaults are the usual 11×11 Gaussian window with σ = 1.5,
/// `K1 = 0.01`, `K2 = 0.03` and an 8-bit dynamic range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
        }
    }
}

/// Mean SSIM over all fully-contained windows, default parameters.
pub fn ssim<T: Scalar>(x: &SignalMatrix<T>, reference: &SignalMatrix<T>) -> Result<T> {
    ssim_with(x, reference, &SsimParams::default())
}

pub fn ssim_with<T: Scalar>(
    x: &SignalMatrix<T>,
    reference: &SignalMatrix<T>,
    params: &SsimParams,
) -> Result<T> {
    check_same_shape(reference.dim(), x.dim())?;
    let w = params.window;
    let (rows, cols) = x.dim();
    if w == 0 || rows < w || cols < w {
        return Err(IdtError::InvalidDimension(format!(
            "ssim needs at least {w}×{w} input, got {rows}×{cols}"
        )));
    }
    let taps = ssim_taps::<T>(w, params.sigma);
    let c1 = T::lit((params.k1 * params.dynamic_range).powi(2));
    let c2 = T::lit((params.k2 * params.dynamic_range).powi(2));

    let mu_x = valid_filter(x, &taps);
    let mu_y = valid_filter(reference, &taps);
    let xx = valid_filter(&(x * x), &taps);
    let yy = valid_filter(&(reference * reference), &taps);
    let xy = valid_filter(&(x * reference), &taps);

    let two = T::lit(2.0);
    let mut total = T::zero();
    Zip::from(&mu_x)
        .and(&mu_y)
        .and(&xx)
        .and(&yy)
        .and(&xy)
        .for_each(|&mx, &my, &sxx, &syy, &sxy| {
            let var_x = sxx - mx * mx;
            let var_y = syy - my * my;
            let cov = sxy - mx * my;
            let num = (two * mx * my + c1) * (two * cov + c2);
            let den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
            total += num / den;
        });
    Ok(total / T::from_usize_lossy(mu_x.len()))
}

fn ssim_taps<T: Scalar>(window: usize, sigma: f64) -> Vec<T> {
    let center = (window as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..window)
        .map(|i| {
            let t = i as f64 - center;
            (-(t * t) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| T::lit(v / total)).collect()
}

/// Separable correlation keeping only fully-overlapping positions.
fn valid_filter<T: Scalar>(m: &SignalMatrix<T>, taps: &[T]) -> Array2<T> {
    let w = taps.len();
    let (rows, cols) = m.dim();
    let out_cols = cols - w + 1;
    let horizontal = Array2::from_shape_fn((rows, out_cols), |(i, j)| {
        taps.iter()
            .enumerate()
            .fold(T::zero(), |acc, (t, k)| acc + *k * m[[i, j + t]])
    });
    let out_rows = rows - w + 1;
    Array2::from_shape_fn((out_rows, out_cols), |(i, j)| {
        taps.iter()
            .enumerate()
            .fold(T::zero(), |acc, (t, k)| acc + *k * horizontal[[i + t, j]])
    })
}

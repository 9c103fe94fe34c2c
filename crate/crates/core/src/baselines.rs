//! Adaptive median filters.
//!
//! Both filters read outside the image through replicate padding. An axis of
//! length one is never padded, so an `m×1` signal gets a purely 1-D window.
//! Outputs are always medians of input values (or the input value itself),
//! so the output range never exceeds the input range.

use ndarray::Array2;

use crate::error::{IdtError, Result};
use crate::scalar::Scalar;
use crate::transforms::SignalMatrix;

/// Window size used when the adaptive median filter feeds parameter
/// estimation.
pub const AMF_DEFAULT_MAX_WINDOW: usize = 19;

/// Settings of the adaptive center-weighted median filter.
///
/// A pixel `x` is flagged impulsive when, for any `k`, the distance between
/// `x` and the center-weighted median with center weight `2k + 1` exceeds
/// `s·MAD + deltas[k]`, MAD being the median absolute deviation from the
/// window median. Flagged pixels take the window median.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcwmfParams {
    pub s: f64,
    pub deltas: [f64; 4],
}

impl Default for AcwmfParams {
    fn default() -> Self {
        Self {
            s: 0.3,
            deltas: [40.0, 25.0, 10.0, 5.0],
        }
    }
}

fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// Half-extents of a `size`-wide window on a `rows×cols` grid, collapsed on
/// singleton axes.
fn half_extents(rows: usize, cols: usize, size: usize) -> (isize, isize) {
    let h = (size / 2) as isize;
    (if rows > 1 { h } else { 0 }, if cols > 1 { h } else { 0 })
}

fn gather<T: Scalar>(
    y: &SignalMatrix<T>,
    i: usize,
    j: usize,
    hr: isize,
    hc: isize,
    buf: &mut Vec<T>,
) {
    let (rows, cols) = y.dim();
    buf.clear();
    for di in -hr..=hr {
        let r = clamp_index(i as isize + di, rows);
        for dj in -hc..=hc {
            buf.push(y[[r, clamp_index(j as isize + dj, cols)]]);
        }
    }
}

/// Median of an odd-length buffer; reorders the buffer.
fn median_in_place<T: Scalar>(buf: &mut [T]) -> T {
    let mid = buf.len() / 2;
    *buf.select_nth_unstable_by(mid, |a, b| {
        a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal)
    })
    .1
}

fn min_max<T: Scalar>(buf: &[T]) -> (T, T) {
    buf.iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Adaptive median filter with windows growing from 3 up to `max_window`.
///
/// Stage A: if the window median lies strictly between the window minimum
/// and maximum, go to stage B; otherwise grow the window, and output the
/// median once `max_window` is exhausted. Stage B: keep the pixel when it
/// lies strictly between minimum and maximum, else output the median.
pub fn amf<T: Scalar>(y: &SignalMatrix<T>, max_window: usize) -> Result<SignalMatrix<T>> {
    if max_window < 3 || max_window.is_multiple_of(2) {
        return Err(IdtError::InvalidArgument(format!(
            "amf max_window must be odd and >= 3, got {max_window}"
        )));
    }
    let (rows, cols) = y.dim();
    let mut out = y.to_owned();
    let mut buf = Vec::with_capacity(max_window * max_window);
    for i in 0..rows {
        for j in 0..cols {
            let z = y[[i, j]];
            let mut size = 3;
            out[[i, j]] = loop {
                let (hr, hc) = half_extents(rows, cols, size);
                gather(y, i, j, hr, hc, &mut buf);
                let (lo, hi) = min_max(&buf);
                let med = median_in_place(&mut buf);
                if lo < med && med < hi {
                    break if lo < z && z < hi { z } else { med };
                }
                if size >= max_window {
                    break med;
                }
                size += 2;
            };
        }
    }
    Ok(out)
}

/// Adaptive center-weighted median filter with default settings.
pub fn acwmf<T: Scalar>(y: &SignalMatrix<T>) -> SignalMatrix<T> {
    acwmf_with(y, &AcwmfParams::default())
}

/// Adaptive center-weighted median filter on a 3×3 window.
pub fn acwmf_with<T: Scalar>(y: &SignalMatrix<T>, params: &AcwmfParams) -> SignalMatrix<T> {
    let (rows, cols) = y.dim();
    let (hr, hc) = half_extents(rows, cols, 3);
    let s = T::lit(params.s);
    let deltas: Vec<T> = params.deltas.iter().map(|d| T::lit(*d)).collect();
    let mut window = Vec::with_capacity(9);
    let mut scratch = Vec::with_capacity(9 + 2 * deltas.len());
    Array2::from_shape_fn((rows, cols), |(i, j)| {
        let x = y[[i, j]];
        gather(y, i, j, hr, hc, &mut window);

        scratch.clear();
        scratch.extend_from_slice(&window);
        let med = median_in_place(&mut scratch);

        scratch.clear();
        scratch.extend(window.iter().map(|v| (*v - med).abs()));
        let mad = median_in_place(&mut scratch);

        let impulsive = deltas.iter().enumerate().any(|(k, delta)| {
            // the center already sits in the window once; add 2k copies
            scratch.clear();
            scratch.extend_from_slice(&window);
            scratch.extend(std::iter::repeat_n(x, 2 * k));
            let cwm = median_in_place(&mut scratch);
            (cwm - x).abs() > s * mad + *delta
        });
        if impulsive {
            med
        } else {
            x
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn constant_image_unchanged() {
        let y = Array2::from_elem((9, 7), 128.0);
        assert_eq!(amf(&y, 19).unwrap(), y);
        assert_eq!(acwmf(&y), y);
    }

    #[test]
    fn single_salt_pixel() {
        let mut y = Array2::from_elem((9, 9), 128.0);
        y[[4, 4]] = 255.0;
        assert_eq!(amf(&y, 19).unwrap()[[4, 4]], 128.0);
        assert_eq!(acwmf(&y)[[4, 4]], 128.0);
    }

    #[test]
    fn window_must_be_odd_and_at_least_three() {
        let y = Array2::<f64>::zeros((4, 4));
        assert!(amf(&y, 4).is_err());
        assert!(amf(&y, 1).is_err());
        assert!(amf(&y, 3).is_ok());
    }

    #[test]
    fn impulse_in_gradient() {
        let mut y = Array2::from_shape_fn((8, 8), |(i, j)| 10.0 * (i + j) as f64);
        y[[3, 4]] = 250.0;
        let f = acwmf(&y);
        // clean neighborhood spans 50..90
        assert!((50.0..=90.0).contains(&f[[3, 4]]), "got {}", f[[3, 4]]);
        // the clean ramp is left alone away from the impulse
        assert_eq!(f[[7, 0]], y[[7, 0]]);
    }

    #[test]
    fn column_signal_uses_1d_window() {
        let y = array![[1.0], [2.0], [100.0], [4.0], [5.0]];
        let f = amf(&y, 5).unwrap();
        assert_eq!(f[[2, 0]], 4.0);
        assert_eq!(f[[0, 0]], 1.0);
    }

    #[test]
    fn output_within_input_range() {
        let y = Array2::from_shape_fn((12, 10), |(i, j)| ((i * 37 + j * 91) % 256) as f64);
        for f in [amf(&y, 7).unwrap(), acwmf(&y)] {
            assert!(f.iter().all(|v| (0.0..=255.0).contains(v)));
        }
    }
}

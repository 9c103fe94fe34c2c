//! Orthonormal DCT-II transforms.
//!
//! The forward transform maps an observation `X` (m×n) to coefficients
//! `C = D_m · X · D_nᵀ`, where `D_k` is the k×k orthonormal DCT-II matrix
//! returned by [`dct_matrix`]. The inverse is `X = D_mᵀ · C · D_n`. A 1-D
//! signal is an m×1 matrix; the length-1 transform along the second axis is
//! the identity.
//!
//! In the `𝒟⁻¹(X) = A·X·B` form used by the uniqueness analysis this gives
//! `A = D_mᵀ` and `B = D_n`.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array2, ArrayViewMut1, Axis};
use rustdct::{DctPlanner, TransformType2And3};

use crate::error::{check_same_shape, IdtError, Result};
use crate::scalar::Scalar;

/// Dense real-valued m×n grid. Used for observations, coefficients and noise.
pub type SignalMatrix<T> = Array2<T>;

/// One axis of a separable plan.
#[derive(Clone)]
struct AxisPlan<T: Scalar> {
    len: usize,
    dct: Option<Arc<dyn TransformType2And3<T>>>,
    forward_scale: Vec<T>,
    inverse_scale: Vec<T>,
}

impl<T: Scalar> AxisPlan<T> {
    fn new(planner: &mut DctPlanner<T>, len: usize) -> Self {
        let n = T::from_usize_lossy(len);
        let dc = (T::one() / n).sqrt();
        let ac = (T::lit(2.0) / n).sqrt();
        let mut forward_scale = vec![ac; len];
        forward_scale[0] = dc;
        // rustdct's DCT-III halves the first input, so the DC weight doubles.
        let mut inverse_scale = vec![ac; len];
        inverse_scale[0] = T::lit(2.0) * dc;
        let dct = (len > 1).then(|| planner.plan_dct2(len));
        Self {
            len,
            dct,
            forward_scale,
            inverse_scale,
        }
    }

    fn scratch_len(&self) -> usize {
        self.dct.as_ref().map_or(0, |d| d.get_scratch_len())
    }

    fn forward_lane(&self, lane: &mut [T], scratch: &mut [T]) {
        if let Some(dct) = &self.dct {
            dct.process_dct2_with_scratch(lane, scratch);
            for (v, s) in lane.iter_mut().zip(&self.forward_scale) {
                *v *= *s;
            }
        }
    }

    fn inverse_lane(&self, lane: &mut [T], scratch: &mut [T]) {
        if let Some(dct) = &self.dct {
            for (v, s) in lane.iter_mut().zip(&self.inverse_scale) {
                *v *= *s;
            }
            dct.process_dct3_with_scratch(lane, scratch);
        }
    }
}

/// Precomputed separable 2-D orthonormal DCT-II for a fixed `rows × cols`
/// shape.
///
/// Plans are immutable and cheap to clone; they can be shared across threads.
#[derive(Clone)]
pub struct DctPlan<T: Scalar> {
    along_rows: AxisPlan<T>,
    along_cols: AxisPlan<T>,
}

impl<T: Scalar> fmt::Debug for DctPlan<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DctPlan")
            .field("rows", &self.rows())
            .field("cols", &self.cols())
            .finish()
    }
}

impl<T: Scalar> DctPlan<T> {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(IdtError::InvalidDimension(format!(
                "DCT plan needs positive dimensions, got {rows}×{cols}"
            )));
        }
        let mut planner = DctPlanner::new();
        // `along_rows` transforms each column vector (length `rows`).
        let along_rows = AxisPlan::new(&mut planner, rows);
        let along_cols = AxisPlan::new(&mut planner, cols);
        Ok(Self {
            along_rows,
            along_cols,
        })
    }

    /// Plan for 1-D signals of length `len`, stored as `len × 1` matrices.
    pub fn new_1d(len: usize) -> Result<Self> {
        Self::new(len, 1)
    }

    /// Plan matching the shape of `m`.
    pub fn for_shape(m: &SignalMatrix<T>) -> Result<Self> {
        Self::new(m.nrows(), m.ncols())
    }

    pub fn rows(&self) -> usize {
        self.along_rows.len
    }

    pub fn cols(&self) -> usize {
        self.along_cols.len
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    /// Coefficients `D_m · x · D_nᵀ`.
    pub fn forward(&self, x: &SignalMatrix<T>) -> Result<SignalMatrix<T>> {
        let mut out = x.to_owned();
        self.forward_inplace(&mut out)?;
        Ok(out)
    }

    /// Observation `D_mᵀ · c · D_n`.
    pub fn inverse(&self, c: &SignalMatrix<T>) -> Result<SignalMatrix<T>> {
        let mut out = c.to_owned();
        self.inverse_inplace(&mut out)?;
        Ok(out)
    }

    pub fn forward_inplace(&self, data: &mut SignalMatrix<T>) -> Result<()> {
        check_same_shape(self.shape(), data.dim())?;
        let mut scratch = self.scratch();
        apply_lanes(data, Axis(1), self.cols(), &mut scratch, |lane, s| {
            self.along_cols.forward_lane(lane, s)
        });
        apply_lanes(data, Axis(0), self.rows(), &mut scratch, |lane, s| {
            self.along_rows.forward_lane(lane, s)
        });
        Ok(())
    }

    pub fn inverse_inplace(&self, data: &mut SignalMatrix<T>) -> Result<()> {
        check_same_shape(self.shape(), data.dim())?;
        let mut scratch = self.scratch();
        apply_lanes(data, Axis(0), self.rows(), &mut scratch, |lane, s| {
            self.along_rows.inverse_lane(lane, s)
        });
        apply_lanes(data, Axis(1), self.cols(), &mut scratch, |lane, s| {
            self.along_cols.inverse_lane(lane, s)
        });
        Ok(())
    }

    fn scratch(&self) -> Scratch<T> {
        let dct_len = self
            .along_rows
            .scratch_len()
            .max(self.along_cols.scratch_len());
        Scratch {
            lane: vec![T::zero(); self.rows().max(self.cols())],
            dct: vec![T::zero(); dct_len],
            block: Vec::new(),
        }
    }
}

struct Scratch<T> {
    lane: Vec<T>,
    dct: Vec<T>,
    block: Vec<T>,
}

/// Side of the square tiles used when transposing; keeps both the read and
/// the write side of a tile in L1.
const TILE: usize = 32;

/// Runs `f` over every 1-D lane of `data` along `axis`.
///
/// Strided columns of a row-major matrix are handled by a tiled transpose
/// into a contiguous buffer and back, which avoids the cache-set aliasing a
/// per-column gather hits at power-of-two widths.
fn apply_lanes<T: Scalar, F>(
    data: &mut SignalMatrix<T>,
    axis: Axis,
    len: usize,
    scratch: &mut Scratch<T>,
    f: F,
) where
    F: Fn(&mut [T], &mut [T]),
{
    if len <= 1 {
        return;
    }
    let (rows, cols) = data.dim();
    if let Some(flat) = data.as_slice_mut() {
        if axis == Axis(1) {
            for row in flat.chunks_exact_mut(cols) {
                f(row, &mut scratch.dct);
            }
        } else {
            scratch.block.resize(flat.len(), T::zero());
            transpose_into(flat, rows, cols, &mut scratch.block);
            for col in scratch.block.chunks_exact_mut(rows) {
                f(col, &mut scratch.dct);
            }
            transpose_into(&scratch.block, cols, rows, flat);
        }
        return;
    }
    for mut lane in data.lanes_mut(axis) {
        match lane.as_slice_mut() {
            Some(slice) => f(slice, &mut scratch.dct),
            None => {
                let buf = &mut scratch.lane[..len];
                gather(&lane, buf);
                f(buf, &mut scratch.dct);
                scatter(buf, &mut lane);
            }
        }
    }
}

/// Writes the transpose of the row-major `rows × cols` block `src` into `dst`.
fn transpose_into<T: Copy>(src: &[T], rows: usize, cols: usize, dst: &mut [T]) {
    for r0 in (0..rows).step_by(TILE) {
        for c0 in (0..cols).step_by(TILE) {
            for r in r0..(r0 + TILE).min(rows) {
                for c in c0..(c0 + TILE).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

fn gather<T: Scalar>(lane: &ArrayViewMut1<'_, T>, buf: &mut [T]) {
    for (b, v) in buf.iter_mut().zip(lane.iter()) {
        *b = *v;
    }
}

fn scatter<T: Scalar>(buf: &[T], lane: &mut ArrayViewMut1<'_, T>) {
    for (v, b) in lane.iter_mut().zip(buf) {
        *v = *b;
    }
}

/// Orthonormal DCT-II matrix with basis vectors as rows:
/// `D[0][j] = √(1/m)`, `D[i][j] = √(2/m)·cos(π(2j+1)i / 2m)` for `i ≥ 1`.
pub fn dct_matrix<T: Scalar>(m: usize) -> Result<SignalMatrix<T>> {
    if m == 0 {
        return Err(IdtError::InvalidDimension(
            "DCT matrix size must be positive".into(),
        ));
    }
    let mf = m as f64;
    let d = Array2::from_shape_fn((m, m), |(i, j)| {
        let v = if i == 0 {
            (1.0 / mf).sqrt()
        } else {
            (2.0 / mf).sqrt()
                * (std::f64::consts::PI * (2 * j + 1) as f64 * i as f64 / (2.0 * mf)).cos()
        };
        T::lit(v)
    });
    Ok(d)
}

/// Largest absolute entry of a matrix.
pub fn max_abs<T: Scalar>(m: &SignalMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
}

/// `‖vec(Bᵀ ⊗ A)‖∞`, computed as `max|A| · max|B|` without forming the
/// Kronecker product.
pub fn kron_infnorm<T: Scalar>(a: &SignalMatrix<T>, b: &SignalMatrix<T>) -> Result<T> {
    if a.is_empty() {
        return Err(IdtError::Empty("kron_infnorm: A"));
    }
    if b.is_empty() {
        return Err(IdtError::Empty("kron_infnorm: B"));
    }
    Ok(max_abs(a) * max_abs(b))
}

/// Closed form of `‖vec(D ⊗ D)‖∞` for the m×m orthonormal DCT matrix.
///
/// For a power of two the largest cosine never reaches ±1 and the peak is
/// `cos(π/2m)`; otherwise some row hits an odd multiple of π exactly.
///
/// # Panics
/// If `m == 0`.
pub fn dct_infnorm_squared<T: Scalar>(m: usize) -> T {
    assert!(m >= 1, "dct_infnorm_squared requires m >= 1");
    if m == 1 {
        return T::one();
    }
    let mf = m as f64;
    let v = if m.is_power_of_two() {
        let c = (std::f64::consts::PI / (2.0 * mf)).cos();
        2.0 / mf * c * c
    } else {
        2.0 / mf
    };
    T::lit(v)
}

/// Whether `mᵀm` is the identity within `tol` (max-entry error).
pub fn is_orthonormal<T: Scalar>(m: &SignalMatrix<T>, tol: T) -> bool {
    if m.nrows() != m.ncols() || m.is_empty() {
        return false;
    }
    let gram = m.t().dot(m);
    gram.indexed_iter().all(|((i, j), v)| {
        let target = if i == j { T::one() } else { T::zero() };
        (*v - target).abs() <= tol
    })
}

/// Uniqueness threshold `½(1 + 1/‖vec(Bᵀ⊗A)‖∞)` for `𝒟⁻¹(X) = A·X·B`.
///
/// Any pair whose total sparsity is strictly below the returned value is the
/// unique sparsest member of the feasible set. `Bᵀ⊗A` must be orthonormal,
/// which holds iff `A` and `B` are; violations are logged, not rejected.
pub fn uniqueness_bound<T: Scalar>(a: &SignalMatrix<T>, b: &SignalMatrix<T>) -> Result<T> {
    let tol = T::lit(1e-9);
    if !is_orthonormal(a, tol) || !is_orthonormal(b, tol) {
        log::warn!("uniqueness_bound: Bᵀ⊗A is not orthonormal; the bound does not apply");
    }
    let m = kron_infnorm(a, b)?;
    if m == T::zero() {
        return Err(IdtError::InvalidArgument(
            "uniqueness_bound: coherence is zero".into(),
        ));
    }
    Ok(T::lit(0.5) * (T::one() + m.recip()))
}

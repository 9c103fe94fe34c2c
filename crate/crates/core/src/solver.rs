//! Iterative double thresholding.
//!
//! The observation is modelled as `Y = 𝒟⁻¹(X) + N` with `X` sparse in the
//! transform domain and `N` sparse in the observation domain. Two solvers
//! are provided:
//!
//! * [`idt`]: annealed alternating minimization. For each level `√λ` of a
//!   decreasing schedule, both components are hard-thresholded at `√λ` and
//!   then projected back onto the feasible set `W = {(X, N) : 𝒟⁻¹(X) + N = Y}`
//!   until the noise estimate stops moving.
//! * [`modified_idt`]: single loop with separate exponential threshold
//!   schedules for signal and noise, optional clipping and Gaussian smoothing
//!   of the spatial signal estimate (the image-specific steps).

use ndarray::{Array2, Axis, Zip};

use crate::error::{check_same_shape, IdtError, Result};
use crate::metrics::{frobenius_distance, frobenius_norm, psnr};
use crate::scalar::Scalar;
use crate::transforms::{max_abs, DctPlan, SignalMatrix};

/// Relative default for the outer stopping threshold `δ`, in units of `‖Y‖_F`.
pub const DEFAULT_STOP_DELTA_REL: f64 = 1e-4;
/// Relative default for the inner stopping threshold of [`idt`].
pub const DEFAULT_INNER_DELTA_REL: f64 = 1e-3;
/// Number of levels in the default [`idt`] schedule.
pub const DEFAULT_SCHEDULE_LEVELS: usize = 40;
/// Ratio between the last and first level of the default schedule.
pub const DEFAULT_SCHEDULE_FLOOR: f64 = 1e-3;
/// Cap on inner iterations per level of [`idt`].
pub const DEFAULT_MAX_INNER_ITERS: usize = 500;
/// Iteration budget of [`modified_idt`] when none is given.
pub const DEFAULT_MAX_ITERS: usize = 60;

/// A candidate decomposition: transform-domain coefficients `x` and
/// observation-domain noise `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePair<T: Scalar> {
    pub x: SignalMatrix<T>,
    pub n: SignalMatrix<T>,
}

impl<T: Scalar> SparsePair<T> {
    /// `‖𝒟⁻¹(x) + n − y‖_F`.
    pub fn feasibility_residual(&self, y: &SignalMatrix<T>, plan: &DctPlan<T>) -> Result<T> {
        check_same_shape(y.dim(), self.x.dim())?;
        check_same_shape(y.dim(), self.n.dim())?;
        let mut r = plan.inverse(&self.x)?;
        r += &self.n;
        Ok(frobenius_distance(&r, y))
    }

    /// Membership in `W` up to `1e-9·max(1, ‖y‖_F)`.
    pub fn is_feasible(&self, y: &SignalMatrix<T>, plan: &DctPlan<T>) -> Result<bool> {
        let tol = T::lit(1e-9) * frobenius_norm(y).max(T::one());
        Ok(self.feasibility_residual(y, plan)? <= tol)
    }
}

/// Parameters of both solvers.
///
/// The signal threshold at iteration `k` of [`modified_idt`] is
/// `beta1·exp(−alpha1·k)`, the noise threshold `beta2·exp(−alpha2·k)`.
/// `schedule`, `inner_delta` and `max_inner_iters` only affect [`idt`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T: Scalar> {
    pub alpha1: T,
    pub beta1: T,
    pub alpha2: T,
    pub beta2: T,
    /// Gaussian filter standard deviation, in samples.
    pub sigma: T,
    pub max_iters: usize,
    /// Stop once `‖Nᵏ⁺¹ − Nᵏ‖_F ≤ stop_delta`. `None` means `1e-4·‖Y‖_F`.
    pub stop_delta: Option<T>,
    pub clip_range: Option<(T, T)>,
    pub enable_clip: bool,
    pub enable_filter: bool,
    pub schedule: Option<Vec<T>>,
    /// `None` means `1e-3·‖Y‖_F`.
    pub inner_delta: Option<T>,
    pub max_inner_iters: usize,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            alpha1: T::zero(),
            beta1: T::zero(),
            alpha2: T::zero(),
            beta2: T::zero(),
            sigma: T::lit(0.4),
            max_iters: DEFAULT_MAX_ITERS,
            stop_delta: None,
            clip_range: None,
            enable_clip: false,
            enable_filter: false,
            schedule: None,
            inner_delta: None,
            max_inner_iters: DEFAULT_MAX_INNER_ITERS,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    /// Thresholds only: no clipping, no filtering (synthetic and audio data).
    pub fn plain(alpha1: T, beta1: T, alpha2: T, beta2: T) -> Self {
        Self {
            alpha1,
            beta1,
            alpha2,
            beta2,
            ..Self::default()
        }
    }

    /// 8-bit image setup: clip to `[0, 255]` and smooth with `sigma`.
    pub fn image(alpha1: T, beta1: T, alpha2: T, beta2: T, sigma: T) -> Self {
        Self {
            alpha1,
            beta1,
            alpha2,
            beta2,
            sigma,
            clip_range: Some((T::zero(), T::lit(255.0))),
            enable_clip: true,
            enable_filter: true,
            ..Self::default()
        }
    }

    pub fn signal_threshold(&self, k: usize) -> T {
        self.beta1 * (-self.alpha1 * T::from_usize_lossy(k)).exp()
    }

    pub fn noise_threshold(&self, k: usize) -> T {
        self.beta2 * (-self.alpha2 * T::from_usize_lossy(k)).exp()
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: T| {
            if v.is_finite() && v >= T::zero() {
                Ok(())
            } else {
                Err(IdtError::Config(format!(
                    "{name} must be finite and >= 0, got {v}"
                )))
            }
        };
        nonneg("alpha1", self.alpha1)?;
        nonneg("beta1", self.beta1)?;
        nonneg("alpha2", self.alpha2)?;
        nonneg("beta2", self.beta2)?;
        nonneg("sigma", self.sigma)?;
        if self.max_iters == 0 {
            return Err(IdtError::Config("max_iters must be >= 1".into()));
        }
        if let Some(d) = self.stop_delta {
            nonneg("stop_delta", d)?;
        }
        if let Some(d) = self.inner_delta {
            if !(d.is_finite() && d > T::zero()) {
                return Err(IdtError::Config(format!(
                    "inner_delta must be > 0, got {d}"
                )));
            }
        }
        if self.enable_clip {
            match self.clip_range {
                None => {
                    return Err(IdtError::Config(
                        "clipping enabled without a clip range".into(),
                    ))
                }
                Some((lo, hi)) if !(lo < hi) => {
                    return Err(IdtError::Config(format!(
                        "clip range needs lo < hi, got [{lo}, {hi}]"
                    )))
                }
                Some(_) => {}
            }
        }
        if self.enable_filter && !(self.sigma > T::zero()) {
            return Err(IdtError::Config("filtering enabled with sigma <= 0".into()));
        }
        if let Some(s) = &self.schedule {
            validate_schedule(s)?;
        }
        if self.max_inner_iters == 0 {
            return Err(IdtError::Config("max_inner_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// One row of a solver trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<T: Scalar> {
    /// Zero-based iteration (outer level for [`idt`]).
    pub iteration: usize,
    pub threshold_signal: T,
    pub threshold_noise: T,
    /// `‖Nᵏ⁺¹ − Nᵏ‖_F` at the end of the iteration.
    pub residual: T,
    /// PSNR of the current spatial estimate against a reference, if one was
    /// supplied.
    pub psnr: Option<f64>,
    /// Inner iterations spent at this level ([`idt`] only, otherwise 1).
    pub inner_iterations: usize,
}

/// Final estimates plus the per-iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult<T: Scalar> {
    /// Spatial signal estimate `𝒟⁻¹(X̂)`.
    pub x_spatial: SignalMatrix<T>,
    /// Transform-domain estimate `X̂`.
    pub x_coeffs: SignalMatrix<T>,
    pub n_hat: SignalMatrix<T>,
    pub iterations_used: usize,
    /// Whether the stopping threshold was reached before the budget ran out.
    pub converged: bool,
    pub trace: Vec<IterationRecord<T>>,
}

/// Reference used to annotate traces with PSNR.
#[derive(Debug, Clone, Copy)]
pub struct TraceReference<'a, T: Scalar> {
    pub signal: &'a SignalMatrix<T>,
    pub peak: T,
}

/// Keeps entries with `|v| ≥ th`, zeroes the rest.
pub fn hard_threshold<T: Scalar>(m: &SignalMatrix<T>, th: T) -> SignalMatrix<T> {
    m.mapv(|v| if v.abs() >= th { v } else { T::zero() })
}

pub fn hard_threshold_inplace<T: Scalar>(m: &mut SignalMatrix<T>, th: T) {
    m.mapv_inplace(|v| if v.abs() >= th { v } else { T::zero() });
}

/// Entry-wise clamp to `[lo, hi]`.
pub fn clip<T: Scalar>(m: &SignalMatrix<T>, lo: T, hi: T) -> Result<SignalMatrix<T>> {
    let mut out = m.to_owned();
    clip_inplace(&mut out, lo, hi)?;
    Ok(out)
}

pub fn clip_inplace<T: Scalar>(m: &mut SignalMatrix<T>, lo: T, hi: T) -> Result<()> {
    if !(lo < hi) {
        return Err(IdtError::InvalidArgument(format!(
            "clip needs lo < hi, got [{lo}, {hi}]"
        )));
    }
    m.mapv_inplace(|v| v.max(lo).min(hi));
    Ok(())
}

/// Normalized Gaussian taps, radius `ceil(3σ)`.
pub fn gaussian_kernel<T: Scalar>(sigma: T) -> Result<Vec<T>> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(IdtError::InvalidArgument(format!(
            "gaussian sigma must be > 0, got {sigma}"
        )));
    }
    let radius = (T::lit(3.0) * sigma).ceil().to_usize().unwrap_or(0);
    let two_var = T::lit(2.0) * sigma * sigma;
    let mut taps: Vec<T> = (0..=2 * radius)
        .map(|i| {
            let t = T::from_usize_lossy(i) - T::from_usize_lossy(radius);
            (-(t * t) / two_var).exp()
        })
        .collect();
    let total: T = taps.iter().copied().sum();
    taps.iter_mut().for_each(|w| *w = *w / total);
    Ok(taps)
}

/// Separable Gaussian smoothing with replicated borders. Axes of length 1
/// are left alone, so an m×1 signal gets a single 1-D pass.
pub fn gaussian_filter<T: Scalar>(m: &SignalMatrix<T>, sigma: T) -> Result<SignalMatrix<T>> {
    let taps = gaussian_kernel(sigma)?;
    let mut out = m.to_owned();
    if out.is_empty() {
        return Ok(out);
    }
    let mut buf = Vec::new();
    for axis in [Axis(1), Axis(0)] {
        if out.len_of(axis) > 1 {
            convolve_axis(&mut out, axis, &taps, &mut buf);
        }
    }
    Ok(out)
}

fn convolve_axis<T: Scalar>(data: &mut Array2<T>, axis: Axis, taps: &[T], buf: &mut Vec<T>) {
    let len = data.len_of(axis);
    let radius = taps.len() / 2;
    if axis == Axis(0) {
        if let Some(flat) = data.as_slice_mut() {
            // whole rows at a time, so every access is contiguous
            let cols = flat.len() / len;
            buf.clear();
            buf.extend_from_slice(flat);
            for (i, out) in flat.chunks_exact_mut(cols).enumerate() {
                out.iter_mut().for_each(|v| *v = T::zero());
                for (t, w) in taps.iter().enumerate() {
                    let j = (i + t).saturating_sub(radius).min(len - 1);
                    for (o, v) in out.iter_mut().zip(&buf[j * cols..(j + 1) * cols]) {
                        *o += *w * *v;
                    }
                }
            }
            return;
        }
    }
    for mut lane in data.lanes_mut(axis) {
        buf.clear();
        buf.extend(lane.iter().copied());
        for (i, out) in lane.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (t, w) in taps.iter().enumerate() {
                // replicate-edge index of i + t − radius
                let j = (i + t).saturating_sub(radius).min(len - 1);
                acc += *w * buf[j];
            }
            *out = acc;
        }
    }
}

/// Nearest feasible pair to `(x, n)`:
/// `X̂ = ½(X + 𝒟(Y − N))`, `N̂ = ½(−𝒟⁻¹(X) + Y + N)`.
///
/// Both halves use the incoming pair, so `𝒟⁻¹(X̂) + N̂ = Y` holds exactly in
/// exact arithmetic.
pub fn project_onto_w<T: Scalar>(
    x: &SignalMatrix<T>,
    n: &SignalMatrix<T>,
    y: &SignalMatrix<T>,
    plan: &DctPlan<T>,
) -> Result<SparsePair<T>> {
    check_same_shape(plan.shape(), x.dim())?;
    check_same_shape(plan.shape(), n.dim())?;
    check_same_shape(plan.shape(), y.dim())?;
    let half = T::lit(0.5);

    let mut x_hat = y - n;
    plan.forward_inplace(&mut x_hat)?;
    Zip::from(&mut x_hat)
        .and(x)
        .for_each(|a, &b| *a = half * (*a + b));

    let mut n_hat = plan.inverse(x)?;
    Zip::from(&mut n_hat)
        .and(y)
        .and(n)
        .for_each(|a, &yy, &nn| *a = half * (yy + nn - *a));

    Ok(SparsePair { x: x_hat, n: n_hat })
}

/// Geometric schedule with [`DEFAULT_SCHEDULE_LEVELS`] levels from
/// `max|𝒟(Y)|` down to [`DEFAULT_SCHEDULE_FLOOR`] of it.
pub fn default_idt_schedule<T: Scalar>(y: &SignalMatrix<T>, plan: &DctPlan<T>) -> Result<Vec<T>> {
    let peak = max_abs(&plan.forward(y)?);
    let peak = if peak > T::zero() { peak } else { T::one() };
    Ok(geometric_schedule(
        peak,
        peak * T::lit(DEFAULT_SCHEDULE_FLOOR),
        DEFAULT_SCHEDULE_LEVELS,
    ))
}

/// `levels` values decaying geometrically from `start` to `end` inclusive.
pub fn geometric_schedule<T: Scalar>(start: T, end: T, levels: usize) -> Vec<T> {
    match levels {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let ratio = (end / start).ln() / T::from_usize_lossy(levels - 1);
            (0..levels)
                .map(|k| start * (ratio * T::from_usize_lossy(k)).exp())
                .collect()
        }
    }
}

fn validate_schedule<T: Scalar>(schedule: &[T]) -> Result<()> {
    if schedule.is_empty() {
        return Err(IdtError::Config("threshold schedule is empty".into()));
    }
    if schedule.iter().any(|v| !(v.is_finite() && *v > T::zero())) {
        return Err(IdtError::Config(
            "threshold schedule must be positive".into(),
        ));
    }
    if schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(IdtError::Config(
            "threshold schedule must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// Annealed IDT with an explicit schedule of threshold levels `√λ`.
pub fn idt<T: Scalar>(
    y: &SignalMatrix<T>,
    plan: &DctPlan<T>,
    schedule: &[T],
    inner_delta: T,
) -> Result<RecoveryResult<T>> {
    idt_traced(
        y,
        plan,
        schedule,
        inner_delta,
        DEFAULT_MAX_INNER_ITERS,
        None,
    )
}

/// [`idt`] driven by a [`SolverConfig`]; missing schedule and inner
/// threshold fall back to their defaults.
pub fn idt_with_config<T: Scalar>(
    y: &SignalMatrix<T>,
    plan: &DctPlan<T>,
    config: &SolverConfig<T>,
    reference: Option<TraceReference<'_, T>>,
) -> Result<RecoveryResult<T>> {
    config.validate()?;
    let schedule = match &config.schedule {
        Some(s) => s.clone(),
        None => default_idt_schedule(y, plan)?,
    };
    let inner_delta = config
        .inner_delta
        .unwrap_or_else(|| relative_delta(y, DEFAULT_INNER_DELTA_REL));
    idt_traced(
        y,
        plan,
        &schedule,
        inner_delta,
        config.max_inner_iters,
        reference,
    )
}

pub fn idt_traced<T: Scalar>(
    y: &SignalMatrix<T>,
    plan: &DctPlan<T>,
    schedule: &[T],
    inner_delta: T,
    max_inner_iters: usize,
    reference: Option<TraceReference<'_, T>>,
) -> Result<RecoveryResult<T>> {
    check_same_shape(plan.shape(), y.dim())?;
    validate_schedule(schedule)?;
    if !(inner_delta.is_finite() && inner_delta > T::zero()) {
        return Err(IdtError::Config(format!(
            "inner_delta must be > 0, got {inner_delta}"
        )));
    }
    if max_inner_iters == 0 {
        return Err(IdtError::Config("max_inner_iters must be >= 1".into()));
    }
    if let Some(r) = &reference {
        check_same_shape(y.dim(), r.signal.dim())?;
    }

    let mut x = plan.forward(y)?;
    let mut n = Array2::zeros(y.dim());
    let mut trace = Vec::with_capacity(schedule.len());
    let mut converged = true;

    for (k, &th) in schedule.iter().enumerate() {
        let mut inner = 0;
        let mut e = T::infinity();
        while e > inner_delta && inner < max_inner_iters {
            let xt = hard_threshold(&x, th);
            let nt = hard_threshold(&n, th);
            let projected = project_onto_w(&xt, &nt, y, plan)?;
            e = frobenius_distance(&projected.n, &n);
            x = projected.x;
            n = projected.n;
            inner += 1;
        }
        converged = e <= inner_delta;
        let psnr_value = reference.map(|r| trace_psnr(y, &n, r));
        trace.push(IterationRecord {
            iteration: k,
            threshold_signal: th,
            threshold_noise: th,
            residual: e,
            psnr: psnr_value,
            inner_iterations: inner,
        });
    }

    Ok(RecoveryResult {
        x_spatial: y - &n,
        x_coeffs: x,
        n_hat: n,
        iterations_used: schedule.len(),
        converged,
        trace,
    })
}

/// Modified IDT with exponential threshold schedules and the optional
/// clip/filter steps on the spatial signal estimate.
pub fn modified_idt<T: Scalar>(
    y: &SignalMatrix<T>,
    plan: &DctPlan<T>,
    config: &SolverConfig<T>,
) -> Result<RecoveryResult<T>> {
    modified_idt_traced(y, plan, config, None)
}

/// [`modified_idt`] recording the PSNR of `Y − Nᵏ⁺¹` (which equals
/// `𝒟⁻¹(Xᵏ⁺¹)`) against `reference` at the end of each iteration.
pub fn modified_idt_traced<T: Scalar>(
    y: &SignalMatrix<T>,
    plan: &DctPlan<T>,
    config: &SolverConfig<T>,
    reference: Option<TraceReference<'_, T>>,
) -> Result<RecoveryResult<T>> {
    config.validate()?;
    check_same_shape(plan.shape(), y.dim())?;
    if let Some(r) = &reference {
        check_same_shape(y.dim(), r.signal.dim())?;
    }
    let delta = config
        .stop_delta
        .unwrap_or_else(|| relative_delta(y, DEFAULT_STOP_DELTA_REL));
    let clip_range = if config.enable_clip {
        config.clip_range
    } else {
        None
    };

    let mut x = plan.forward(y)?;
    let mut n = Array2::zeros(y.dim());
    let mut trace = Vec::with_capacity(config.max_iters);
    let mut converged = false;

    for k in 0..config.max_iters {
        let th1 = config.signal_threshold(k);
        let th2 = config.noise_threshold(k);

        let mut xs = hard_threshold(&x, th1);
        plan.inverse_inplace(&mut xs)?;
        if let Some((lo, hi)) = clip_range {
            clip_inplace(&mut xs, lo, hi)?;
        }
        if config.enable_filter {
            xs = gaussian_filter(&xs, config.sigma)?;
        }

        // Nᵏ⁺¹ = threshold(Y − Xᵏ)
        let mut n_next = y - &xs;
        let exact = n_next.iter().all(|v| *v == T::zero());
        hard_threshold_inplace(&mut n_next, th2);
        let e = frobenius_distance(&n_next, &n);

        x = y - &n_next;
        plan.forward_inplace(&mut x)?;
        n = n_next;

        trace.push(IterationRecord {
            iteration: k,
            threshold_signal: th1,
            threshold_noise: th2,
            residual: e,
            psnr: reference.map(|r| trace_psnr(y, &n, r)),
            inner_iterations: 1,
        });
        // An empty noise estimate only means th2 is still above every
        // residual, not that the iteration has settled.
        if e <= delta && (exact || n.iter().any(|v| *v != T::zero())) {
            converged = true;
            break;
        }
    }

    Ok(RecoveryResult {
        x_spatial: y - &n,
        x_coeffs: x,
        n_hat: n,
        iterations_used: trace.len(),
        converged,
        trace,
    })
}

fn relative_delta<T: Scalar>(y: &SignalMatrix<T>, rel: f64) -> T {
    T::lit(rel) * frobenius_norm(y)
}

fn trace_psnr<T: Scalar>(
    y: &SignalMatrix<T>,
    n: &SignalMatrix<T>,
    r: TraceReference<'_, T>,
) -> f64 {
    let estimate = y - n;
    psnr(&estimate, r.signal, r.peak).map_or(f64::NAN, |v| v.to_f64_lossy())
}

/// Surrogate cost
/// `‖(1−T1)⊙X‖²_F + ‖(1−T2)⊙N‖²_F + λ(‖vec T1‖₁ + ‖vec T2‖₁)`.
///
/// Diagnostic only; the solvers never evaluate it.
pub fn cost_f_lambda<T: Scalar>(
    x: &SignalMatrix<T>,
    n: &SignalMatrix<T>,
    t1: &SignalMatrix<T>,
    t2: &SignalMatrix<T>,
    lambda: T,
) -> Result<T> {
    check_same_shape(x.dim(), t1.dim())?;
    check_same_shape(n.dim(), t2.dim())?;
    let is_binary = |t: &SignalMatrix<T>| t.iter().all(|v| *v == T::zero() || *v == T::one());
    if !is_binary(t1) || !is_binary(t2) {
        return Err(IdtError::InvalidArgument(
            "support masks must be binary".into(),
        ));
    }
    let off_support = |m: &SignalMatrix<T>, t: &SignalMatrix<T>| -> T {
        Zip::from(m)
            .and(t)
            .fold(T::zero(), |acc, &v, &s| acc + (T::one() - s) * v * v)
    };
    let support_size: T = t1.iter().copied().sum::<T>() + t2.iter().copied().sum::<T>();
    Ok(off_support(x, t1) + off_support(n, t2) + lambda * support_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn threshold_examples() {
        let m = array![[3.0, -1.0], [0.5, -4.0]];
        assert_eq!(hard_threshold(&m, 0.0), m);
        assert_eq!(hard_threshold(&m, 2.0), array![[3.0, 0.0], [0.0, -4.0]]);
        // ties survive
        assert_eq!(hard_threshold(&m, 4.0), array![[0.0, 0.0], [0.0, -4.0]]);
    }

    #[test]
    fn clip_examples() {
        let m = array![[-5.0, 260.0]];
        assert_eq!(clip(&m, 0.0, 255.0).unwrap(), array![[0.0, 255.0]]);
        let inside = array![[1.0, 2.0], [3.0, 4.0]];
        assert_eq!(clip(&inside, 0.0, 255.0).unwrap(), inside);
        assert!(clip(&inside, 1.0, 1.0).is_err());
        let once = clip(&m, 0.0, 100.0).unwrap();
        assert_eq!(clip(&once, 0.0, 100.0).unwrap(), once);
    }

    #[test]
    fn gaussian_constant_is_preserved() {
        let m = Array2::from_elem((7, 5), 42.0);
        let f = gaussian_filter(&m, 0.55).unwrap();
        for v in f.iter() {
            assert_abs_diff_eq!(*v, 42.0, epsilon = 1e-12);
        }
        assert!(gaussian_filter(&m, 0.0).is_err());
        assert!(gaussian_filter(&m, -1.0).is_err());
    }

    #[test]
    fn gaussian_kernel_shape() {
        let k = gaussian_kernel(0.4f64).unwrap();
        assert_eq!(k.len(), 5); // radius ceil(1.2) = 2
        assert_abs_diff_eq!(k.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_eq!(gaussian_kernel(0.55f64).unwrap().len(), 5);
        assert_eq!(gaussian_kernel(1.5f64).unwrap().len(), 11);
    }

    #[test]
    fn gaussian_on_column_vector_is_1d() {
        let mut m = Array2::zeros((9, 1));
        m[[4, 0]] = 1.0;
        let f = gaussian_filter(&m, 0.4).unwrap();
        let k = gaussian_kernel(0.4f64).unwrap();
        for (i, w) in k.iter().enumerate() {
            assert_abs_diff_eq!(f[[2 + i, 0]], *w, epsilon = 1e-15);
        }
    }

    #[test]
    fn cost_examples() {
        let x = array![[2.0]];
        let n = array![[1.0]];
        let v = cost_f_lambda(&x, &n, &array![[1.0]], &array![[0.0]], 0.5).unwrap();
        assert_abs_diff_eq!(v, 1.5, epsilon = 1e-15);

        let x = array![[1.0, -2.0], [0.5, 3.0]];
        let n = array![[0.0, 4.0], [1.0, 0.0]];
        let zeros = Array2::zeros((2, 2));
        let ones = Array2::ones((2, 2));
        let all_off = cost_f_lambda(&x, &n, &zeros, &zeros, 7.0).unwrap();
        assert_abs_diff_eq!(
            all_off,
            1.0 + 4.0 + 0.25 + 9.0 + 16.0 + 1.0,
            epsilon = 1e-12
        );
        let all_on = cost_f_lambda(&x, &n, &ones, &ones, 0.3).unwrap();
        assert_abs_diff_eq!(all_on, 0.3 * 8.0, epsilon = 1e-12);

        let bad = array![[0.5, 0.0], [0.0, 0.0]];
        assert!(cost_f_lambda(&x, &n, &bad, &zeros, 1.0).is_err());
    }

    #[test]
    fn projection_of_zero_pair() {
        let plan = DctPlan::<f64>::new(4, 3).unwrap();
        let y = Array2::from_shape_fn((4, 3), |(i, j)| (i as f64) - 2.0 * j as f64 + 0.5);
        let z = Array2::zeros((4, 3));
        let p = project_onto_w(&z, &z, &y, &plan).unwrap();
        let expect_x = plan.forward(&y).unwrap() * 0.5;
        for (a, b) in p.x.iter().zip(expect_x.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
        for (a, b) in p.n.iter().zip(y.iter()) {
            assert_abs_diff_eq!(*a, 0.5 * b, epsilon = 1e-12);
        }
        assert!(p.is_feasible(&y, &plan).unwrap());
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::<f64>::plain(0.1, 10.0, 0.1, 10.0);
        assert!(c.validate().is_ok());
        c.enable_clip = true;
        assert!(c.validate().is_err());
        c.clip_range = Some((5.0, 5.0));
        assert!(c.validate().is_err());
        c.clip_range = Some((0.0, 255.0));
        assert!(c.validate().is_ok());
        c.max_iters = 0;
        assert!(c.validate().is_err());
        c.max_iters = 3;
        c.schedule = Some(vec![3.0, 3.0]);
        assert!(c.validate().is_err());
        c.schedule = Some(vec![3.0, 2.0]);
        assert!(c.validate().is_ok());
        c.alpha1 = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn idt_rejects_bad_schedule() {
        let plan = DctPlan::<f64>::new(4, 4).unwrap();
        let y = Array2::zeros((4, 4));
        assert!(idt(&y, &plan, &[1.0, 2.0], 1e-3).is_err());
        assert!(idt(&y, &plan, &[], 1e-3).is_err());
        assert!(idt(&y, &plan, &[2.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn zero_observation_is_a_fixed_point() {
        let plan = DctPlan::<f64>::new(6, 6).unwrap();
        let y = Array2::zeros((6, 6));
        let r = idt(&y, &plan, &[4.0, 2.0, 1.0], 1e-9).unwrap();
        assert!(r.x_coeffs.iter().all(|v| *v == 0.0));
        assert!(r.n_hat.iter().all(|v| *v == 0.0));

        let cfg = SolverConfig::plain(0.1, 1.0, 0.1, 1.0);
        let r = modified_idt(&y, &plan, &cfg).unwrap();
        assert!(r.n_hat.iter().all(|v| *v == 0.0));
        assert_eq!(r.iterations_used, 1);
        assert!(r.converged);
    }

    #[test]
    fn geometric_schedule_endpoints() {
        let s = geometric_schedule(100.0f64, 0.1, 4);
        assert_eq!(s.len(), 4);
        assert_abs_diff_eq!(s[0], 100.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s[1], 10.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s[3], 0.1, epsilon = 1e-12);
    }
}

//! Seeded corruption models and synthetic sparse instances.
//!
//! Every generator draws from `ChaCha8Rng::seed_from_u64(seed)`, consuming
//! entries in row-major order, so the same seed yields the same instance on
//! every platform.
//!
//! Impulsive noise is placed by independent per-entry Bernoulli trials, so
//! the corrupted count is only approximately `density·m·n`. Synthetic sparse
//! pairs use exact-count placement instead. Gaussian amplitudes are
//! parameterized by *variance* (variance 128 means σ ≈ 11.31).

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{IdtError, Result};
use crate::scalar::Scalar;
use crate::transforms::{DctPlan, SignalMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    /// Salt-and-pepper: corrupted entries jump to the range extremes.
    Spn,
    /// Random-valued impulses, uniform over the value range.
    Rvin,
    /// Disjoint SPN and RVIN corruption.
    Mixed,
    /// Missing samples: SPN with no salt.
    Missing,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Spn => "spn",
            NoiseKind::Rvin => "rvin",
            NoiseKind::Mixed => "mixed",
            NoiseKind::Missing => "missing",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = IdtError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spn" => Ok(NoiseKind::Spn),
            "rvin" => Ok(NoiseKind::Rvin),
            "mixed" => Ok(NoiseKind::Mixed),
            "missing" => Ok(NoiseKind::Missing),
            other => Err(IdtError::InvalidArgument(format!(
                "unknown noise kind '{other}'"
            ))),
        }
    }
}

/// Parameters of an impulsive corruption.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Corruption probability per entry (SPN, RVIN, MISSING).
    pub density: f64,
    /// Probability that an SPN impulse is salt (`hi`) rather than pepper.
    pub salt_fraction: f64,
    /// `(lo, hi)` extremes for SPN and the uniform range for RVIN.
    pub value_range: (f64, f64),
    pub spn_density: f64,
    pub rvin_density: f64,
    pub seed: u64,
}

impl NoiseSpec {
    fn base(kind: NoiseKind, seed: u64) -> Self {
        Self {
            kind,
            density: 0.0,
            salt_fraction: 0.5,
            value_range: (0.0, 255.0),
            spn_density: 0.0,
            rvin_density: 0.0,
            seed,
        }
    }

    pub fn spn(density: f64, seed: u64) -> Self {
        Self {
            density,
            ..Self::base(NoiseKind::Spn, seed)
        }
    }

    pub fn rvin(density: f64, seed: u64) -> Self {
        Self {
            density,
            ..Self::base(NoiseKind::Rvin, seed)
        }
    }

    pub fn missing(density: f64, seed: u64) -> Self {
        Self {
            density,
            salt_fraction: 0.0,
            ..Self::base(NoiseKind::Missing, seed)
        }
    }

    pub fn mixed(spn_density: f64, rvin_density: f64, seed: u64) -> Self {
        Self {
            density: spn_density + rvin_density,
            spn_density,
            rvin_density,
            ..Self::base(NoiseKind::Mixed, seed)
        }
    }

    pub fn with_value_range(mut self, lo: f64, hi: f64) -> Self {
        self.value_range = (lo, hi);
        self
    }

    pub fn with_salt_fraction(mut self, salt_fraction: f64) -> Self {
        self.salt_fraction = salt_fraction;
        self
    }

    /// Total corruption probability per entry.
    pub fn total_density(&self) -> f64 {
        match self.kind {
            NoiseKind::Mixed => self.spn_density + self.rvin_density,
            _ => self.density,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(IdtError::InvalidArgument(format!(
                    "{name} must lie in [0, 1], got {v}"
                )))
            }
        };
        unit("salt_fraction", self.salt_fraction)?;
        match self.kind {
            NoiseKind::Mixed => {
                unit("spn_density", self.spn_density)?;
                unit("rvin_density", self.rvin_density)?;
                if self.spn_density + self.rvin_density > 1.0 {
                    return Err(IdtError::InvalidArgument(format!(
                        "mixed densities sum to {} > 1",
                        self.spn_density + self.rvin_density
                    )));
                }
            }
            _ => unit("density", self.density)?,
        }
        let (lo, hi) = self.value_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(IdtError::InvalidArgument(format!(
                "value range needs lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(())
    }
}

/// A clean signal, its corrupted observation and the corruption mask.
#[derive(Debug, Clone)]
pub struct CorruptedInstance<T: Scalar> {
    pub y: SignalMatrix<T>,
    pub ground_truth: SignalMatrix<T>,
    pub mask: Array2<bool>,
    pub spec: NoiseSpec,
}

impl<T: Scalar> CorruptedInstance<T> {
    pub fn corrupted_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    pub fn corrupted_fraction(&self) -> f64 {
        if self.mask.is_empty() {
            0.0
        } else {
            self.corrupted_count() as f64 / self.mask.len() as f64
        }
    }

    /// Observation-domain noise `Y − ground_truth`.
    pub fn noise(&self) -> SignalMatrix<T> {
        &self.y - &self.ground_truth
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn expect_kind(spec: &NoiseSpec, kinds: &[NoiseKind], op: &str) -> Result<()> {
    if kinds.contains(&spec.kind) {
        Ok(())
    } else {
        Err(IdtError::InvalidArgument(format!(
            "{op} called with a {} noise spec",
            spec.kind
        )))
    }
}

/// Impulse drawn for one corrupted entry.
enum Impulse {
    Extreme { salt: bool },
    Uniform(f64),
}

fn corrupt_with<T: Scalar, F>(
    x: &SignalMatrix<T>,
    spec: &NoiseSpec,
    mut draw: F,
) -> CorruptedInstance<T>
where
    F: FnMut(&mut ChaCha8Rng) -> Option<Impulse>,
{
    let mut rng = rng_for(spec.seed);
    let (lo, hi) = spec.value_range;
    let mut y = x.to_owned();
    let mut mask = Array2::from_elem(x.dim(), false);
    for (v, m) in y.iter_mut().zip(mask.iter_mut()) {
        if let Some(impulse) = draw(&mut rng) {
            *m = true;
            *v = T::lit(match impulse {
                Impulse::Extreme { salt: true } => hi,
                Impulse::Extreme { salt: false } => lo,
                Impulse::Uniform(u) => lo + (hi - lo) * u,
            });
        }
    }
    CorruptedInstance {
        y,
        ground_truth: x.to_owned(),
        mask,
        spec: spec.clone(),
    }
}

/// Salt-and-pepper noise.
pub fn add_spn<T: Scalar>(x: &SignalMatrix<T>, spec: &NoiseSpec) -> Result<CorruptedInstance<T>> {
    expect_kind(spec, &[NoiseKind::Spn, NoiseKind::Missing], "add_spn")?;
    spec.validate()?;
    let (density, salt) = (spec.density, spec.salt_fraction);
    Ok(corrupt_with(x, spec, |rng| {
        (rng.random::<f64>() < density).then(|| Impulse::Extreme {
            salt: rng.random::<f64>() < salt,
        })
    }))
}

/// Random-valued impulses, uniform on `value_range`. A draw may land on the
/// clean value; the entry still counts as corrupted.
pub fn add_rvin<T: Scalar>(x: &SignalMatrix<T>, spec: &NoiseSpec) -> Result<CorruptedInstance<T>> {
    expect_kind(spec, &[NoiseKind::Rvin], "add_rvin")?;
    spec.validate()?;
    let density = spec.density;
    Ok(corrupt_with(x, spec, |rng| {
        (rng.random::<f64>() < density).then(|| Impulse::Uniform(rng.random::<f64>()))
    }))
}

/// SPN on a `spn_density` share of entries, RVIN on a disjoint
/// `rvin_density` share.
pub fn add_mixed<T: Scalar>(x: &SignalMatrix<T>, spec: &NoiseSpec) -> Result<CorruptedInstance<T>> {
    expect_kind(spec, &[NoiseKind::Mixed], "add_mixed")?;
    spec.validate()?;
    let (p_spn, p_rvin, salt) = (spec.spn_density, spec.rvin_density, spec.salt_fraction);
    Ok(corrupt_with(x, spec, |rng| {
        let u = rng.random::<f64>();
        if u < p_spn {
            Some(Impulse::Extreme {
                salt: rng.random::<f64>() < salt,
            })
        } else if u < p_spn + p_rvin {
            Some(Impulse::Uniform(rng.random::<f64>()))
        } else {
            None
        }
    }))
}

/// Missing samples: every corrupted entry drops to `lo`.
pub fn add_missing<T: Scalar>(
    x: &SignalMatrix<T>,
    spec: &NoiseSpec,
) -> Result<CorruptedInstance<T>> {
    expect_kind(spec, &[NoiseKind::Missing], "add_missing")?;
    let spn = NoiseSpec {
        salt_fraction: 0.0,
        ..spec.clone()
    };
    add_spn(x, &spn)
}

/// Dispatches on `spec.kind`.
pub fn corrupt<T: Scalar>(x: &SignalMatrix<T>, spec: &NoiseSpec) -> Result<CorruptedInstance<T>> {
    match spec.kind {
        NoiseKind::Spn => add_spn(x, spec),
        NoiseKind::Rvin => add_rvin(x, spec),
        NoiseKind::Mixed => add_mixed(x, spec),
        NoiseKind::Missing => add_missing(x, spec),
    }
}

/// Transform-sparse signal plus observation-sparse noise.
#[derive(Debug, Clone)]
pub struct SyntheticPair<T: Scalar> {
    /// Transform-domain coefficients.
    pub x0: SignalMatrix<T>,
    /// Observation-domain noise.
    pub n0: SignalMatrix<T>,
    /// `𝒟⁻¹(x0) + n0`.
    pub y: SignalMatrix<T>,
}

impl<T: Scalar> SyntheticPair<T> {
    /// Spatial clean signal `𝒟⁻¹(x0)`.
    pub fn clean_signal(&self) -> SignalMatrix<T> {
        &self.y - &self.n0
    }
}

/// Exactly `round(rho·m·n)` nonzeros in each component at uniform random
/// positions, amplitudes `Normal(0, variance)`.
pub fn gen_synthetic_pair<T: Scalar>(
    rows: usize,
    cols: usize,
    rho_x: f64,
    rho_n: f64,
    variance: f64,
    seed: u64,
) -> Result<SyntheticPair<T>> {
    for (name, v) in [("rho_x", rho_x), ("rho_n", rho_n)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(IdtError::InvalidArgument(format!(
                "{name} must lie in [0, 1], got {v}"
            )));
        }
    }
    if !(variance.is_finite() && variance >= 0.0) {
        return Err(IdtError::InvalidArgument(format!(
            "variance must be >= 0, got {variance}"
        )));
    }
    let plan = DctPlan::<T>::new(rows, cols)?;
    let mut rng = rng_for(seed);
    let normal =
        Normal::new(0.0, variance.sqrt()).map_err(|e| IdtError::InvalidArgument(e.to_string()))?;

    let total = rows * cols;
    let sparse = |rho: f64, rng: &mut ChaCha8Rng| {
        let k = (rho * total as f64).round() as usize;
        let mut m = Array2::<T>::zeros((rows, cols));
        let slots = m.as_slice_mut().expect("fresh array is contiguous");
        for pos in index::sample(rng, total, k.min(total)).into_iter() {
            let mut v = normal.sample(rng);
            // a zero draw would silently lower the sparsity count
            while v == 0.0 {
                v = normal.sample(rng);
            }
            slots[pos] = T::lit(v);
        }
        m
    };
    let x0 = sparse(rho_x, &mut rng);
    let n0 = sparse(rho_n, &mut rng);
    let mut y = plan.inverse(&x0)?;
    y += &n0;
    Ok(SyntheticPair { x0, n0, y })
}

/// Seeded piecewise-smooth 8-bit-range test image: a smooth background,
/// soft-edged ellipses and a weak texture, clamped to `[0, 255]`.
pub fn smooth_test_image<T: Scalar>(rows: usize, cols: usize, seed: u64) -> SignalMatrix<T> {
    let mut rng = rng_for(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.5..2.5),
                rng.random_range(0.5..2.5),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(15.0..35.0),
            )
        })
        .collect();
    let blobs: Vec<(f64, f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.random_range(0.15..0.85),
                rng.random_range(0.15..0.85),
                rng.random_range(0.06..0.22),
                rng.random_range(0.06..0.22),
                rng.random_range(-70.0..70.0),
            )
        })
        .collect();
    let texture: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(8.0..20.0),
                rng.random_range(8.0..20.0),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();

    Array2::from_shape_fn((rows, cols), |(i, j)| {
        let u = i as f64 / rows.max(1) as f64;
        let v = j as f64 / cols.max(1) as f64;
        let mut p = 120.0 + 30.0 * (u - v);
        for &(fu, fv, phase, amp) in &waves {
            p += amp * (std::f64::consts::PI * (fu * u + fv * v) + phase).sin();
        }
        for &(cu, cv, ru, rv, amp) in &blobs {
            let d = ((u - cu) / ru).powi(2) + ((v - cv) / rv).powi(2);
            // logistic edge a couple of pixels wide
            let edge = 1.0 / (1.0 + ((d.sqrt() - 1.0) * 40.0).exp());
            p += amp * edge;
        }
        for &(fu, fv, phase) in &texture {
            p += 3.0 * (std::f64::consts::TAU * (fu * u + fv * v) + phase).cos();
        }
        T::lit(p.clamp(0.0, 255.0))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(v: f64) -> Array2<f64> {
        Array2::from_elem((32, 32), v)
    }

    #[test]
    fn zero_density_is_identity() {
        let x = smooth_test_image::<f64>(32, 32, 1);
        for spec in [
            NoiseSpec::spn(0.0, 3),
            NoiseSpec::rvin(0.0, 3),
            NoiseSpec::mixed(0.0, 0.0, 3),
            NoiseSpec::missing(0.0, 3),
        ] {
            let c = corrupt(&x, &spec).unwrap();
            assert_eq!(c.y, x);
            assert_eq!(c.corrupted_count(), 0);
        }
    }

    #[test]
    fn full_salt() {
        let c = add_spn(
            &flat(100.0),
            &NoiseSpec::spn(1.0, 9).with_salt_fraction(1.0),
        )
        .unwrap();
        assert!(c.y.iter().all(|v| *v == 255.0));
        assert_eq!(c.corrupted_fraction(), 1.0);
    }

    #[test]
    fn missing_goes_to_lo() {
        let c = add_missing(&flat(100.0), &NoiseSpec::missing(0.4, 2)).unwrap();
        assert!(c.corrupted_count() > 0);
        for (v, m) in c.y.iter().zip(c.mask.iter()) {
            if *m {
                assert_eq!(*v, 0.0);
            } else {
                assert_eq!(*v, 100.0);
            }
        }
    }

    #[test]
    fn invalid_specs() {
        let x = flat(1.0);
        assert!(add_spn(&x, &NoiseSpec::spn(1.5, 0)).is_err());
        assert!(add_rvin(&x, &NoiseSpec::rvin(-0.1, 0)).is_err());
        assert!(add_mixed(&x, &NoiseSpec::mixed(0.6, 0.5, 0)).is_err());
        assert!(add_spn(&x, &NoiseSpec::rvin(0.1, 0)).is_err());
        assert!(gen_synthetic_pair::<f64>(8, 8, 1.2, 0.1, 1.0, 0).is_err());
        assert!("bogus".parse::<NoiseKind>().is_err());
        assert_eq!("RVIN".parse::<NoiseKind>().unwrap(), NoiseKind::Rvin);
    }

    #[test]
    fn mixed_spn_entries_are_extreme() {
        let x = smooth_test_image::<f64>(64, 64, 5);
        let c = add_mixed(&x, &NoiseSpec::mixed(0.25, 0.15, 11)).unwrap();
        let extremes =
            c.y.iter()
                .zip(c.mask.iter())
                .filter(|(v, m)| **m && (**v == 0.0 || **v == 255.0))
                .count();
        // roughly 25/40 of the corrupted set, and never outside the mask
        assert!(extremes as f64 > 0.5 * c.corrupted_count() as f64);
        for ((y, g), m) in c.y.iter().zip(c.ground_truth.iter()).zip(c.mask.iter()) {
            if !m {
                assert_eq!(y, g);
            }
        }
    }

    #[test]
    fn synthetic_pair_counts() {
        let p = gen_synthetic_pair::<f64>(20, 30, 0.1, 0.25, 128.0, 4).unwrap();
        assert_eq!(p.x0.iter().filter(|v| **v != 0.0).count(), 60);
        assert_eq!(p.n0.iter().filter(|v| **v != 0.0).count(), 150);

        let z = gen_synthetic_pair::<f64>(8, 8, 0.0, 0.0, 128.0, 4).unwrap();
        assert!(z.y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn same_seed_same_instance() {
        let a = gen_synthetic_pair::<f64>(16, 16, 0.2, 0.2, 128.0, 77).unwrap();
        let b = gen_synthetic_pair::<f64>(16, 16, 0.2, 0.2, 128.0, 77).unwrap();
        assert_eq!(a.y, b.y);
        let x = smooth_test_image::<f64>(16, 16, 1);
        let c1 = corrupt(&x, &NoiseSpec::rvin(0.3, 5)).unwrap();
        let c2 = corrupt(&x, &NoiseSpec::rvin(0.3, 5)).unwrap();
        assert_eq!(c1.y, c2.y);
        let c3 = corrupt(&x, &NoiseSpec::rvin(0.3, 6)).unwrap();
        assert_ne!(c1.y, c3.y);
    }

    #[test]
    fn test_image_is_in_range() {
        let img = smooth_test_image::<f64>(64, 48, 3);
        assert!(img.iter().all(|v| (0.0..=255.0).contains(v)));
        let spread = img.iter().cloned().fold(f64::MIN, f64::max)
            - img.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 60.0);
    }
}

//! Coherence, uniqueness checks and exhaustive oracles for tiny instances.
//!
//! Matrices are vectorized row-major. The dictionary of the model
//! `y = 𝒟⁻¹(x) + n` is `[𝒟⁻¹ | I]`, so a candidate support is a subset of
//! `2·len` columns: indices below `len` address `x`, the rest address `n`.

use itertools::Itertools;
use log::warn;
use ndarray::Array2;

use crate::error::{check_same_shape, IdtError, Result};
use crate::metrics::frobenius_norm;
use crate::scalar::Scalar;
use crate::transforms::{dct_matrix, is_orthonormal, kron_infnorm, max_abs, DctPlan, SignalMatrix};

/// Maximum number of supports an exhaustive search may visit.
pub const ENUMERATION_BUDGET: u128 = 1_000_000;
/// Default exact-solution tolerance, relative to `‖Y‖`.
pub const DEFAULT_EXACT_TOL_REL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniquenessReport<T: Scalar> {
    /// Mutual coherence `‖vec(Bᵀ⊗A)‖∞`.
    pub coherence: T,
    /// `½(1 + 1/coherence)`.
    pub bound: T,
    pub k1: usize,
    pub k2: usize,
    /// `k1 + k2 < bound`.
    pub satisfied: bool,
}

/// Coherence between the identity and the orthonormal basis `c`: its
/// largest absolute entry.
pub fn mutual_coherence<T: Scalar>(c: &SignalMatrix<T>) -> Result<T> {
    if c.is_empty() {
        return Err(IdtError::Empty("mutual_coherence"));
    }
    if !is_orthonormal(c, T::lit(1e-9)) {
        warn!("mutual_coherence: input is not orthonormal");
    }
    Ok(max_abs(c))
}

/// Evaluates the sparsity uniqueness condition for the `m×n` DCT.
pub fn check_uniqueness<T: Scalar>(
    m: usize,
    n: usize,
    k1: usize,
    k2: usize,
    plan: &DctPlan<T>,
) -> Result<UniquenessReport<T>> {
    check_same_shape(plan.shape(), (m, n))?;
    let a = dct_matrix::<T>(m)?.reversed_axes();
    let b = dct_matrix::<T>(n)?;
    let coherence = kron_infnorm(&a, &b)?;
    let bound = T::lit(0.5) * (T::one() + coherence.recip());
    Ok(UniquenessReport {
        coherence,
        bound,
        k1,
        k2,
        satisfied: T::from_usize_lossy(k1 + k2) < bound,
    })
}

/// Columns of `[𝒟⁻¹ | I]` as a `len × 2·len` matrix.
fn dictionary<T: Scalar>(plan: &DctPlan<T>) -> Result<Array2<T>> {
    let (rows, cols) = plan.shape();
    let len = rows * cols;
    let mut dict = Array2::zeros((len, 2 * len));
    let mut unit = Array2::zeros((rows, cols));
    for j in 0..len {
        unit[[j / cols, j % cols]] = T::one();
        let atom = plan.inverse(&unit)?;
        unit[[j / cols, j % cols]] = T::zero();
        for (i, v) in atom.iter().enumerate() {
            dict[[i, j]] = *v;
        }
        dict[[j, len + j]] = T::one();
    }
    Ok(dict)
}

/// Least-squares solution of `a·x ≈ b` through the normal equations,
/// eliminated with full pivoting. Rank-deficient directions get zero.
fn least_squares<T: Scalar>(a: &Array2<T>, b: &[T]) -> Vec<T> {
    let k = a.ncols();
    let mut g = a.t().dot(a);
    let mut rhs: Vec<T> = (0..k)
        .map(|j| a.column(j).iter().zip(b).map(|(x, y)| *x * *y).sum())
        .collect();
    let scale = g.diag().iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    let tiny = T::lit(1e-12) * scale.max(T::min_positive_value());

    let mut perm: Vec<usize> = (0..k).collect();
    let mut rank = 0;
    for step in 0..k {
        let mut best = (step, step, T::zero());
        for r in step..k {
            for c in step..k {
                if g[[r, c]].abs() > best.2 {
                    best = (r, c, g[[r, c]].abs());
                }
            }
        }
        if best.2 <= tiny {
            break;
        }
        let (pr, pc, _) = best;
        for c in 0..k {
            g.swap([step, c], [pr, c]);
        }
        rhs.swap(step, pr);
        for r in 0..k {
            g.swap([r, step], [r, pc]);
        }
        perm.swap(step, pc);
        for r in step + 1..k {
            let f = g[[r, step]] / g[[step, step]];
            if f == T::zero() {
                continue;
            }
            for c in step..k {
                let sub = f * g[[step, c]];
                g[[r, c]] -= sub;
            }
            let sub = f * rhs[step];
            rhs[r] -= sub;
        }
        rank += 1;
    }

    let mut z = vec![T::zero(); k];
    for i in (0..rank).rev() {
        let mut acc = rhs[i];
        for c in i + 1..rank {
            acc -= g[[i, c]] * z[c];
        }
        z[i] = acc / g[[i, i]];
    }
    let mut x = vec![T::zero(); k];
    for (i, p) in perm.iter().enumerate() {
        x[*p] = z[i];
    }
    x
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// One exact decomposition found by [`brute_force_sparsest`].
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSolution<T: Scalar> {
    /// Row-major indices of the nonzero transform coefficients.
    pub support_x: Vec<usize>,
    /// Row-major indices of the nonzero noise entries.
    pub support_n: Vec<usize>,
    pub x: SignalMatrix<T>,
    pub n: SignalMatrix<T>,
}

impl<T: Scalar> SparseSolution<T> {
    pub fn sparsity(&self) -> usize {
        self.support_x.len() + self.support_n.len()
    }
}

/// All decompositions `y = 𝒟⁻¹(x) + n` of minimal total sparsity up to
/// `k_max`, in lexicographic support order. Empty when none exists.
///
/// `tol` bounds the residual `‖𝒟⁻¹(x) + n − y‖`; `None` means
/// `1e-8·‖y‖`.
pub fn brute_force_sparsest<T: Scalar>(
    y: &SignalMatrix<T>,
    plan: &DctPlan<T>,
    k_max: usize,
    tol: Option<T>,
) -> Result<Vec<SparseSolution<T>>> {
    check_same_shape(plan.shape(), y.dim())?;
    let (rows, cols) = y.dim();
    let len = rows * cols;
    let supports: u128 = (0..=k_max.min(2 * len))
        .map(|s| binomial(2 * len as u128, s as u128))
        .fold(0u128, |a, b| a.saturating_add(b));
    if supports > ENUMERATION_BUDGET {
        return Err(IdtError::BudgetExceeded {
            needed: supports,
            budget: ENUMERATION_BUDGET,
        });
    }
    let tol = tol.unwrap_or_else(|| T::lit(DEFAULT_EXACT_TOL_REL) * frobenius_norm(y));
    let dict = dictionary(plan)?;
    let yv: Vec<T> = y.iter().copied().collect();

    for s in 0..=k_max.min(2 * len) {
        let mut found = Vec::new();
        for support in (0..2 * len).combinations(s) {
            let sub = dict.select(ndarray::Axis(1), &support);
            let coef = least_squares(&sub, &yv);
            let fit = sub.dot(&ndarray::Array1::from(coef.clone()));
            let resid = fit
                .iter()
                .zip(&yv)
                .map(|(a, b)| (*a - *b) * (*a - *b))
                .sum::<T>()
                .sqrt();
            if resid > tol {
                continue;
            }
            let mut x = Array2::zeros((rows, cols));
            let mut n = Array2::zeros((rows, cols));
            let (mut support_x, mut support_n) = (Vec::new(), Vec::new());
            for (idx, c) in support.iter().zip(coef) {
                if *idx < len {
                    x[[idx / cols, idx % cols]] = c;
                    support_x.push(*idx);
                } else {
                    let j = idx - len;
                    n[[j / cols, j % cols]] = c;
                    support_n.push(j);
                }
            }
            found.push(SparseSolution {
                support_x,
                support_n,
                x,
                n,
            });
        }
        if !found.is_empty() {
            return Ok(found);
        }
    }
    Ok(Vec::new())
}

/// The best feasible pair for one fixed support pattern `(t1, t2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportTuple<T: Scalar> {
    pub t1: Array2<bool>,
    pub t2: Array2<bool>,
    pub x: SignalMatrix<T>,
    pub n: SignalMatrix<T>,
    /// `‖(1−T1)⊙X‖² + ‖(1−T2)⊙N‖²` at the optimum over the feasible set.
    pub off_support_energy: T,
}

impl<T: Scalar> SupportTuple<T> {
    pub fn support_size(&self) -> usize {
        self.t1.iter().chain(self.t2.iter()).filter(|b| **b).count()
    }

    /// Surrogate cost `energy + λ·(|T1| + |T2|)`.
    pub fn cost(&self, lambda: T) -> T {
        self.off_support_energy + lambda * T::from_usize_lossy(self.support_size())
    }
}

/// For every pair of binary support masks, the feasible `(X, N)` minimizing
/// the off-support energy. Masks are enumerated as bit patterns over the
/// row-major `x` entries followed by the `n` entries.
pub fn enumerate_support_tuples<T: Scalar>(
    y: &SignalMatrix<T>,
    plan: &DctPlan<T>,
) -> Result<Vec<SupportTuple<T>>> {
    check_same_shape(plan.shape(), y.dim())?;
    let (rows, cols) = y.dim();
    let len = rows * cols;
    let patterns = 1u128.checked_shl(2 * len as u32).unwrap_or(u128::MAX);
    if patterns > ENUMERATION_BUDGET {
        return Err(IdtError::BudgetExceeded {
            needed: patterns,
            budget: ENUMERATION_BUDGET,
        });
    }
    let dict = dictionary(plan)?;
    let inv = dict.slice(ndarray::s![.., ..len]).to_owned();
    let yv: Vec<T> = y.iter().copied().collect();

    // Eliminating n = y − 𝒟⁻¹x leaves an unconstrained least-squares
    // problem in x over the off-support rows.
    let mut out = Vec::with_capacity(patterns as usize);
    for bits in 0..patterns as usize {
        let on = |i: usize| bits >> i & 1 == 1;
        let mut a = Array2::zeros((2 * len, len));
        let mut b = vec![T::zero(); 2 * len];
        for j in 0..len {
            if !on(j) {
                a[[j, j]] = T::one();
            }
            if !on(len + j) {
                for c in 0..len {
                    a[[len + j, c]] = inv[[j, c]];
                }
                b[len + j] = yv[j];
            }
        }
        let xv = least_squares(&a, &b);
        let x = Array2::from_shape_vec((rows, cols), xv).expect("length matches shape");
        let mut n = plan.inverse(&x)?;
        n.zip_mut_with(y, |v, yy| *v = *yy - *v);

        let t1 = Array2::from_shape_fn((rows, cols), |(i, j)| on(i * cols + j));
        let t2 = Array2::from_shape_fn((rows, cols), |(i, j)| on(len + i * cols + j));
        let mut energy = T::zero();
        for ((v, s), (w, u)) in x.iter().zip(t1.iter()).zip(n.iter().zip(t2.iter())) {
            if !s {
                energy += *v * *v;
            }
            if !u {
                energy += *w * *w;
            }
        }
        out.push(SupportTuple {
            t1,
            t2,
            x,
            n,
            off_support_energy: energy,
        });
    }
    Ok(out)
}

/// Smallest off-support energy above `zero_tol`; `None` if every tuple is
/// (numerically) exact.
pub fn min_nonzero_energy<T: Scalar>(tuples: &[SupportTuple<T>], zero_tol: T) -> Option<T> {
    tuples
        .iter()
        .map(|t| t.off_support_energy)
        .filter(|e| *e > zero_tol)
        .fold(None, |best: Option<T>, e| {
            Some(best.map_or(e, |b| b.min(e)))
        })
}

/// The tuple of least surrogate cost at `lambda`; the first one wins ties.
pub fn minimize_cost<T: Scalar>(tuples: &[SupportTuple<T>], lambda: T) -> Option<&SupportTuple<T>> {
    tuples
        .iter()
        .fold(None, |best: Option<&SupportTuple<T>>, t| match best {
            Some(b) if b.cost(lambda) <= t.cost(lambda) => Some(b),
            _ => Some(t),
        })
}

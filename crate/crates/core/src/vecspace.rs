//! Dense vectors and symmetric operators at desk scale (dim <= 16).
//!
//! Everything here is immutable after construction and safe to share across
//! threads. Spectral quantities are computed by power iteration; exact
//! eigensolvers are only used as independent oracles in the test suite.

use serde::Serialize;
use thiserror::Error;

/// Default relative tolerance for power iteration.
pub const POWER_ITERATION_TOL: f64 = 1e-10;
/// Iteration cap for power iteration.
pub const POWER_ITERATION_CAP: usize = 10_000;
/// Largest asymmetry defect accepted when constructing a [`SymOperator`].
pub const ASYMMETRY_DEFECT_LIMIT: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },
    #[error("empty vector or zero dimension")]
    ZeroDim,
    #[error("asymmetry defect {defect:.3e} exceeds limit {limit:.3e}")]
    Asymmetric { defect: f64, limit: f64 },
    #[error("matrix is singular or too ill-conditioned to solve")]
    Singular,
    #[error("power iteration did not converge after {iterations} iterations (last estimate {last_estimate:.6e})")]
    PowerIterationStalled { iterations: usize, last_estimate: f64 },
}

/// A point of the ambient real inner-product space.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self, SpaceError> {
        if entries.is_empty() {
            return Err(SpaceError::ZeroDim);
        }
        for (index, e) in entries.iter().enumerate() {
            if !e.is_finite() {
                return Err(SpaceError::NonFinite { index });
            }
        }
        Ok(Vector(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        Vector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn add(&self, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|a| c * a).collect())
    }

    /// self + c * other
    pub fn axpy(&self, c: f64, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim());
        Vector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + c * b)
                .collect(),
        )
    }

    pub fn norm(&self) -> f64 {
        inner(self, self).expect("same vector").sqrt()
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Scalar product of two vectors of equal dimension.
pub fn inner(x: &Vector, y: &Vector) -> Result<f64, SpaceError> {
    if x.dim() != y.dim() {
        return Err(SpaceError::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    Ok(x.0.iter().zip(&y.0).map(|(a, b)| a * b).sum())
}

/// Half squared norm.
pub fn half_sq_norm(x: &Vector) -> f64 {
    0.5 * inner(x, x).expect("same vector")
}

/// A self-adjoint bounded linear operator stored as a dense symmetric matrix.
///
/// Construction symmetrizes the input as `(A + A^T) / 2` and rejects inputs
/// whose asymmetry defect exceeds [`ASYMMETRY_DEFECT_LIMIT`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymOperator {
    data: Vec<f64>, // row-major d*d
    dim: usize,
}

impl SymOperator {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, SpaceError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(SpaceError::ZeroDim);
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(SpaceError::DimensionMismatch {
                    left: dim,
                    right: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_raw(data, dim)
    }

    /// Builds from a row-major buffer, symmetrizing and recording the defect.
    pub fn from_raw(data: Vec<f64>, dim: usize) -> Result<Self, SpaceError> {
        if dim == 0 || data.len() != dim * dim {
            return Err(SpaceError::ZeroDim);
        }
        for (index, e) in data.iter().enumerate() {
            if !e.is_finite() {
                return Err(SpaceError::NonFinite { index });
            }
        }
        let mut defect = 0.0f64;
        let mut sym = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let a = data[i * dim + j];
                let b = data[j * dim + i];
                let scale = 1.0f64.max(a.abs());
                defect = defect.max((a - b).abs() / scale);
                sym[i * dim + j] = 0.5 * (a + b);
            }
        }
        if defect > ASYMMETRY_DEFECT_LIMIT {
            return Err(SpaceError::Asymmetric {
                defect,
                limit: ASYMMETRY_DEFECT_LIMIT,
            });
        }
        Ok(SymOperator { data: sym, dim })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        SymOperator { data, dim }
    }

    pub fn zero(dim: usize) -> Self {
        SymOperator {
            data: vec![0.0; dim * dim],
            dim,
        }
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self, SpaceError> {
        let dim = entries.len();
        if dim == 0 {
            return Err(SpaceError::ZeroDim);
        }
        let mut data = vec![0.0; dim * dim];
        for (i, &e) in entries.iter().enumerate() {
            if !e.is_finite() {
                return Err(SpaceError::NonFinite { index: i });
            }
            data[i * dim + i] = e;
        }
        Ok(SymOperator { data, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector, SpaceError> {
        if x.dim() != self.dim {
            return Err(SpaceError::DimensionMismatch {
                left: self.dim,
                right: x.dim(),
            });
        }
        let mut out = vec![0.0; self.dim];
        for i in 0..self.dim {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            out[i] = row.iter().zip(x.entries()).map(|(a, b)| a * b).sum();
        }
        Ok(Vector(out))
    }

    pub fn scale(&self, c: f64) -> SymOperator {
        SymOperator {
            data: self.data.iter().map(|a| c * a).collect(),
            dim: self.dim,
        }
    }

    pub fn add(&self, other: &SymOperator) -> Result<SymOperator, SpaceError> {
        if self.dim != other.dim {
            return Err(SpaceError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(SymOperator {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
            dim: self.dim,
        })
    }

    pub fn sub(&self, other: &SymOperator) -> Result<SymOperator, SpaceError> {
        self.add(&other.scale(-1.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Solves `self * x = rhs` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, rhs: &Vector) -> Result<Vector, SpaceError> {
        if rhs.dim() != self.dim {
            return Err(SpaceError::DimensionMismatch {
                left: self.dim,
                right: rhs.dim(),
            });
        }
        let n = self.dim;
        let mut a = self.data.clone();
        let mut b = rhs.entries().to_vec();
        for col in 0..n {
            let mut pivot = col;
            for r in col + 1..n {
                if a[r * n + col].abs() > a[pivot * n + col].abs() {
                    pivot = r;
                }
            }
            if a[pivot * n + col].abs() < 1e-14 * self.frobenius_norm().max(1.0) {
                return Err(SpaceError::Singular);
            }
            if pivot != col {
                for c in 0..n {
                    a.swap(col * n + c, pivot * n + c);
                }
                b.swap(col, pivot);
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let factor = a[r * n + col] / d;
                if factor == 0.0 {
                    continue;
                }
                for c in col..n {
                    a[r * n + c] -= factor * a[col * n + c];
                }
                b[r] -= factor * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let mut s = b[row];
            for c in row + 1..n {
                s -= a[row * n + c] * x[c];
            }
            x[row] = s / a[row * n + row];
        }
        Vector::new(x)
    }

    /// Dense inverse via column-by-column solves.
    pub fn inverse(&self) -> Result<SymOperator, SpaceError> {
        let n = self.dim;
        let mut data = vec![0.0; n * n];
        for col in 0..n {
            let mut e = vec![0.0; n];
            e[col] = 1.0;
            let x = self.solve(&Vector(e))?;
            for row in 0..n {
                data[row * n + col] = x[row];
            }
        }
        SymOperator::from_raw(data, n)
    }

    /// Rayleigh quotient `<x, Ax> / <x, x>`.
    fn rayleigh(&self, x: &Vector) -> f64 {
        let ax = self.apply(x).expect("dim checked");
        inner(x, &ax).expect("dim checked") / inner(x, x).expect("dim checked")
    }
}

/// Deterministic start vector for power iteration.
fn power_start(dim: usize) -> Vector {
    let mut state = 0x9e37_79b9_7f4a_7c15u64 ^ (dim as u64).wrapping_mul(0xd129_42b8_8c5f_b1cd);
    let mut v = Vec::with_capacity(dim);
    for _ in 0..dim {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let u = (state >> 11) as f64 / (1u64 << 53) as f64;
        v.push(u + 0.1); // strictly positive, avoids pathological zeros
    }
    Vector(v)
}

/// Largest absolute eigenvalue of a symmetric operator.
///
/// Runs power iteration on `A*A` so the dominant eigenvalue is `|lambda|_max^2`
/// regardless of sign. Errors after [`POWER_ITERATION_CAP`] iterations,
/// carrying the last estimate.
pub fn op_norm(a: &SymOperator, tol: f64) -> Result<f64, SpaceError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let mut v = power_start(a.dim());
    let mut prev = f64::INFINITY;
    for it in 0..POWER_ITERATION_CAP {
        let av = a.apply(&v).expect("dim");
        let aav = a.apply(&av).expect("dim");
        let norm = aav.norm();
        if norm == 0.0 {
            // A^2 v = 0; for symmetric A and generic v this means A = 0 on the
            // cyclic subspace; the Rayleigh quotient of A^2 is the answer.
            let av_norm2 = inner(&av, &av).expect("dim") / inner(&v, &v).expect("dim");
            return Ok(av_norm2.sqrt());
        }
        v = aav.scale(1.0 / norm);
        let lambda_sq = {
            let av2 = a.apply(&v).expect("dim");
            inner(&av2, &av2).expect("dim") / inner(&v, &v).expect("dim")
        };
        if it > 0 && (lambda_sq - prev).abs() <= tol * lambda_sq.abs().max(1e-300) {
            return Ok(lambda_sq.sqrt());
        }
        prev = lambda_sq;
    }
    Err(SpaceError::PowerIterationStalled {
        iterations: POWER_ITERATION_CAP,
        last_estimate: prev.sqrt(),
    })
}

/// Smallest and largest eigenvalues via spectral shifts.
///
/// Uses power iteration on `s*Id + A` and `s*Id - A` with `s` one past the
/// Frobenius bound, which makes both shifted operators PSD with dominant
/// eigenvalues `s + lambda_max` and `s - lambda_min`. This is an independent
/// route from [`op_norm`]'s `A*A` iteration, so agreement between the two is a
/// meaningful cross-check.
pub fn extreme_eigenvalues(a: &SymOperator, tol: f64) -> Result<(f64, f64), SpaceError> {
    let s = a.frobenius_norm() + 1.0;
    let shifted_plus = SymOperator::identity(a.dim()).scale(s).add(a)?;
    let shifted_minus = SymOperator::identity(a.dim()).scale(s).sub(a)?;
    let top_plus = dominant_eigenvalue_psd(&shifted_plus, tol)?;
    let top_minus = dominant_eigenvalue_psd(&shifted_minus, tol)?;
    Ok((s - top_minus, top_plus - s))
}

/// Dominant eigenvalue of a PSD operator by plain power iteration.
fn dominant_eigenvalue_psd(a: &SymOperator, tol: f64) -> Result<f64, SpaceError> {
    assert!(tol > 0.0);
    let mut v = power_start(a.dim());
    let mut prev = f64::INFINITY;
    for it in 0..POWER_ITERATION_CAP {
        let av = a.apply(&v).expect("dim");
        let norm = av.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        v = av.scale(1.0 / norm);
        let lambda = a.rayleigh(&v);
        if it > 0 && (lambda - prev).abs() <= tol * lambda.abs().max(1e-300) {
            return Ok(lambda);
        }
        prev = lambda;
    }
    Err(SpaceError::PowerIterationStalled {
        iterations: POWER_ITERATION_CAP,
        last_estimate: prev,
    })
}

/// True iff every eigenvalue of `a` lies in `[-1 - tol, 1 + tol]`.
pub fn sandwich_check(a: &SymOperator, tol: f64) -> Result<bool, SpaceError> {
    let (lo, hi) = extreme_eigenvalues(a, POWER_ITERATION_TOL)?;
    Ok(lo >= -1.0 - tol && hi <= 1.0 + tol)
}

/// True iff the smallest eigenvalue of `a` is at least `-tol`.
pub fn psd_check(a: &SymOperator, tol: f64) -> Result<bool, SpaceError> {
    let (lo, _) = extreme_eigenvalues(a, POWER_ITERATION_TOL)?;
    Ok(lo >= -tol)
}

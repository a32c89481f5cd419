//! Vectors, unit vectors, matrices and the two basic samplers.

use std::ops::Deref;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm_sq<T: Real>(a: &[T]) -> T {
    dot(a, a)
}

#[inline]
pub fn norm<T: Real>(a: &[T]) -> T {
    norm_sq(a).sqrt()
}

pub fn norm_inf<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn scale<T: Real>(a: &[T], s: T) -> Vec<T> {
    a.iter().map(|&x| x * s).collect()
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn check_finite<T: Real>(v: &[T], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// A point of the unit sphere `S^{n-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitVector<T> {
    coords: Vec<T>,
}

impl<T: Real> UnitVector<T> {
    /// Accepts `coords` if its norm is 1 within `1e-12` (relative to the
    /// scalar precision).
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Dimension { min: 1, got: 0 });
        }
        check_finite(&coords, "unit vector")?;
        let nrm = norm(&coords);
        if (nrm - T::one()).abs() > T::snap_tol() * T::lit(coords.len() as f64).sqrt().max(T::one()) {
            return Err(invalid("coords", format!("norm {nrm} is not 1")));
        }
        Ok(Self { coords })
    }

    /// Normalizes a non-zero finite vector.
    pub fn normalize(coords: Vec<T>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Dimension { min: 1, got: 0 });
        }
        check_finite(&coords, "vector to normalize")?;
        let nrm = norm(&coords);
        if nrm <= T::zero() {
            return Err(invalid("coords", "cannot normalize the zero vector"));
        }
        Ok(Self { coords: coords.into_iter().map(|x| x / nrm).collect() })
    }

    /// Standard basis vector `e_i`.
    pub fn axis(n: usize, i: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension { min: 1, got: 0 });
        }
        if i >= n {
            return Err(invalid("i", format!("axis {i} out of range for dimension {n}")));
        }
        let mut coords = vec![T::zero(); n];
        coords[i] = T::one();
        Ok(Self { coords })
    }

    /// Uniform sample on `S^{n-1}` by normalizing a standard Gaussian vector.
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        sample_sphere_uniform(n, rng)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<T> {
        self.coords
    }

    pub fn neg(&self) -> Self {
        Self { coords: self.coords.iter().map(|&x| -x).collect() }
    }
}

impl<T> Deref for UnitVector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.coords
    }
}

impl<T> AsRef<[T]> for UnitVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.coords
    }
}

/// I.i.d. standard normal coordinates.
pub fn sample_gaussian<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<T>> {
    if n == 0 {
        return Err(Error::Dimension { min: 1, got: 0 });
    }
    Ok(gaussian_vec(n, rng))
}

#[inline]
pub(crate) fn gaussian_vec<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<T> {
    (0..n).map(|_| T::lit(rng.sample::<f64, _>(StandardNormal))).collect()
}

pub fn sample_sphere_uniform<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<UnitVector<T>> {
    if n == 0 {
        return Err(Error::Dimension { min: 1, got: 0 });
    }
    loop {
        let g: Vec<T> = gaussian_vec(n, rng);
        let nrm = norm(&g);
        // Zero or subnormal norms have probability zero; redraw.
        if nrm > T::min_positive_value().sqrt() {
            return Ok(UnitVector { coords: g.into_iter().map(|x| x / nrm).collect() });
        }
    }
}

/// Dense row-major `rows x cols` matrix, a linear map `R^cols -> R^rows`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> RealMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension { min: 1, got: rows.min(cols) });
        }
        check_dim(rows * cols, data.len())?;
        check_finite(&data, "matrix")?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        for r in rows {
            check_dim(cols, r.len())?;
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = T::one();
        }
        Self::new(n, n, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.cols, x.len())?;
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `|A e_i|^2` for every column `i`.
    pub fn column_norms_sq(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * a;
            }
        }
        out
    }

    /// Squared Hilbert-Schmidt (Frobenius) norm.
    pub fn hs_norm_sq(&self) -> T {
        norm_sq(&self.data)
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: scale(&self.data, s) }
    }
}

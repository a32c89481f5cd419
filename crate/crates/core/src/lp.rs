//! Dense two-phase simplex for small linear programs
//! `min c^T x  s.t.  A x = b, x >= 0`.
//!
//! Sized for a handful of rows and up to a few thousand columns, which is
//! the shape of the gauge problems in the slicing module.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { x: Vec<T>, value: T },
    Infeasible,
    Unbounded,
}

struct Tableau<T> {
    rows: usize,
    width: usize,
    data: Vec<T>,
    basis: Vec<usize>,
}

impl<T: Real> Tableau<T> {
    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        self.data[i * self.width + j]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = T::one() / self.at(pr, pc);
        for j in 0..w {
            self.data[pr * w + j] *= inv;
        }
        for i in 0..=self.rows {
            if i == pr {
                continue;
            }
            let f = self.at(i, pc);
            if f != T::zero() {
                for j in 0..w {
                    let v = self.data[pr * w + j];
                    self.data[i * w + j] -= f * v;
                }
            }
        }
        self.basis[pr] = pc;
    }

    /// Runs simplex iterations on the objective row (index `rows`) over
    /// columns `0..allowed`. Returns `false` if unbounded.
    fn optimize(&mut self, allowed: usize, tol: T, max_iter: usize) -> Result<bool> {
        let rhs = self.width - 1;
        let bland_after = max_iter / 2;
        for iter in 0..max_iter {
            let obj = self.rows;
            let mut enter = None;
            let mut best = -tol;
            for j in 0..allowed {
                let d = self.at(obj, j);
                if d < best {
                    enter = Some(j);
                    if iter >= bland_after {
                        break;
                    }
                    best = d;
                }
            }
            let Some(pc) = enter else { return Ok(true) };
            let mut leave = None;
            let mut ratio = T::infinity();
            for i in 0..self.rows {
                let a = self.at(i, pc);
                if a > tol {
                    let q = self.at(i, rhs) / a;
                    if q < ratio || (q == ratio && leave.is_some_and(|l: usize| self.basis[i] < self.basis[l])) {
                        ratio = q;
                        leave = Some(i);
                    }
                }
            }
            let Some(pr) = leave else { return Ok(false) };
            self.pivot(pr, pc);
        }
        Err(Error::Solver(format!("simplex did not converge in {max_iter} iterations")))
    }
}

/// Solves `min c^T x` subject to `A x = b`, `x >= 0`, with `A` given
/// row-major as `rows x c.len()`.
pub fn minimize<T: Real>(c: &[T], a: &[T], b: &[T]) -> Result<LpOutcome<T>> {
    let m = b.len();
    let n = c.len();
    if a.len() != m * n {
        return Err(Error::DimensionMismatch { expected: m * n, found: a.len() });
    }
    if a.iter().chain(b).chain(c).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("lp data"));
    }
    let scale = a.iter().chain(b).fold(T::one(), |s, v| s.max(v.abs()));
    let tol = T::lit(1e-11).max(T::epsilon() * T::lit(1e3)) * scale;

    // Columns: n structural, m artificial, 1 right-hand side.
    let width = n + m + 1;
    let mut data = vec![T::zero(); (m + 1) * width];
    for i in 0..m {
        let sign = if b[i] < T::zero() { -T::one() } else { T::one() };
        for j in 0..n {
            data[i * width + j] = sign * a[i * n + j];
        }
        data[i * width + n + i] = T::one();
        data[i * width + width - 1] = sign * b[i];
    }
    // Phase one objective: sum of artificials, expressed in reduced form.
    for j in 0..width {
        if j >= n && j < n + m {
            continue;
        }
        let s: T = (0..m).map(|i| data[i * width + j]).sum();
        data[m * width + j] = -s;
    }
    let mut tab = Tableau { rows: m, width, data, basis: (n..n + m).collect() };
    let max_iter = 50 * (n + m) + 1000;
    tab.optimize(n + m, tol, max_iter)?;
    if -tab.at(m, width - 1) > tol * T::lit(10.0) {
        return Ok(LpOutcome::Infeasible);
    }
    // Drive remaining artificials out of the basis where possible.
    for i in 0..m {
        if tab.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| tab.at(i, j).abs() > tol) {
                tab.pivot(i, j);
            }
        }
    }
    // Phase two objective, barring artificial columns.
    for (j, cell) in tab.data[m * width..(m + 1) * width].iter_mut().enumerate() {
        *cell = if j < n { c[j] } else { T::zero() };
    }
    for i in 0..m {
        let bj = tab.basis[i];
        if bj < n {
            let cb = c[bj];
            if cb != T::zero() {
                for j in 0..width {
                    let v = tab.at(i, j);
                    tab.data[m * width + j] -= cb * v;
                }
            }
        }
    }
    if !tab.optimize(n, tol, max_iter)? {
        return Ok(LpOutcome::Unbounded);
    }
    let mut x = vec![T::zero(); n];
    for i in 0..m {
        if tab.basis[i] < n {
            x[tab.basis[i]] = tab.at(i, width - 1).max(T::zero());
        }
    }
    let value = x.iter().zip(c).map(|(&xi, &ci)| xi * ci).sum();
    Ok(LpOutcome::Optimal { x, value })
}

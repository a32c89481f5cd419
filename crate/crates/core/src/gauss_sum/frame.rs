use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::{check_dim, check_finite, dot, sample_sphere_uniform, UnitVector};
use crate::scalar::{phi, Real};

/// `N` unit vectors `theta_k` and an amplitude `r`: the data of
/// `F(eta, t) = (1/N) sum_k phi(r <eta, theta_k> + t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame<T> {
    n: usize,
    thetas: Vec<T>,
    r: T,
}

impl<T: Real> Frame<T> {
    pub fn new(thetas: &[UnitVector<T>], r: T) -> Result<Self> {
        let first = thetas.first().ok_or_else(|| invalid("thetas", "frame needs at least one vector"))?;
        let n = first.dim();
        for th in thetas {
            check_dim(n, th.dim())?;
        }
        Self::check_r(r)?;
        Ok(Self { n, thetas: thetas.iter().flat_map(|t| t.iter().copied()).collect(), r })
    }

    fn check_r(r: T) -> Result<()> {
        if r.is_finite() && r > T::zero() {
            Ok(())
        } else {
            Err(invalid("r", format!("amplitude must be positive, got {r}")))
        }
    }

    /// `count` independent uniform directions in dimension `n`.
    pub fn sample<R: Rng + ?Sized>(n: usize, count: usize, r: T, rng: &mut R) -> Result<Self> {
        if count == 0 {
            return Err(invalid("N", "frame needs at least one vector"));
        }
        Self::check_r(r)?;
        let mut thetas = Vec::with_capacity(n * count);
        for _ in 0..count {
            thetas.extend(sample_sphere_uniform::<T, _>(n, rng)?.into_vec());
        }
        Ok(Self { n, thetas, r })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.thetas.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn r(&self) -> T {
        self.r
    }

    pub fn with_r(&self, r: T) -> Result<Self> {
        Self::check_r(r)?;
        Ok(Self { n: self.n, thetas: self.thetas.clone(), r })
    }

    pub fn theta(&self, k: usize) -> &[T] {
        &self.thetas[k * self.n..(k + 1) * self.n]
    }

    pub fn thetas(&self) -> impl Iterator<Item = &[T]> {
        self.thetas.chunks_exact(self.n)
    }

    /// `r <eta, theta_k>` for every `k`.
    pub fn projections(&self, eta: &[T]) -> Vec<T> {
        self.thetas().map(|th| self.r * dot(eta, th)).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        writeln!(out, "# r={}", self.r)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record((1..=self.n).map(|i| format!("theta_{i}")))?;
        for th in self.thetas() {
            w.write_record(th.iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let r: f64 = first
            .trim()
            .strip_prefix("# r=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| invalid("frame csv", "missing `# r=` header"))?;
        let mut rd = csv::Reader::from_reader(input);
        let mut thetas = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let v: Vec<T> = rec
                .iter()
                .map(|x| x.parse::<f64>().map(T::lit).map_err(|_| invalid("frame csv", format!("bad number `{x}`"))))
                .collect::<Result<_>>()?;
            thetas.push(UnitVector::new(v)?);
        }
        Self::new(&thetas, T::lit(r))
    }
}

/// `(1/N) sum_k phi(p_k + t)` for precomputed projections `p_k`.
#[inline]
pub fn mean_phi_shifted<T: Real>(proj: &[T], t: T) -> T {
    let s: T = proj.iter().map(|&p| phi(p + t)).sum();
    s / T::lit(proj.len() as f64)
}

/// `F(eta, t) = (1/N) sum_k phi(r <eta, theta_k> + t)`.
pub fn eval_f<T: Real>(frame: &Frame<T>, eta: &[T], t: T) -> Result<T> {
    check_dim(frame.dim(), eta.len())?;
    check_finite(eta, "eta")?;
    if !t.is_finite() {
        return Err(Error::NonFinite("t"));
    }
    Ok(mean_phi_shifted(&frame.projections(eta), t))
}

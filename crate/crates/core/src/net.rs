//! The lattice-shell net and the unbiased random rounding onto it.
//!
//! For a dimension `n` and `0 < rho < 1/2` the net is the set of points of
//! the lattice `(rho / sqrt n) Z^n` whose norm lies in `(1 - 2 rho, 1 + rho]`.
//! Rounding a vector coordinate-wise to one of its two neighbouring lattice
//! values, up with probability equal to the fractional part, is unbiased and
//! moves every coordinate by at most one lattice step; for unit vectors the
//! result always lands in the net.

use std::io::Write;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::{check_dim, check_finite, dot, norm_sq};
use crate::rng::{par_batches, Moments, RngStream};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetParams<T> {
    n: usize,
    rho: T,
}

impl<T: Real> NetParams<T> {
    pub fn new(n: usize, rho: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension { min: 1, got: 0 });
        }
        if !(rho > T::zero() && rho < T::lit(0.5)) {
            return Err(invalid("rho", format!("must lie in (0, 1/2), got {rho}")));
        }
        Ok(Self { n, rho })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    /// Lattice step `rho / sqrt(n)`.
    pub fn spacing(&self) -> T {
        self.rho / T::lit(self.n as f64).sqrt()
    }

    pub fn inner_radius(&self) -> T {
        T::one() - T::lit(2.0) * self.rho
    }

    pub fn outer_radius(&self) -> T {
        T::one() + self.rho
    }

    /// Shell test on the integer squared norm `sum k_i^2`. The outer sphere
    /// belongs to the shell, the inner sphere does not; points within the
    /// snapping tolerance of either sphere count as lying on it.
    pub fn shell_contains_sum_sq(&self, sum_sq: u64) -> bool {
        let n = T::lit(self.n as f64);
        let lhs = self.rho * self.rho * T::lit(sum_sq as f64);
        let slack = T::one() + T::snap_tol();
        let outer = self.outer_radius();
        let inner = self.inner_radius();
        lhs <= n * outer * outer * slack && lhs > n * inner * inner * slack
    }

    /// Largest `|k_i|` any net member can have.
    pub fn max_coeff(&self) -> i64 {
        let n = self.n as f64;
        let rho = self.rho.to_f64_lossy();
        let bound = (n * (1.0 + rho).powi(2) * (1.0 + 1e-9)).sqrt() / rho;
        bound.floor() as i64
    }
}

/// An element of `(rho / sqrt n) Z^n`, stored by its integer coordinates.
#[derive(Clone, Debug)]
pub struct LatticePoint<T> {
    coeffs: Vec<i64>,
    params: ParamsKey<T>,
}

impl<T: Real> PartialEq for LatticePoint<T> {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.coeffs == other.coeffs
    }
}
impl<T: Real> Eq for LatticePoint<T> {}
impl<T: Real> PartialOrd for LatticePoint<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for LatticePoint<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.params.cmp(&other.params).then_with(|| self.coeffs.cmp(&other.coeffs))
    }
}
impl<T: Real> std::hash::Hash for LatticePoint<T> {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.params.hash(state);
        self.coeffs.hash(state);
    }
}

// NetParams carries a float; points compare by coefficients and the exact
// bit pattern of rho.
#[derive(Clone, Copy, Debug)]
struct ParamsKey<T>(NetParams<T>);

impl<T: Real> PartialEq for ParamsKey<T> {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}
impl<T: Real> Eq for ParamsKey<T> {}
impl<T: Real> PartialOrd for ParamsKey<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for ParamsKey<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .n
            .cmp(&other.0.n)
            .then(self.0.rho.partial_cmp(&other.0.rho).unwrap_or(std::cmp::Ordering::Equal))
    }
}
impl<T: Real> std::hash::Hash for ParamsKey<T> {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.n.hash(state);
        self.0.rho.to_f64_lossy().to_bits().hash(state);
    }
}

impl<T: Real> LatticePoint<T> {
    pub fn new(coeffs: Vec<i64>, params: NetParams<T>) -> Result<Self> {
        check_dim(params.n, coeffs.len())?;
        Ok(Self { coeffs, params: ParamsKey(params) })
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn params(&self) -> NetParams<T> {
        self.params.0
    }

    /// `sum k_i^2`, exact.
    pub fn sum_sq(&self) -> u64 {
        self.coeffs.iter().map(|&k| (k * k) as u64).sum()
    }

    /// Real embedding `spacing * coeffs`.
    pub fn value(&self) -> Vec<T> {
        let h = self.params.0.spacing();
        self.coeffs.iter().map(|&k| h * T::lit(k as f64)).collect()
    }

    pub fn norm(&self) -> T {
        self.params.0.spacing() * T::lit(self.sum_sq() as f64).sqrt()
    }
}

/// True iff `1 - 2 rho < |point| <= 1 + rho`.
pub fn shell_member<T: Real>(point: &LatticePoint<T>, params: &NetParams<T>) -> Result<bool> {
    if point.params() != *params {
        return Err(Error::ParamsMismatch);
    }
    Ok(params.shell_contains_sum_sq(point.sum_sq()))
}

/// The explicit counting bound `(2 e (2 / rho + 1))^n`; `+inf` on overflow.
pub fn cardinality_upper_bound<T: Real>(params: &NetParams<T>) -> f64 {
    let rho = params.rho.to_f64_lossy();
    let base = 2.0 * std::f64::consts::E * (2.0 / rho + 1.0);
    base.powf(params.n as f64)
}

/// Number of non-negative integer vectors in `Z^n` with `l1` norm at most `r`,
/// i.e. `binom(r + n, n)`. Returns `None` on overflow.
pub fn nonneg_l1_lattice_count(n: u64, r: u64) -> Option<u128> {
    let mut acc: u128 = 1;
    for i in 1..=n as u128 {
        acc = acc.checked_mul(r as u128 + i)? / i;
    }
    Some(acc)
}

/// Every net point, in lexicographic order of the integer coordinates.
pub fn enumerate_net<T: Real>(params: &NetParams<T>, budget: u64) -> Result<Vec<LatticePoint<T>>> {
    let bound = cardinality_upper_bound(params);
    if !(bound <= budget as f64) {
        return Err(Error::TooLargeToEnumerate { bound, budget });
    }
    let n = params.n;
    let kmax = params.max_coeff();
    let total_cap = {
        let nn = n as f64;
        let rho = params.rho.to_f64_lossy();
        (nn * (1.0 + rho).powi(2) * (1.0 + 1e-9) / (rho * rho)).floor() as u64
    };
    let mut out = Vec::new();
    let mut cur = vec![0i64; n];
    fn rec<T: Real>(
        i: usize,
        partial: u64,
        cur: &mut Vec<i64>,
        kmax: i64,
        cap: u64,
        params: &NetParams<T>,
        out: &mut Vec<LatticePoint<T>>,
    ) {
        if i == cur.len() {
            if params.shell_contains_sum_sq(partial) {
                out.push(LatticePoint { coeffs: cur.clone(), params: ParamsKey(*params) });
            }
            return;
        }
        for k in -kmax..=kmax {
            let s = partial + (k * k) as u64;
            if s > cap {
                continue;
            }
            cur[i] = k;
            rec(i + 1, s, cur, kmax, cap, params, out);
        }
        cur[i] = 0;
    }
    rec(0, 0, &mut cur, kmax, total_cap, params, &mut out);
    Ok(out)
}

/// Writes `coeff_1..coeff_n,norm` rows.
pub fn write_net_csv<T: Real, W: Write>(points: &[LatticePoint<T>], n: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=n).map(|i| format!("coeff_{i}")).collect();
    header.push("norm".into());
    w.write_record(&header)?;
    for p in points {
        let mut row: Vec<String> = p.coeffs.iter().map(|k| k.to_string()).collect();
        row.push(p.norm().to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Coordinate-wise law of the rounding of `xi`: `xi_i = h (k_i + p_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundingLaw<T> {
    lower: Vec<i64>,
    frac: Vec<T>,
    params: NetParams<T>,
}

impl<T: Real> RoundingLaw<T> {
    /// Accepts any finite vector. Fractional parts within the snapping
    /// tolerance of 0 or 1 are treated as exact lattice values.
    pub fn new(xi: &[T], params: &NetParams<T>) -> Result<Self> {
        check_dim(params.n, xi.len())?;
        check_finite(xi, "xi")?;
        let h = params.spacing();
        let limit = T::lit(9.0e15);
        let tol = T::snap_tol();
        let mut lower = Vec::with_capacity(xi.len());
        let mut frac = Vec::with_capacity(xi.len());
        for &x in xi {
            let u = x / h;
            if u.abs() > limit {
                return Err(invalid("xi", "coordinate too large for the lattice index range"));
            }
            let k = u.floor();
            let mut p = u - k;
            let mut k = k.to_i64().expect("range checked");
            let scale = u.abs().max(T::one());
            if p <= tol * scale {
                p = T::zero();
            } else if p >= T::one() - tol * scale {
                p = T::zero();
                k += 1;
            }
            lower.push(k);
            frac.push(p);
        }
        Ok(Self { lower, frac, params: *params })
    }

    pub fn lower(&self) -> &[i64] {
        &self.lower
    }

    /// Probability of rounding coordinate `i` up.
    pub fn up_probabilities(&self) -> &[T] {
        &self.frac
    }

    pub fn params(&self) -> NetParams<T> {
        self.params
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LatticePoint<T> {
        let coeffs = self
            .lower
            .iter()
            .zip(&self.frac)
            .map(|(&k, &p)| {
                if p > T::zero() && T::lit(rng.random::<f64>()) < p {
                    k + 1
                } else {
                    k
                }
            })
            .collect();
        LatticePoint { coeffs, params: ParamsKey(self.params) }
    }

    /// Writes `eta - xi` into `buf` for a fresh draw (allocation-free path
    /// for Monte Carlo loops).
    pub fn sample_error_into<R: Rng + ?Sized>(&self, rng: &mut R, buf: &mut [T]) {
        let h = self.params.spacing();
        for ((b, &p), _) in buf.iter_mut().zip(&self.frac).zip(&self.lower) {
            let up = p > T::zero() && T::lit(rng.random::<f64>()) < p;
            *b = if up { h * (T::one() - p) } else { -h * p };
        }
    }

    /// Exact mean and variance of `<eta, g>`.
    pub fn moments(&self, xi: &[T], g: &[T]) -> Result<(T, T)> {
        check_dim(self.params.n, g.len())?;
        check_finite(g, "g")?;
        let h = self.params.spacing();
        let var = g
            .iter()
            .zip(&self.frac)
            .fold(T::zero(), |acc, (&gi, &p)| acc + gi * gi * p * (T::one() - p));
        Ok((dot(xi, g), var * h * h))
    }
}

/// One unbiased rounding of `xi` onto the lattice.
pub fn random_round<T: Real, R: Rng + ?Sized>(xi: &[T], params: &NetParams<T>, rng: &mut R) -> Result<LatticePoint<T>> {
    Ok(RoundingLaw::new(xi, params)?.sample(rng))
}

/// Exact `(E<eta, g>, Var<eta, g>) = (<xi, g>, sum g_i^2 p_i (1 - p_i) rho^2 / n)`.
pub fn rounding_moments<T: Real>(xi: &[T], params: &NetParams<T>, g: &[T]) -> Result<(T, T)> {
    RoundingLaw::new(xi, params)?.moments(xi, g)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailCheck {
    pub empirical_prob: f64,
    pub hoeffding_bound: f64,
    /// Binomial standard error `sqrt(p (1 - p) / trials)` at the bound.
    pub std_error: f64,
    pub trials: u64,
}

impl TailCheck {
    /// Empirical frequency within `k` binomial standard errors of the bound.
    pub fn holds_within(&self, k: f64) -> bool {
        self.empirical_prob <= self.hoeffding_bound + k * self.std_error
    }
}

/// Classical two-sided Hoeffding bound for `|<eta - xi, theta>| >= beta`:
/// `2 exp(-n beta^2 / (2 rho^2 |theta|^2))`.
pub fn hoeffding_tail_bound<T: Real>(params: &NetParams<T>, theta_norm_sq: T, beta: T) -> f64 {
    let n = params.n as f64;
    let rho = params.rho.to_f64_lossy();
    let b = beta.to_f64_lossy();
    let t2 = theta_norm_sq.to_f64_lossy();
    if t2 == 0.0 {
        return 0.0;
    }
    (2.0 * (-n * b * b / (2.0 * rho * rho * t2)).exp()).min(2.0)
}

/// Monte Carlo frequency of `|<eta^xi - xi, theta>| >= beta` against the
/// Hoeffding bound.
pub fn subgaussian_tail_check<T: Real>(
    xi: &[T],
    theta: &[T],
    beta: T,
    params: &NetParams<T>,
    trials: u64,
    stream: RngStream,
) -> Result<TailCheck> {
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    if !(beta > T::zero()) {
        return Err(invalid("beta", "must be positive"));
    }
    check_dim(params.n, theta.len())?;
    check_finite(theta, "theta")?;
    let law = RoundingLaw::new(xi, params)?;
    let hits: u64 = par_batches(stream, trials as usize, |range, rng| {
        let mut buf = vec![T::zero(); params.n];
        let mut hits = 0u64;
        for _ in range {
            law.sample_error_into(rng, &mut buf);
            if dot(&buf, theta).abs() >= beta {
                hits += 1;
            }
        }
        hits
    })
    .into_iter()
    .sum();
    let bound = hoeffding_tail_bound(params, norm_sq(theta), beta);
    let emp = hits as f64 / trials as f64;
    Ok(TailCheck {
        empirical_prob: emp,
        hoeffding_bound: bound,
        std_error: (emp * (1.0 - emp) / trials as f64).sqrt().max(1.0 / trials as f64),
        trials,
    })
}

/// Empirical per-coordinate means and the moments of `<eta, g>` over `trials`
/// roundings of `xi`.
#[derive(Clone, Debug)]
pub struct RoundingSample {
    pub coord_means: Vec<f64>,
    pub projection: Moments,
    pub all_members: bool,
    pub max_inf_error: f64,
}

pub fn sample_roundings<T: Real>(
    xi: &[T],
    params: &NetParams<T>,
    g: &[T],
    trials: u64,
    stream: RngStream,
) -> Result<RoundingSample> {
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    check_dim(params.n, g.len())?;
    let law = RoundingLaw::new(xi, params)?;
    let h = params.spacing().to_f64_lossy();
    let parts = par_batches(stream, trials as usize, |range, rng| {
        let mut sums = vec![0.0f64; params.n];
        let mut mom = Moments::default();
        let mut members = true;
        let mut max_err = 0.0f64;
        for _ in range {
            let p = law.sample(rng);
            members &= params.shell_contains_sum_sq(p.sum_sq());
            let mut proj = 0.0;
            for (i, &k) in p.coeffs.iter().enumerate() {
                let v = h * k as f64;
                sums[i] += v;
                proj += v * g[i].to_f64_lossy();
                max_err = max_err.max((v - xi[i].to_f64_lossy()).abs());
            }
            mom.push(proj);
        }
        (sums, mom, members, max_err)
    });
    let mut sums = vec![0.0f64; params.n];
    let mut projection = Moments::default();
    let mut all_members = true;
    let mut max_inf_error = 0.0f64;
    for (s, m, ok, e) in parts {
        sums.iter_mut().zip(&s).for_each(|(a, b)| *a += b);
        projection.merge(&m);
        all_members &= ok;
        max_inf_error = max_inf_error.max(e);
    }
    Ok(RoundingSample {
        coord_means: sums.into_iter().map(|s| s / trials as f64).collect(),
        projection,
        all_members,
        max_inf_error,
    })
}

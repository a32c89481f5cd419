//! Expectation, smoothing and supremum bounds for Gaussian sums.

use crate::error::{invalid, Error, Result};
use crate::geometry::{check_dim, dot, norm_sq};
use crate::ledger::ConstantsLedger;
use crate::net::{NetParams, RoundingLaw};
use crate::quadrature::integrate;
use crate::rng::{par_batches, Moments, RngStream};
use crate::scalar::{phi, Real};

use super::frame::{mean_phi_shifted, Frame};

/// `ln E phi(r <theta, eta> + t)` for `theta` uniform on `S^{d-1}` and
/// `|eta| = eta_norm`.
///
/// The marginal `s = <theta, eta/|eta|>` has density proportional to
/// `(1 - s^2)^{(d-3)/2}` on `[-1, 1]`. With `s = sin u` both integrals become
/// `int cos^{d-2}(u) ... du` over `[-pi/2, pi/2]`, which is smooth for every
/// `d >= 2`. The integrand is rescaled by its maximum so that the result is
/// accurate in log space even when the mean underflows.
pub fn ln_sphere_mean_phi<T: Real>(d: usize, r: T, t: T, eta_norm: T) -> Result<T> {
    if d < 2 {
        return Err(Error::Dimension { min: 2, got: d });
    }
    if !(r >= T::zero() && eta_norm >= T::zero()) || !r.is_finite() || !eta_norm.is_finite() || !t.is_finite() {
        return Err(invalid("r/eta_norm/t", "need finite r >= 0, eta_norm >= 0 and finite t"));
    }
    let a = r * eta_norm;
    if a == T::zero() {
        return Ok(-(t * t) * T::lit(0.5));
    }
    let k = T::lit((d - 2) as f64);
    let half_pi = T::FRAC_PI_2();
    let log_weight = move |u: T| -> T {
        if k == T::zero() {
            T::zero()
        } else {
            let c = u.cos();
            if c <= T::zero() {
                T::neg_infinity()
            } else {
                k * c.ln()
            }
        }
    };
    let log_integrand = move |u: T| -> T {
        let x = a * u.sin() + t;
        log_weight(u) - x * x * T::lit(0.5)
    };

    // Locate the peak on a fine grid, then refine the partition around it.
    let samples = 4000usize;
    let (mut umax, mut gmax) = (T::zero(), T::neg_infinity());
    for i in 1..samples {
        let u = -half_pi + T::lit(2.0 * i as f64 / samples as f64) * half_pi;
        let g = log_integrand(u);
        if g > gmax {
            gmax = g;
            umax = u;
        }
    }
    if !gmax.is_finite() {
        return Err(Error::Numerical("integrand vanishes on the sampling grid".into()));
    }
    let mut points: Vec<T> = (0..=32).map(|i| -half_pi + T::lit(i as f64 / 16.0) * half_pi).collect();
    for w in [1e-3, 5e-3, 2e-2, 6e-2] {
        for s in [-1.0, 1.0] {
            let p = umax + T::lit(s * w);
            if p > -half_pi && p < half_pi {
                points.push(p);
            }
        }
    }
    points.push(umax);
    points.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    points.dedup();

    let rel = T::lit(1e-11).max(T::epsilon() * T::lit(100.0));
    let num = integrate(|u| (log_integrand(u) - gmax).exp(), &points, rel, T::zero(), 20_000)?;
    let den = integrate(|u| log_weight(u).exp(), &points, rel, T::zero(), 20_000)?;
    if !(num.value > T::zero() && den.value > T::zero()) {
        return Err(Error::Numerical("degenerate sphere integral".into()));
    }
    Ok(gmax + num.value.ln() - den.value.ln())
}

/// `E phi(r <theta, eta> + t)` for `theta` uniform on `S^{d-1}`.
pub fn sphere_mean_phi<T: Real>(d: usize, r: T, t: T, eta_norm: T) -> Result<T> {
    ln_sphere_mean_phi(d, r, t, eta_norm).map(T::exp)
}

/// `ln` of `(sqrt n / sqrt(n + r^2 |eta|^2)) phi(t sqrt n / sqrt(n + r^2 |eta|^2))`,
/// the bound without its `(1 + c (log n)^2 / n)` factor.
pub fn ln_expectation_profile<T: Real>(n: usize, r: T, t: T, eta_norm: T) -> T {
    let nn = T::lit(n as f64);
    let denom = nn + r * r * eta_norm * eta_norm;
    let z = t * nn.sqrt() / denom.sqrt();
    T::lit(0.5) * (nn / denom).ln() - z * z * T::lit(0.5)
}

/// `(1 + c (log n)^2 / n) sqrt n / sqrt(n + r^2 |eta|^2) phi(t sqrt n / sqrt(n + r^2 |eta|^2))`
/// with `c = ledger.c_expectation`.
pub fn expectation_upper_bound<T: Real>(n: usize, r: T, t: T, eta_norm: T, ledger: &ConstantsLedger<T>) -> Result<T> {
    ln_expectation_upper_bound(n, r, t, eta_norm, ledger).map(T::exp)
}

/// Logarithm of [`expectation_upper_bound`], finite where the bound underflows.
pub fn ln_expectation_upper_bound<T: Real>(n: usize, r: T, t: T, eta_norm: T, ledger: &ConstantsLedger<T>) -> Result<T> {
    if n == 0 {
        return Err(Error::Dimension { min: 1, got: 0 });
    }
    let nn = T::lit(n as f64);
    let ln_n = nn.ln();
    let factor = T::one() + ledger.c_expectation * ln_n * ln_n / nn;
    Ok(factor.ln() + ln_expectation_profile(n, r, t, eta_norm))
}

/// One grid point of the expectation-bound check. The sphere is `S^{n+2}`
/// (`d = n + 3`), matching the bound's dimension convention.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpectationCheck {
    pub n: usize,
    pub r: f64,
    pub t: f64,
    pub eta_norm: f64,
    pub ln_mean: f64,
    pub ln_profile: f64,
    /// Smallest `c >= 0` for which the bound holds at this point.
    pub c_needed: f64,
}

pub fn expectation_check(n: usize, r: f64, t: f64, eta_norm: f64) -> Result<ExpectationCheck> {
    let ln_mean = ln_sphere_mean_phi::<f64>(n + 3, r, t, eta_norm)?;
    let ln_profile = ln_expectation_profile(n, r, t, eta_norm);
    let excess = (ln_mean - ln_profile).exp_m1();
    let ln_n = (n as f64).ln();
    let c_needed = if excess <= 0.0 {
        0.0
    } else if ln_n == 0.0 {
        f64::INFINITY
    } else {
        excess * n as f64 / (ln_n * ln_n)
    };
    Ok(ExpectationCheck { n, r, t, eta_norm, ln_mean, ln_profile, c_needed })
}

/// The grid `n x {sqrt n, n/2, n} x {0, r, 3r} x {1 - 2 rho, 1, 1 + rho}`.
pub fn expectation_sweep(ns: &[usize], rho: f64) -> Result<Vec<ExpectationCheck>> {
    let mut out = Vec::new();
    for &n in ns {
        let nf = n as f64;
        for r in [nf.sqrt(), nf / 2.0, nf] {
            for t in [0.0, r, 3.0 * r] {
                for eta in [1.0 - 2.0 * rho, 1.0, 1.0 + rho] {
                    out.push(expectation_check(n, r, t, eta)?);
                }
            }
        }
    }
    Ok(out)
}

/// `phi(a) - C / M`, valid for `M >= 10`.
pub fn smoothing_lower_bound<T: Real>(m: T, a: T, ledger: &ConstantsLedger<T>) -> Result<T> {
    if !(m >= T::lit(10.0)) {
        return Err(invalid("M", format!("smoothing bound requires M >= 10, got {m}")));
    }
    Ok(phi(a) - ledger.c_smoothing / m)
}

/// Sub-gaussian constant `1/M` of `r <eta^xi - xi, theta>` for unit `theta`
/// implied by the classical Hoeffding bound: `M = sqrt(n) / (sqrt 2 rho r)`.
pub fn rounding_subgaussian_m<T: Real>(params: &NetParams<T>, r: T) -> T {
    T::lit(params.n() as f64).sqrt() / (T::SQRT_2() * params.rho() * r)
}

/// Amplitude `r` at which the rounding error has sub-gaussian constant `1/M`.
pub fn amplitude_for_m<T: Real>(params: &NetParams<T>, m: T) -> T {
    T::lit(params.n() as f64).sqrt() / (T::SQRT_2() * params.rho() * m)
}

/// Monte Carlo `E phi(Y + a)` for `Y = r <eta^xi - xi, theta>` with `r`
/// calibrated to the sub-gaussian constant `1/M`. Returns `(mean, std_error)`.
pub fn smoothing_monte_carlo(
    params: &NetParams<f64>,
    xi: &[f64],
    theta: &[f64],
    m: f64,
    a: f64,
    trials: u64,
    stream: RngStream,
) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    check_dim(params.n(), theta.len())?;
    let law = RoundingLaw::new(xi, params)?;
    let r = amplitude_for_m(params, m) / norm_sq(theta).sqrt();
    let parts = par_batches(stream, trials as usize, |range, rng| {
        let mut buf = vec![0.0; params.n()];
        let mut mom = Moments::default();
        for _ in range {
            law.sample_error_into(rng, &mut buf);
            mom.push(phi(r * dot(&buf, theta) + a));
        }
        mom
    });
    let mut mom = Moments::default();
    parts.iter().for_each(|p| mom.merge(p));
    Ok((mom.mean, mom.std_error()))
}

/// `F(xi, t)` against the Monte Carlo mean of `F(eta^xi, t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundingGap {
    pub f_xi: f64,
    pub mean_f_rounded: f64,
    pub std_error: f64,
    /// Sub-gaussian parameter `M` of the rounding error at amplitude `r`.
    pub m_effective: f64,
    /// `2 C / M`: the rigorous gap with the factor 2 of the two-sided
    /// Hoeffding tail carried through the smoothing argument.
    pub slack: f64,
    /// `M >= 10`, the smoothing bound's hypothesis.
    pub regime_ok: bool,
}

impl RoundingGap {
    pub fn holds_within(&self, k: f64) -> bool {
        self.f_xi <= self.mean_f_rounded + self.slack + k * self.std_error
    }
}

pub fn rounding_comparison_gap(
    frame: &Frame<f64>,
    xi: &[f64],
    t: f64,
    params: &NetParams<f64>,
    trials: u64,
    stream: RngStream,
    ledger: &ConstantsLedger<f64>,
) -> Result<RoundingGap> {
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    check_dim(frame.dim(), xi.len())?;
    check_dim(params.n(), xi.len())?;
    let f_xi = mean_phi_shifted(&frame.projections(xi), t);
    let law = RoundingLaw::new(xi, params)?;
    let parts = par_batches(stream, trials as usize, |range, rng| {
        let mut mom = Moments::default();
        for _ in range {
            let eta = law.sample(rng).value();
            mom.push(mean_phi_shifted(&frame.projections(&eta), t));
        }
        mom
    });
    let mut mom = Moments::default();
    parts.iter().for_each(|p| mom.merge(p));
    let m = rounding_subgaussian_m(params, frame.r());
    Ok(RoundingGap {
        f_xi,
        mean_f_rounded: mom.mean,
        std_error: mom.std_error(),
        m_effective: m,
        slack: 2.0 * ledger.c_smoothing / m,
        regime_ok: m >= 10.0,
    })
}

/// Hypotheses of the supremum bound, reported rather than enforced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyRegime {
    pub n_at_least_5: bool,
    pub n_le_big_n: bool,
    pub r_in_range: bool,
}

pub fn key_regime(n: usize, big_n: usize, r: f64) -> KeyRegime {
    let nf = n as f64;
    KeyRegime { n_at_least_5: n >= 5, n_le_big_n: big_n >= n, r_in_range: r >= nf.sqrt() && r <= nf }
}

/// `C3 sqrt(n log(N r / (n sqrt n)) / N) + (1 + C4 sqrt(n) / r) (sqrt(n) / r) phi(q sqrt(n) t / r)`
/// with `q = max(0, 1 - C5 sqrt(n) / r)` and constants from the ledger.
pub fn key_bound_rhs<T: Real>(n: usize, big_n: usize, r: T, t: T, ledger: &ConstantsLedger<T>) -> Result<T> {
    key_bound_rhs_with(n, big_n, r, t, ledger.c3_key, ledger.c4_key, ledger.c5_key)
}

/// The fluctuation scale `sqrt(n log(N r / (n sqrt n)) / N)`.
pub fn key_fluctuation_scale<T: Real>(n: usize, big_n: usize, r: T) -> Result<T> {
    if n == 0 || big_n == 0 {
        return Err(Error::Dimension { min: 1, got: n.min(big_n) });
    }
    let nf = T::lit(n as f64);
    let bn = T::lit(big_n as f64);
    let arg = bn * r / (nf * nf.sqrt());
    if !(arg > T::one()) {
        return Err(Error::OutsideRegime(format!("log argument N r / (n sqrt n) = {arg} must exceed 1")));
    }
    Ok((nf * arg.ln() / bn).sqrt())
}

/// The Gaussian-profile term `(1 + c4 s) s phi(q s t)`, `s = sqrt(n) / r`.
pub fn key_profile<T: Real>(n: usize, r: T, t: T, c4: T, c5: T) -> T {
    let s = T::lit(n as f64).sqrt() / r;
    let q = (T::one() - c5 * s).max(T::zero());
    (T::one() + c4 * s) * s * phi(q * s * t)
}

pub fn key_bound_rhs_with<T: Real>(n: usize, big_n: usize, r: T, t: T, c3: T, c4: T, c5: T) -> Result<T> {
    Ok(c3 * key_fluctuation_scale(n, big_n, r)? + key_profile(n, r, t, c4, c5))
}

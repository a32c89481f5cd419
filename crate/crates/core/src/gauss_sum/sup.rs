//! Supremum of `F(xi, t)` over the sphere and the line.
//!
//! Two estimators bracket the supremum. The net method maximizes over net
//! points and a `t` grid and carries an explicit slack, so its value plus
//! slack bounds the supremum from above. The search method runs multi-start
//! gradient ascent on `S^{n-1} x [-3r, 3r]` (by default) and yields a lower
//! bound.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::geometry::{dot, UnitVector};
use crate::ledger::ConstantsLedger;
use crate::net::{enumerate_net, NetParams};
use crate::rng::{par_indexed, RngStream};
use crate::scalar::phi;

use super::bounds::{key_fluctuation_scale, key_profile, rounding_subgaussian_m, sphere_mean_phi};
use super::frame::{mean_phi_shifted, Frame};

/// `t_j = j / r^2` for `j = 0 ..= floor(3 r^3)`, covering `[0, 3r]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TGrid {
    epsilon: f64,
    count: usize,
}

impl TGrid {
    pub fn new(r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(invalid("r", format!("amplitude must be positive, got {r}")));
        }
        let epsilon = 1.0 / (r * r);
        let count = (3.0 * r * r * r).floor() as usize + 1;
        Ok(Self { epsilon, count })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn point(&self, j: usize) -> f64 {
        self.epsilon * j as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|j| self.point(j))
    }

    /// Largest gap between a point of `[0, 3r]` and the grid times the
    /// Lipschitz constant `e^{-1/2}` of `phi`.
    pub fn lipschitz_slack(&self) -> f64 {
        let last = self.point(self.count - 1);
        let r = self.epsilon.sqrt().recip();
        let gap = (self.epsilon / 2.0).max(3.0 * r - last);
        (-0.5f64).exp() * gap
    }

    /// Multiplicative form `exp(5/r + 1/(2 r^2))` of the same discretization
    /// error, valid for the summands with `|r <eta, theta> + t| <= 5 r`.
    pub fn factor(&self) -> f64 {
        let r = self.epsilon.sqrt().recip();
        (5.0 / r + 0.5 / (r * r)).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SupMethod {
    /// Exhaustive scan of net times grid; certified upper bound with slack.
    Net,
    /// Local ascent over net points and grid values; not exhaustive.
    NetAscent,
    /// Multi-start gradient ascent on the sphere; a lower bound.
    Search,
}

impl SupMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SupMethod::Net => "net",
            SupMethod::NetAscent => "net-ascent",
            SupMethod::Search => "search",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupEstimate {
    pub value: f64,
    /// A unit vector for [`SupMethod::Search`], a net point otherwise.
    pub argmax_xi: Vec<f64>,
    pub argmax_t: f64,
    pub method: SupMethod,
    /// Amount to add to `value` to dominate the supremum over the sphere.
    /// Zero for the search method.
    pub slack: f64,
    /// `sup_{t >= 3r}` bound `phi(r (2 - rho))`, relevant for small `r` only.
    pub tail_bound: f64,
}

impl SupEstimate {
    pub fn upper_bound(&self) -> f64 {
        self.value.max(self.tail_bound) + self.slack
    }
}

/// Total net slack: `t`-grid Lipschitz error plus `2 C / M` from rounding.
pub fn net_slack(frame: &Frame<f64>, params: &NetParams<f64>, ledger: &ConstantsLedger<f64>) -> Result<f64> {
    let grid = TGrid::new(frame.r())?;
    let m = rounding_subgaussian_m(params, frame.r());
    Ok(grid.lipschitz_slack() + 2.0 * ledger.c_smoothing / m)
}

fn tail_bound(frame: &Frame<f64>, params: &NetParams<f64>) -> f64 {
    phi(frame.r() * (2.0 - params.rho()))
}

fn check_frame_params(frame: &Frame<f64>, params: &NetParams<f64>) -> Result<()> {
    if frame.dim() != params.n() {
        return Err(Error::DimensionMismatch { expected: frame.dim(), found: params.n() });
    }
    Ok(())
}

fn best_of(values: impl IntoIterator<Item = (f64, Vec<f64>, f64)>) -> Option<(f64, Vec<f64>, f64)> {
    values.into_iter().fold(None, |acc, c| match acc {
        Some(a) if a.0 >= c.0 => Some(a),
        _ => Some(c),
    })
}

/// Maximum of `F` over the net and the grid `TGrid(r)`. Only `t >= 0` is
/// scanned since the net is symmetric and `F(eta, -t) = F(-eta, t)`.
pub fn sup_f_net(frame: &Frame<f64>, params: &NetParams<f64>, budget: u64, ledger: &ConstantsLedger<f64>) -> Result<SupEstimate> {
    check_frame_params(frame, params)?;
    let net = enumerate_net(params, budget)?;
    let grid = TGrid::new(frame.r())?;
    let per_point: Vec<(f64, Vec<f64>, f64)> = net
        .par_iter()
        .map(|p| {
            let eta = p.value();
            let proj = frame.projections(&eta);
            let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
            for t in grid.points() {
                let v = mean_phi_shifted(&proj, t);
                if v > best {
                    best = v;
                    arg = t;
                }
            }
            (best, eta, arg)
        })
        .collect();
    let (value, argmax_xi, argmax_t) = best_of(per_point).ok_or_else(|| Error::Numerical("empty net".into()))?;
    Ok(SupEstimate {
        value,
        argmax_xi,
        argmax_t,
        method: SupMethod::Net,
        slack: net_slack(frame, params, ledger)?,
        tail_bound: tail_bound(frame, params),
    })
}

/// Pattern-search ascent over net points and grid values of `t`, started at
/// the nearest lattice points of the given `(xi, t)` pairs. Used when the
/// net is too large to enumerate; the value is attained by a net point but
/// the scan is not exhaustive.
pub fn sup_f_net_ascent(
    frame: &Frame<f64>,
    params: &NetParams<f64>,
    starts: &[(Vec<f64>, f64)],
    ledger: &ConstantsLedger<f64>,
) -> Result<SupEstimate> {
    check_frame_params(frame, params)?;
    if starts.is_empty() {
        return Err(invalid("starts", "need at least one starting point"));
    }
    let grid = TGrid::new(frame.r())?;
    let results: Vec<(f64, Vec<f64>, f64)> =
        starts.par_iter().map(|(xi, t)| lattice_ascent(frame, params, &grid, xi, *t)).collect::<Result<_>>()?;
    let (value, argmax_xi, argmax_t) = best_of(results).expect("nonempty");
    Ok(SupEstimate {
        value,
        argmax_xi,
        argmax_t,
        method: SupMethod::NetAscent,
        slack: net_slack(frame, params, ledger)?,
        tail_bound: tail_bound(frame, params),
    })
}

fn lattice_ascent(frame: &Frame<f64>, params: &NetParams<f64>, grid: &TGrid, xi: &[f64], t: f64) -> Result<(f64, Vec<f64>, f64)> {
    let n = params.n();
    let xi = UnitVector::normalize(xi.to_vec())?;
    let (sign, t) = if t < 0.0 { (-1.0, -t) } else { (1.0, t) };
    let h = params.spacing();
    let mut coeffs: Vec<i64> = xi.iter().map(|&x| (sign * x / h).round() as i64).collect();
    let mut sum_sq: u64 = coeffs.iter().map(|&k| (k * k) as u64).sum();
    if !params.shell_contains_sum_sq(sum_sq) {
        return Err(Error::Numerical("nearest lattice point left the shell".into()));
    }
    let rh = frame.r() * h;
    let mut proj: Vec<f64> = frame.thetas().map(|th| rh * th.iter().zip(&coeffs).map(|(a, &k)| a * k as f64).sum::<f64>()).collect();
    let last = grid.len() - 1;
    let mut j = ((t / grid.epsilon()).round() as usize).min(last);
    let mut f = mean_phi_shifted(&proj, grid.point(j));
    let mut trial = vec![0.0; proj.len()];

    for s in [8i64, 4, 2, 1] {
        for _sweep in 0..200 {
            let mut improved = false;
            for i in 0..n {
                for dir in [-s, s] {
                    let k = coeffs[i] + dir;
                    let new_sum = sum_sq - (coeffs[i] * coeffs[i]) as u64 + (k * k) as u64;
                    if !params.shell_contains_sum_sq(new_sum) {
                        continue;
                    }
                    let step = rh * dir as f64;
                    for (q, (p, th)) in trial.iter_mut().zip(proj.iter().zip(frame.thetas())) {
                        *q = p + step * th[i];
                    }
                    let v = mean_phi_shifted(&trial, grid.point(j));
                    if v > f + 1e-15 {
                        f = v;
                        coeffs[i] = k;
                        sum_sq = new_sum;
                        std::mem::swap(&mut proj, &mut trial);
                        improved = true;
                    }
                }
            }
            let mut dj = 256usize;
            while dj >= 1 {
                let mut moved = false;
                for cand in [j.saturating_sub(dj), (j + dj).min(last)] {
                    if cand != j {
                        let v = mean_phi_shifted(&proj, grid.point(cand));
                        if v > f + 1e-15 {
                            f = v;
                            j = cand;
                            moved = true;
                            improved = true;
                        }
                    }
                }
                if !moved {
                    dj /= 2;
                }
            }
            if !improved {
                break;
            }
        }
    }
    let eta: Vec<f64> = coeffs.iter().map(|&k| h * k as f64).collect();
    Ok((f, eta, grid.point(j)))
}

/// A local maximum found by the search, kept as a probe of the key bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    pub xi: Vec<f64>,
    pub t: f64,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Candidate values of `t` for the coarse initial scan.
    pub t_scan: usize,
    /// The search covers `t in [-t_max r, t_max r]`.
    pub t_max: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { restarts: 50, max_iter: 500, t_scan: 61, t_max: 3.0 }
    }
}

/// `F` and its gradient with respect to `xi` (Euclidean) and `t`.
fn value_and_grad(frame: &Frame<f64>, xi: &[f64], t: f64, gx: &mut [f64]) -> (f64, f64) {
    let r = frame.r();
    let inv = 1.0 / frame.len() as f64;
    gx.iter_mut().for_each(|g| *g = 0.0);
    let (mut f, mut gt) = (0.0, 0.0);
    for th in frame.thetas() {
        let x = r * dot(xi, th) + t;
        let p = phi(x);
        f += p;
        let d = -x * p;
        gt += d;
        for (g, &a) in gx.iter_mut().zip(th) {
            *g += d * r * a;
        }
    }
    (f * inv, gt * inv)
}

/// Adaptive Riemannian ascent from `(xi, t)`; stops when the step falls
/// below `1e-10` or after `max_iter` iterations.
fn ascend(frame: &Frame<f64>, mut xi: Vec<f64>, mut t: f64, max_iter: usize, t_max: f64) -> Probe {
    let n = xi.len();
    let r = frame.r();
    let precond = 1.0 / (r * r);
    let mut gx = vec![0.0; n];
    let mut cand = vec![0.0; n];
    let (mut f, mut gt) = value_and_grad(frame, &xi, t, &mut gx);
    let mut step = 1.0;
    let mut iter = 0;
    while iter < max_iter && step >= 1e-10 {
        iter += 1;
        let radial = dot(&gx, &xi);
        for i in 0..n {
            cand[i] = xi[i] + step * precond * (gx[i] - radial * xi[i]);
        }
        let len = dot(&cand, &cand).sqrt();
        cand.iter_mut().for_each(|c| *c /= len);
        let ct = (t + step * gt).clamp(-t_max, t_max);
        let cf = mean_phi_shifted(&frame.projections(&cand), ct);
        if cf > f {
            std::mem::swap(&mut xi, &mut cand);
            t = ct;
            let (nf, ngt) = value_and_grad(frame, &xi, t, &mut gx);
            f = nf;
            gt = ngt;
            step *= 1.5;
        } else {
            step *= 0.5;
        }
    }
    Probe { xi, t, value: f }
}

/// Multi-start ascent; returns the best point and every restart's endpoint.
pub fn sup_f_search_probes(frame: &Frame<f64>, opts: &SearchOptions, stream: RngStream) -> Result<(SupEstimate, Vec<Probe>)> {
    if opts.restarts == 0 {
        return Err(invalid("restarts", "must be at least 1"));
    }
    if !(opts.t_max.is_finite() && opts.t_max >= 0.0) {
        return Err(invalid("t_max", "must be finite and nonnegative"));
    }
    let n = frame.dim();
    let r = frame.r();
    let t_max = opts.t_max * r;
    let scan = opts.t_scan.max(2);
    let probes: Vec<Probe> = par_indexed(stream, opts.restarts, |_, rng| -> Result<Probe> {
        let xi = UnitVector::<f64>::sample(n, rng)?.into_vec();
        let proj = frame.projections(&xi);
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 0..scan {
            let t = -t_max + 2.0 * t_max * i as f64 / (scan - 1) as f64;
            let v = mean_phi_shifted(&proj, t);
            if v > best.0 {
                best = (v, t);
            }
        }
        Ok(ascend(frame, xi, best.1, opts.max_iter, t_max))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let best = probes
        .iter()
        .fold(None::<&Probe>, |acc, p| match acc {
            Some(a) if a.value >= p.value => Some(a),
            _ => Some(p),
        })
        .expect("restarts >= 1");
    let est = SupEstimate {
        value: best.value,
        argmax_xi: best.xi.clone(),
        argmax_t: best.t,
        method: SupMethod::Search,
        slack: 0.0,
        tail_bound: 0.0,
    };
    Ok((est, probes))
}

pub fn sup_f_search(frame: &Frame<f64>, restarts: usize, stream: RngStream) -> Result<SupEstimate> {
    let opts = SearchOptions { restarts, ..SearchOptions::default() };
    sup_f_search_probes(frame, &opts, stream).map(|(e, _)| e)
}

/// Fitted constants of the key bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeyFit {
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
}

/// Smallest `C4 + C5` (over a `0.01` grid in `C5`) such that the profile
/// `(1 + C4 s) s phi(q s t)` dominates the mean-field level
/// `E_theta phi(r <theta, xi> + t)` on `t in [0, 3r]`, with `s = sqrt(n)/r`.
/// The fit depends on `(n, r)` only, never on a sampled frame.
pub fn fit_profile_constants(n: usize, r: f64) -> Result<(f64, f64)> {
    let s = (n as f64).sqrt() / r;
    let ts: Vec<f64> = (0..=120).map(|i| 3.0 * r * i as f64 / 120.0).collect();
    let env: Vec<f64> = ts.iter().map(|&t| sphere_mean_phi(n.max(2), r, t, 1.0)).collect::<Result<_>>()?;
    let c5_max = 1.0 / s;
    let steps = (c5_max / 0.01).floor() as usize;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..=steps {
        let c5 = 0.01 * i as f64;
        let q = (1.0 - c5 * s).max(0.0);
        let c4 = ts
            .iter()
            .zip(&env)
            .map(|(&t, &e)| (e / (s * phi(q * s * t)) - 1.0) / s)
            .fold(0.0f64, f64::max);
        if c4.is_finite() && best.is_none_or(|(b4, b5)| c4 + c5 < b4 + b5) {
            best = Some((c4, c5));
        }
    }
    best.ok_or_else(|| Error::Numerical("profile fit failed".into()))
}

/// Smallest `C3 >= 0` making the key bound hold at every probe, given the
/// profile constants.
pub fn fit_c3(n: usize, big_n: usize, r: f64, c4: f64, c5: f64, probes: &[Probe]) -> Result<f64> {
    let a = key_fluctuation_scale(n, big_n, r)?;
    Ok(probes.iter().map(|p| (p.value - key_profile(n, r, p.t.abs(), c4, c5)) / a).fold(0.0f64, f64::max))
}

pub fn fit_key_constants(n: usize, big_n: usize, r: f64, probes: &[Probe]) -> Result<KeyFit> {
    let (c4, c5) = fit_profile_constants(n, r)?;
    let c3 = fit_c3(n, big_n, r, c4, c5, probes)?;
    Ok(KeyFit { c3, c4, c5 })
}

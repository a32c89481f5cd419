use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::geometry::{check_dim, dot, gaussian_vec, sample_sphere_uniform, UnitVector};
use crate::rng::RngStream;
use crate::scalar::phi;

/// `S(theta, alpha, tau) = { xi : |<xi, theta> + tau| <= alpha }`.
#[derive(Clone, Debug, PartialEq)]
pub struct Strip {
    pub theta: UnitVector<f64>,
    pub alpha: f64,
    pub tau: f64,
}

impl Strip {
    pub fn new(theta: UnitVector<f64>, alpha: f64, tau: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(invalid("alpha", format!("must be positive, got {alpha}")));
        }
        if !tau.is_finite() {
            return Err(Error::NonFinite("tau"));
        }
        Ok(Self { theta, alpha, tau })
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        (dot(p, &self.theta) + self.tau).abs() <= self.alpha
    }
}

pub fn strip_count(points: &[UnitVector<f64>], strip: &Strip) -> usize {
    points.iter().filter(|p| strip.contains(p)).count()
}

/// Best window of width `2 alpha` over the sorted projections onto `theta`,
/// centred on the points it captures: returns `(count, tau)`.
fn best_window(points: &[UnitVector<f64>], theta: &[f64], alpha: f64, buf: &mut Vec<f64>) -> (usize, f64) {
    buf.clear();
    buf.extend(points.iter().map(|p| dot(p, theta)));
    buf.sort_by(|a, b| a.total_cmp(b));
    let width = 2.0 * alpha;
    let (mut best, mut best_mid) = (0usize, buf[0]);
    let mut hi = 0;
    for lo in 0..buf.len() {
        if hi < lo {
            hi = lo;
        }
        while hi + 1 < buf.len() && buf[hi + 1] - buf[lo] <= width {
            hi += 1;
        }
        if hi + 1 - lo > best {
            best = hi + 1 - lo;
            best_mid = 0.5 * (buf[lo] + buf[hi]);
        }
    }
    (best, -best_mid)
}

/// Unit vector orthogonal to `span(basis)`, from a random seed direction.
fn orthogonal_direction<R: Rng + ?Sized>(n: usize, basis: &[&[f64]], rng: &mut R) -> Option<Vec<f64>> {
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for b in basis {
        let mut v = b.to_vec();
        for q in &ortho {
            let d = dot(&v, q);
            v.iter_mut().zip(q).for_each(|(x, y)| *x -= d * y);
        }
        let len = dot(&v, &v).sqrt();
        if len > 1e-12 {
            v.iter_mut().for_each(|x| *x /= len);
            ortho.push(v);
        }
    }
    let mut g: Vec<f64> = gaussian_vec(n, rng);
    for q in &ortho {
        let d = dot(&g, q);
        g.iter_mut().zip(q).for_each(|(x, y)| *x -= d * y);
    }
    let len = dot(&g, &g).sqrt();
    (len > 1e-9).then(|| g.into_iter().map(|x| x / len).collect())
}

/// Eigenvector of the smallest eigenvalue of the covariance of `pts`, by
/// power iteration on `tr(C) I - C`.
fn plane_normal(pts: &[&[f64]], n: usize, start: &[f64]) -> Option<Vec<f64>> {
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mut mean = vec![0.0; n];
    for p in pts {
        mean.iter_mut().zip(p.iter()).for_each(|(m, x)| *m += x / k);
    }
    let mut cov = vec![0.0; n * n];
    for p in pts {
        for i in 0..n {
            for j in 0..n {
                cov[i * n + j] += (p[i] - mean[i]) * (p[j] - mean[j]) / k;
            }
        }
    }
    let trace: f64 = (0..n).map(|i| cov[i * n + i]).sum();
    let mut v = start.to_vec();
    for _ in 0..200 {
        let mut w = vec![0.0; n];
        for i in 0..n {
            w[i] = trace * v[i] - (0..n).map(|j| cov[i * n + j] * v[j]).sum::<f64>();
        }
        let len = dot(&w, &w).sqrt();
        if !(len > 0.0) {
            return None;
        }
        v = w.into_iter().map(|x| x / len).collect();
    }
    Some(v)
}

/// Largest strip count over strips of half-width `alpha`, searched over
/// `search_budget` candidate normals: the points themselves, normals
/// orthogonal to pairs of points, normals of hyperplanes through triples,
/// and random directions; the best candidates are then refined by refitting
/// the normal to the points they capture. The result is a lower bound on
/// the true maximum.
pub fn worst_strip(points: &[UnitVector<f64>], alpha: f64, search_budget: usize, stream: RngStream) -> Result<(Strip, usize)> {
    if search_budget == 0 {
        return Err(invalid("search_budget", "must be at least 1"));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(invalid("alpha", format!("must be positive, got {alpha}")));
    }
    let first = points.first().ok_or_else(|| invalid("points", "need at least one point"))?;
    let n = first.dim();
    for p in points {
        check_dim(n, p.dim())?;
    }
    let np = points.len();
    let mut rng = stream.generator();
    let mut cands: Vec<Vec<f64>> = points.iter().map(|p| p.to_vec()).collect();
    let share = search_budget / 3;
    let pair_total = np * (np - 1) / 2;
    if np >= 2 {
        if pair_total <= share {
            for i in 0..np {
                for j in i + 1..np {
                    cands.extend(orthogonal_direction(n, &[&points[i], &points[j]], &mut rng));
                }
            }
        } else {
            for _ in 0..share {
                let idx = sample_indices(&mut rng, np, 2);
                cands.extend(orthogonal_direction(n, &[&points[idx.index(0)], &points[idx.index(1)]], &mut rng));
            }
        }
    }
    if np >= 3 && n >= 3 {
        for _ in 0..share {
            let idx = sample_indices(&mut rng, np, 3);
            let (p, q, r) = (&points[idx.index(0)], &points[idx.index(1)], &points[idx.index(2)]);
            let d1: Vec<f64> = q.iter().zip(p.iter()).map(|(a, b)| a - b).collect();
            let d2: Vec<f64> = r.iter().zip(p.iter()).map(|(a, b)| a - b).collect();
            cands.extend(orthogonal_direction(n, &[&d1, &d2], &mut rng));
        }
    }
    while cands.len() < np + search_budget {
        cands.push(sample_sphere_uniform::<f64, _>(n, &mut rng)?.into_vec());
    }

    let scored: Vec<(usize, f64)> = cands
        .par_iter()
        .map_init(Vec::new, |buf, th| best_window(points, th, alpha, buf))
        .collect();
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| scored[b].0.cmp(&scored[a].0).then(a.cmp(&b)));

    let refined: Vec<(usize, f64, Vec<f64>)> = order
        .iter()
        .take(16)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&&c| {
            let mut buf = Vec::new();
            let (mut count, mut tau) = scored[c];
            let mut theta = cands[c].clone();
            for _ in 0..8 {
                let inside: Vec<&[f64]> =
                    points.iter().filter(|p| (dot(p, &theta) + tau).abs() <= alpha).map(|p| p.as_slice()).collect();
                let Some(next) = plane_normal(&inside, n, &theta) else { break };
                let (c2, t2) = best_window(points, &next, alpha, &mut buf);
                if c2 <= count {
                    break;
                }
                count = c2;
                tau = t2;
                theta = next;
            }
            (count, tau, theta)
        })
        .collect();
    let (count, tau, theta) = refined
        .into_iter()
        .fold(None::<(usize, f64, Vec<f64>)>, |acc, c| match acc {
            Some(a) if a.0 >= c.0 => Some(a),
            _ => Some(c),
        })
        .expect("at least one candidate");
    let strip = Strip::new(UnitVector::normalize(theta)?, alpha, tau)?;
    // The window count and the strip predicate can differ by rounding at the
    // boundary; report the predicate.
    let _ = count;
    let exact = strip_count(points, &strip);
    Ok((strip, exact))
}

/// `N` independent uniform points on `S^{n-1}`.
pub fn generate_strip_config<R: Rng + ?Sized>(n: usize, big_n: usize, rng: &mut R) -> Result<Vec<UnitVector<f64>>> {
    (0..big_n).map(|_| sample_sphere_uniform(n, rng)).collect()
}

/// `N` points around `clusters` random centres, each perturbed by a
/// Gaussian of scale `spread` and renormalized.
pub fn clustered_config<R: Rng + ?Sized>(
    n: usize,
    big_n: usize,
    clusters: usize,
    spread: f64,
    rng: &mut R,
) -> Result<Vec<UnitVector<f64>>> {
    if clusters == 0 {
        return Err(invalid("clusters", "must be at least 1"));
    }
    let centres: Vec<UnitVector<f64>> = (0..clusters).map(|_| sample_sphere_uniform(n, rng)).collect::<Result<_>>()?;
    (0..big_n)
        .map(|i| {
            let g: Vec<f64> = gaussian_vec(n, rng);
            let c = &centres[i % clusters];
            UnitVector::normalize(c.iter().zip(&g).map(|(a, b)| a + spread * b).collect())
        })
        .collect()
}

/// `sqrt(N n log(N / (alpha n^{3/2}))) + N sqrt(n) alpha`.
pub fn strip_bound(n: usize, big_n: usize, alpha: f64) -> Result<f64> {
    let nf = n as f64;
    let bn = big_n as f64;
    let arg = bn / (alpha * nf.powf(1.5));
    if !(arg > 1.0) {
        return Err(Error::OutsideRegime(format!("log argument N / (alpha n^1.5) = {arg} must exceed 1")));
    }
    Ok((bn * nf * arg.ln()).sqrt() + bn * nf.sqrt() * alpha)
}

/// `(sum_k 1_{S(theta_k, 1/r, t/r)}(xi), e^{1/2} sum_k phi(r <xi, theta_k> + t))`.
/// The first never exceeds the second since `phi(u) >= e^{-1/2}` on `|u| <= 1`.
pub fn indicator_gaussian_domination(xi: &[f64], thetas: &[UnitVector<f64>], r: f64, t: f64) -> (usize, f64) {
    let mut count = 0;
    let mut sum = 0.0;
    for th in thetas {
        let u = r * dot(xi, th) + t;
        if (dot(xi, th) + t / r).abs() <= 1.0 / r {
            count += 1;
        }
        sum += phi(u);
    }
    (count, 0.5f64.exp() * sum)
}

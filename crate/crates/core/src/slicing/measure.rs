use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::{check_dim, dot, gaussian_vec, sample_sphere_uniform, UnitVector};
use crate::rng::{par_batches, par_indexed, Moments, RngStream};
use crate::scalar::phi;

use super::body::{RandomBody, SymmetricPolytope};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// One draw of `mu = gamma_n * (mu_1 * ... * mu_m + mu_{-1} * ... * mu_{-m}) / 2`:
/// `g + s sum_k R_k theta_{k j_k}` with a fair sign `s` and uniform indices.
pub fn sample_measure<R: Rng + ?Sized>(body: &RandomBody, rng: &mut R) -> Vec<f64> {
    let n = body.dim();
    let mut x: Vec<f64> = gaussian_vec(n, rng);
    let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
    for (thetas, &r) in body.thetas.iter().zip(&body.schedule.r_k) {
        let j = rng.random_range(0..thetas.len());
        for (xi, &th) in x.iter_mut().zip(thetas[j].iter()) {
            *xi += s * r * th;
        }
    }
    x
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectionDensity {
    pub value: f64,
    /// Zero for the exact sum.
    pub std_error: f64,
    pub exact: bool,
}

/// `R_k <xi, theta_kj>` for every scale and index.
pub fn section_projections(body: &RandomBody, xi: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_dim(body.dim(), xi.len())?;
    Ok(body
        .thetas
        .iter()
        .zip(&body.schedule.r_k)
        .map(|(ths, &r)| ths.iter().map(|th| r * dot(xi, th)).collect())
        .collect())
}

#[inline]
fn atom_density(t: f64, s: f64) -> f64 {
    0.5 * INV_SQRT_2PI * (phi(t + s) + phi(t - s))
}

/// Density at `t` of `<X, xi>` for `X ~ mu`, i.e. `(A + B) / 2` summed over
/// index tuples. Exact when the tuple count is within `tuple_budget`,
/// otherwise an unbiased Monte Carlo average over `tuple_budget` tuples.
pub fn section_density(body: &RandomBody, xi: &[f64], t: f64, tuple_budget: u64, stream: RngStream) -> Result<SectionDensity> {
    let proj = section_projections(body, xi)?;
    section_density_from(&proj, t, tuple_budget, stream)
}

pub fn section_density_from(proj: &[Vec<f64>], t: f64, tuple_budget: u64, stream: RngStream) -> Result<SectionDensity> {
    if tuple_budget == 0 {
        return Err(invalid("tuple_budget", "must be at least 1"));
    }
    let tuples = proj.iter().try_fold(1u64, |acc, p| acc.checked_mul(p.len() as u64));
    match tuples {
        Some(count) if count <= tuple_budget => {
            let mut idx = vec![0usize; proj.len()];
            let mut sum = 0.0;
            loop {
                let s: f64 = idx.iter().zip(proj).map(|(&j, p)| p[j]).sum();
                sum += atom_density(t, s);
                let mut k = 0;
                loop {
                    if k == idx.len() {
                        return Ok(SectionDensity { value: sum / count as f64, std_error: 0.0, exact: true });
                    }
                    idx[k] += 1;
                    if idx[k] < proj[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
            }
        }
        _ => {
            let parts = par_batches(stream, tuple_budget as usize, |range, rng| {
                let mut m = Moments::default();
                for _ in range {
                    let s: f64 = proj.iter().map(|p| p[rng.random_range(0..p.len())]).sum();
                    m.push(atom_density(t, s));
                }
                m
            });
            let mut m = Moments::default();
            parts.iter().for_each(|p| m.merge(p));
            Ok(SectionDensity { value: m.mean, std_error: m.std_error(), exact: false })
        }
    }
}

/// Trapezoid integral of the section density over `[-t_max, t_max]`.
pub fn section_integral(proj: &[Vec<f64>], t_max: f64, steps: usize, tuple_budget: u64) -> Result<f64> {
    if steps == 0 {
        return Err(invalid("steps", "must be at least 1"));
    }
    let h = 2.0 * t_max / steps as f64;
    let mut sum = 0.0;
    for i in 0..=steps {
        let t = -t_max + h * i as f64;
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        sum += w * section_density_from(proj, t, tuple_budget, RngStream::new(0))?.value;
    }
    Ok(sum * h)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MassEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
    pub solver_failures: u64,
}

/// Fraction of `mu` draws inside `dilation * K`. Aborts if more than 0.1% of
/// membership calls fail.
pub fn mass_of_dilated_body(body: &RandomBody, dilation: f64, trials: u64, stream: RngStream) -> Result<MassEstimate> {
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let parts = par_batches(stream, trials as usize, |range, rng| {
        let (mut hit, mut fail) = (0u64, 0u64);
        for _ in range {
            let x = sample_measure(body, rng);
            match body.contains(&x, dilation) {
                Ok(true) => hit += 1,
                Ok(false) => {}
                Err(_) => fail += 1,
            }
        }
        (hit, fail)
    });
    let (hit, fail) = parts.iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    if fail as f64 > 1e-3 * trials as f64 {
        return Err(Error::Solver(format!("{fail} of {trials} membership calls failed")));
    }
    let ok = trials - fail;
    let p = hit as f64 / ok.max(1) as f64;
    Ok(MassEstimate { estimate: p, std_error: (p * (1.0 - p) / ok.max(1) as f64).sqrt(), trials, solver_failures: fail })
}

/// `|B_2^n|` by the recursion `V_n = 2 pi V_{n-2} / n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let (mut v, start) = if n.is_multiple_of(2) { (1.0, 2) } else { (2.0, 3) };
    let mut k = start;
    while k <= n {
        v *= 2.0 * PI / k as f64;
        k += 2;
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolumeEstimate {
    pub volume: f64,
    pub std_error: f64,
    pub nth_root: f64,
    pub nth_root_se: f64,
    pub min_radial: f64,
}

/// `|dilation K| = |B_2^n| E_xi rho(xi)^n` over uniform directions, with the
/// radial function taken from the gauge program.
pub fn volume_estimate(body: &SymmetricPolytope, dilation: f64, directions: u64, stream: RngStream) -> Result<VolumeEstimate> {
    if directions == 0 {
        return Err(invalid("directions", "must be at least 1"));
    }
    let n = body.dim();
    let radials: Vec<f64> = par_indexed(stream, directions as usize, |_, rng| -> Result<f64> {
        let xi = sample_sphere_uniform::<f64, _>(n, rng)?;
        body.radial(&xi, dilation)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let m: Moments = radials.iter().map(|r| r.powi(n as i32)).collect();
    let vb = unit_ball_volume(n);
    let volume = vb * m.mean;
    let std_error = vb * m.std_error();
    let nth_root = volume.powf(1.0 / n as f64);
    let nth_root_se = nth_root / (n as f64 * volume) * std_error;
    let min_radial = radials.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(VolumeEstimate { volume, std_error, nth_root, nth_root_se, min_radial })
}

/// Options for [`slicing_report`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReportOptions {
    pub dilation: f64,
    pub mass_trials: u64,
    pub directions: u64,
    pub xi_samples: usize,
    pub t_points: usize,
    pub tuple_budget: u64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self { dilation: 4.0, mass_trials: 100_000, directions: 1000, xi_samples: 64, t_points: 41, tuple_budget: 1_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlicingReport {
    pub n: usize,
    pub max_section: f64,
    pub section_se: f64,
    pub argmax_xi: Vec<f64>,
    pub argmax_t: f64,
    pub mass: MassEstimate,
    pub volume: VolumeEstimate,
    /// `sqrt(n) max section |L|^{1/n} / mu(L)`.
    pub realized_c: f64,
    /// `min_xi mu(L) / (|L|^{1/n} section(xi, 0))` over the sampled directions.
    pub functional_min: f64,
}

/// Realized slicing constant of `L = dilation * K`. Sections are measured on
/// full hyperplanes, which dominates the section of `L`, so `realized_c` is
/// an upper estimate.
pub fn slicing_report(body: &RandomBody, opts: &ReportOptions, stream: RngStream) -> Result<SlicingReport> {
    if opts.xi_samples == 0 || opts.t_points == 0 {
        return Err(invalid("xi_samples/t_points", "must be at least 1"));
    }
    let n = body.dim();
    let t_max = body.schedule.r_total() + 3.0;
    let sections: Vec<(f64, f64, Vec<f64>, f64, f64)> = par_indexed(stream.derive(0), opts.xi_samples, |i, rng| -> Result<_> {
        let xi: UnitVector<f64> = sample_sphere_uniform(n, rng)?;
        let proj = section_projections(body, &xi)?;
        let sub = stream.derive(3).derive(i as u64);
        let at0 = section_density_from(&proj, 0.0, opts.tuple_budget, sub.derive(0))?.value;
        let (mut best, mut best_se, mut best_t) = (f64::NEG_INFINITY, 0.0, 0.0);
        for j in 0..opts.t_points {
            let t = if opts.t_points == 1 { 0.0 } else { t_max * j as f64 / (opts.t_points - 1) as f64 };
            let d = section_density_from(&proj, t, opts.tuple_budget, sub.derive(j as u64 + 1))?;
            if d.value > best {
                best = d.value;
                best_se = d.std_error;
                best_t = t;
            }
        }
        Ok((best, best_se, xi.into_vec(), best_t, at0))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let mass = mass_of_dilated_body(body, opts.dilation, opts.mass_trials, stream.derive(1))?;
    let volume = volume_estimate(&body.polytope, opts.dilation, opts.directions, stream.derive(2))?;
    let best = sections
        .iter()
        .fold(None::<&(f64, f64, Vec<f64>, f64, f64)>, |acc, s| match acc {
            Some(a) if a.0 >= s.0 => Some(a),
            _ => Some(s),
        })
        .expect("xi_samples >= 1");
    let max_at0 = sections.iter().map(|s| s.4).fold(f64::NEG_INFINITY, f64::max);
    let realized_c = (n as f64).sqrt() * best.0 * volume.nth_root / mass.estimate;
    let functional_min = mass.estimate / (volume.nth_root * max_at0);
    if !(realized_c.is_finite() && realized_c > 0.0) {
        return Err(Error::Numerical(format!("realized constant {realized_c} is not finite and positive")));
    }
    Ok(SlicingReport {
        n,
        max_section: best.0,
        section_se: best.1,
        argmax_xi: best.2.clone(),
        argmax_t: best.3,
        mass,
        volume,
        realized_c,
        functional_min,
    })
}

/// Report CSV header.
pub const REPORT_COLUMNS: [&str; 12] = [
    "n",
    "seed",
    "m",
    "N",
    "R",
    "max_section",
    "mass_4K",
    "vol_nth_root",
    "realized_C",
    "mass_se",
    "vol_nth_root_se",
    "section_se",
];

pub fn report_record(body: &RandomBody, report: &SlicingReport, seed: u64) -> Vec<String> {
    let join = |v: Vec<String>| v.join("|");
    vec![
        report.n.to_string(),
        seed.to_string(),
        body.schedule.m.to_string(),
        join(body.schedule.n_k.iter().map(|x| x.to_string()).collect()),
        join(body.schedule.r_k.iter().map(|x| x.to_string()).collect()),
        report.max_section.to_string(),
        report.mass.estimate.to_string(),
        report.volume.nth_root.to_string(),
        report.realized_c.to_string(),
        report.mass.std_error.to_string(),
        report.volume.nth_root_se.to_string(),
        report.section_se.to_string(),
    ]
}

pub fn write_report_csv<W: Write>(rows: &[Vec<String>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_COLUMNS)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

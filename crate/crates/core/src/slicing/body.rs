use std::io::Write;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::{check_dim, check_finite, dot, norm, sample_sphere_uniform, UnitVector};
use crate::lp::{minimize, LpOutcome};

use super::schedule::ScaleSchedule;

/// Origin of a vertex pair `+-v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexTag {
    /// `R_k theta_kj`, scale index `k` counted from 1.
    Scale(usize),
    /// A multiple of a coordinate axis.
    Axis(usize),
}

/// `conv{+-v_1, ..., +-v_m}` given by one representative per pair.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricPolytope {
    n: usize,
    half: Vec<f64>,
    tags: Vec<VertexTag>,
    /// Constraint matrix `[V, -V]` for the gauge program, row-major.
    lp_matrix: Vec<f64>,
    inradius_hint: f64,
}

impl SymmetricPolytope {
    /// `inradius_hint` must be a radius `r` with `r B_2^n` inside the body;
    /// pass `0` when unknown.
    pub fn new(n: usize, half: Vec<f64>, tags: Vec<VertexTag>, inradius_hint: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension { min: 1, got: 0 });
        }
        if half.len() != n * tags.len() || tags.is_empty() {
            return Err(invalid("vertices", "need one tag per vertex and at least one vertex"));
        }
        check_finite(&half, "vertices")?;
        let m = tags.len();
        let mut lp_matrix = vec![0.0; n * 2 * m];
        for (j, v) in half.chunks_exact(n).enumerate() {
            for i in 0..n {
                lp_matrix[i * 2 * m + j] = v[i];
                lp_matrix[i * 2 * m + m + j] = -v[i];
            }
        }
        Ok(Self { n, half, tags, lp_matrix, inradius_hint: inradius_hint.max(0.0) })
    }

    /// `scale * B_1^n`, the hull of `+-scale e_i`.
    pub fn cross_polytope(n: usize, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(invalid("scale", "must be positive"));
        }
        let mut half = vec![0.0; n * n];
        for i in 0..n {
            half[i * n + i] = scale;
        }
        Self::new(n, half, (0..n).map(VertexTag::Axis).collect(), scale / (n as f64).sqrt())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of vertices counting both signs.
    pub fn vertex_count(&self) -> usize {
        2 * self.tags.len()
    }

    /// Vertices with their tags, positive representatives first.
    pub fn vertices(&self) -> impl Iterator<Item = (VertexTag, f64, Vec<f64>)> + '_ {
        let pos = self.half.chunks_exact(self.n).zip(&self.tags).map(|(v, &t)| (t, 1.0, v.to_vec()));
        let neg = self.half.chunks_exact(self.n).zip(&self.tags).map(|(v, &t)| (t, -1.0, v.iter().map(|x| -x).collect()));
        pos.chain(neg)
    }

    /// Support function `h(u) = max_v <v, u>`.
    pub fn support(&self, u: &[f64]) -> f64 {
        self.half.chunks_exact(self.n).map(|v| dot(v, u).abs()).fold(0.0, f64::max)
    }

    pub fn inradius_hint(&self) -> f64 {
        self.inradius_hint
    }

    /// Minkowski gauge `||x||_K = min { sum lambda : sum lambda_v v = x, lambda >= 0 }`.
    pub fn gauge(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.n, x.len())?;
        check_finite(x, "x")?;
        if x.iter().all(|&v| v == 0.0) {
            return Ok(0.0);
        }
        let cols = 2 * self.tags.len();
        match minimize(&vec![1.0; cols], &self.lp_matrix, x)? {
            LpOutcome::Optimal { value, .. } => Ok(value),
            LpOutcome::Infeasible => Err(Error::Solver("point outside the linear span of the vertices".into())),
            LpOutcome::Unbounded => Err(Error::Solver("gauge program unbounded".into())),
        }
    }

    /// `x in dilation * K`, up to a relative tolerance of `1e-9`.
    pub fn contains(&self, x: &[f64], dilation: f64) -> Result<bool> {
        if !(dilation.is_finite() && dilation > 0.0) {
            return Err(invalid("dilation", "must be positive"));
        }
        check_dim(self.n, x.len())?;
        check_finite(x, "x")?;
        let len = norm(x);
        if len <= dilation * self.inradius_hint {
            return Ok(true);
        }
        let u: Vec<f64> = x.iter().map(|v| v / len).collect();
        if len > dilation * self.support(&u) * (1.0 + 1e-9) {
            return Ok(false);
        }
        Ok(self.gauge(x)? <= dilation * (1.0 + 1e-9))
    }

    /// Radial function `max { lambda : lambda xi in dilation K }` from the gauge.
    pub fn radial(&self, xi: &[f64], dilation: f64) -> Result<f64> {
        let g = self.gauge(xi)?;
        if !(g > 0.0) {
            return Err(Error::Numerical("zero gauge for a nonzero direction".into()));
        }
        Ok(dilation / g)
    }

    /// Radial function by bisection over [`contains`](Self::contains), an
    /// independent route to the same quantity.
    pub fn radial_bisection(&self, xi: &[f64], dilation: f64, tol: f64) -> Result<f64> {
        let len = norm(xi);
        let u: Vec<f64> = xi.iter().map(|v| v / len).collect();
        let mut lo = 0.0;
        let mut hi = dilation * self.support(&u) * 1.01 + tol;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            let p: Vec<f64> = xi.iter().map(|v| v * mid).collect();
            if self.contains(&p, dilation)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// The random body `K = conv{+-R_k theta_kj, +-n e_i}` with its frame.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomBody {
    pub schedule: ScaleSchedule,
    /// `thetas[k]` holds the `N_k` directions of scale `k + 1`.
    pub thetas: Vec<Vec<UnitVector<f64>>>,
    pub polytope: SymmetricPolytope,
}

impl RandomBody {
    pub fn dim(&self) -> usize {
        self.schedule.n
    }

    pub fn vertex_count(&self) -> usize {
        self.polytope.vertex_count()
    }

    pub fn contains(&self, x: &[f64], dilation: f64) -> Result<bool> {
        self.polytope.contains(x, dilation)
    }

    /// Vertex CSV: `scale,sign,x_1..x_n` with scale `k` or `axis`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.dim();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["scale".to_string(), "sign".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        w.write_record(&header)?;
        for (tag, sign, v) in self.polytope.vertices() {
            let mut rec = vec![
                match tag {
                    VertexTag::Scale(k) => k.to_string(),
                    VertexTag::Axis(_) => "axis".to_string(),
                },
                if sign > 0.0 { "+".into() } else { "-".into() },
            ];
            rec.extend(v.iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Samples the frame and materializes the vertex list. `budget` caps the
/// number of vertices.
pub fn build_body<R: Rng + ?Sized>(schedule: &ScaleSchedule, budget: u64, rng: &mut R) -> Result<RandomBody> {
    let n = schedule.n;
    let total = schedule.total_vertices().unwrap_or(u64::MAX);
    if total > budget {
        return Err(Error::TooLargeToEnumerate { bound: total as f64, budget });
    }
    let mut thetas = Vec::with_capacity(schedule.m);
    let mut half = Vec::new();
    let mut tags = Vec::new();
    for (k, (&count, &r)) in schedule.n_k.iter().zip(&schedule.r_k).enumerate() {
        let mut scale = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let th = sample_sphere_uniform::<f64, _>(n, rng)?;
            half.extend(th.iter().map(|x| r * x));
            tags.push(VertexTag::Scale(k + 1));
            scale.push(th);
        }
        thetas.push(scale);
    }
    let nf = n as f64;
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = nf;
        half.extend(e);
        tags.push(VertexTag::Axis(i));
    }
    // The axis vertices alone give n B_1^n, which contains sqrt(n) B_2^n.
    let polytope = SymmetricPolytope::new(n, half, tags, nf.sqrt())?;
    Ok(RandomBody { schedule: schedule.clone(), thetas, polytope })
}

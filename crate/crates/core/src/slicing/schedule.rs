use crate::error::{invalid, Error, Result};

/// `log^{(k)} x`: the natural logarithm applied `k` times. Returns `-inf`
/// once an intermediate value drops to zero or below.
pub fn iterated_log(x: f64, k: usize) -> f64 {
    let mut v = x;
    for _ in 0..k {
        if v <= 0.0 {
            return f64::NEG_INFINITY;
        }
        v = v.ln();
    }
    v
}

/// Replacement `(m, N_k, R_k)` for runs where the formulas are infeasible.
#[derive(Clone, Debug, PartialEq)]
pub struct DeskOverride {
    pub m: usize,
    pub n_k: Vec<u64>,
    pub r_k: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleSchedule {
    pub n: usize,
    pub c0: f64,
    pub m: usize,
    pub n_k: Vec<u64>,
    pub r_k: Vec<f64>,
    /// The scales came from a [`DeskOverride`].
    pub overridden: bool,
    /// No `m >= 1` satisfied the threshold and `m = 1` was forced.
    pub forced_m: bool,
    /// Some `N_k` exceeded `u64::MAX` and was clamped.
    pub saturated: bool,
}

impl ScaleSchedule {
    pub fn total_vertices(&self) -> Option<u64> {
        let s = self.n_k.iter().try_fold(self.n as u64, |acc, &k| acc.checked_add(k))?;
        s.checked_mul(2)
    }

    /// `sum_k R_k`, the largest atom norm of the mixture.
    pub fn r_total(&self) -> f64 {
        self.r_k.iter().sum()
    }
}

fn saturating_count(x: f64, saturated: &mut bool) -> u64 {
    if x >= u64::MAX as f64 {
        *saturated = true;
        u64::MAX
    } else {
        x.ceil() as u64
    }
}

/// Scales `N_1 = n^10`, `N_k = n (log^{(k-1)} n)^5`, `R_k = n / log^{(k)} n`
/// with `m` the largest integer such that `log^{(m)} n >= C0`, or the
/// override verbatim.
pub fn make_schedule(n: usize, c0: f64, desk: Option<DeskOverride>) -> Result<ScaleSchedule> {
    if n < 2 {
        return Err(Error::Dimension { min: 2, got: n });
    }
    if !c0.is_finite() {
        return Err(Error::NonFinite("C0"));
    }
    if let Some(d) = desk {
        if d.m == 0 || d.n_k.len() != d.m || d.r_k.len() != d.m {
            return Err(invalid("desk override", "need m >= 1 and m values for both N and R"));
        }
        if d.n_k.contains(&0) || d.r_k.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(invalid("desk override", "N_k must be >= 1 and R_k positive"));
        }
        return Ok(ScaleSchedule {
            n,
            c0,
            m: d.m,
            n_k: d.n_k,
            r_k: d.r_k,
            overridden: true,
            forced_m: false,
            saturated: false,
        });
    }
    let nf = n as f64;
    let mut m = 0;
    while iterated_log(nf, m + 1) >= c0 {
        m += 1;
    }
    let forced_m = m == 0;
    let m = m.max(1);
    let mut saturated = false;
    let mut n_k = Vec::with_capacity(m);
    let mut r_k = Vec::with_capacity(m);
    for k in 1..=m {
        let count = if k == 1 { nf.powi(10) } else { nf * iterated_log(nf, k - 1).powi(5) };
        n_k.push(saturating_count(count, &mut saturated));
        let lk = iterated_log(nf, k);
        if !(lk > 0.0) {
            return Err(invalid("C0", format!("log^({k}) n = {lk} is not positive; R_{k} undefined")));
        }
        r_k.push(nf / lk);
    }
    Ok(ScaleSchedule { n, c0, m, n_k, r_k, overridden: false, forced_m, saturated })
}

/// Single-scale schedule `N = big_n`, `R = r`.
pub fn desk_schedule(n: usize, big_n: u64, r: f64) -> Result<ScaleSchedule> {
    make_schedule(n, 1.0, Some(DeskOverride { m: 1, n_k: vec![big_n], r_k: vec![r] }))
}

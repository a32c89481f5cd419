use std::io::Write;

use crate::error::{invalid, Result};
use crate::geometry::{check_dim, norm_sq, RealMatrix};
use crate::ledger::ConstantsLedger;
use crate::net::{NetParams, RoundingLaw};
use crate::rng::{par_batches, Moments, RngStream};

#[derive(Clone, Debug, PartialEq)]
pub struct HsComparisonResult {
    /// `|A eta|^2` for every trial, in trial order.
    pub aeta_sq: Vec<f64>,
    pub axi_sq: f64,
    pub hs_sq: f64,
    /// `rho^2 / n`.
    pub scale: f64,
    /// Exact `E |A eta|^2 = |A xi|^2 + (rho^2/n) sum p_i (1 - p_i) |A e_i|^2`.
    pub analytic_mean: f64,
    pub mc_mean: f64,
    pub mc_std_error: f64,
    /// Smallest `C1` with `C2` from the ledger.
    pub fitted_c1: f64,
    /// Smallest `C2` with `C1` from the ledger.
    pub fitted_c2: f64,
}

impl HsComparisonResult {
    /// `|A eta|^2 <= c1 |A xi|^2 + c2 (rho^2/n) ||A||_HS^2` on every trial.
    pub fn holds(&self, c1: f64, c2: f64) -> bool {
        let rhs = c1 * self.axi_sq + c2 * self.scale * self.hs_sq;
        self.aeta_sq.iter().all(|&v| v <= rhs * (1.0 + 1e-12))
    }

    /// The same inequality for the exact expectation.
    pub fn holds_in_expectation(&self, c1: f64, c2: f64) -> bool {
        self.analytic_mean <= (c1 * self.axi_sq + c2 * self.scale * self.hs_sq) * (1.0 + 1e-12)
    }

    /// CSV columns `trial,Aeta_sq,Axi_sq,hs_sq`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["trial", "Aeta_sq", "Axi_sq", "hs_sq"])?;
        for (i, v) in self.aeta_sq.iter().enumerate() {
            w.write_record([i.to_string(), v.to_string(), self.axi_sq.to_string(), self.hs_sq.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Exact `E |A eta^xi|^2`, obtained by summing the rounding variance of
/// `<eta, row>` over the rows of `A`.
pub fn hs_expectation(a: &RealMatrix<f64>, law: &RoundingLaw<f64>, xi: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..a.rows() {
        let (mean, var) = law.moments(xi, a.row(i))?;
        total += mean * mean + var;
    }
    Ok(total)
}

pub fn hs_compare(
    a: &RealMatrix<f64>,
    xi: &[f64],
    params: &NetParams<f64>,
    trials: u64,
    stream: RngStream,
    ledger: &ConstantsLedger<f64>,
) -> Result<HsComparisonResult> {
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    check_dim(a.cols(), xi.len())?;
    let law = RoundingLaw::new(xi, params)?;
    let axi_sq = norm_sq(&a.apply(xi)?);
    let hs_sq = a.hs_norm_sq();
    let scale = params.rho() * params.rho() / params.n() as f64;
    let analytic_mean = hs_expectation(a, &law, xi)?;
    let batches = par_batches(stream, trials as usize, |range, rng| -> Result<Vec<f64>> {
        range.map(|_| Ok(norm_sq(&a.apply(&law.sample(rng).value())?))).collect()
    });
    let mut aeta_sq = Vec::with_capacity(trials as usize);
    for b in batches {
        aeta_sq.extend(b?);
    }
    let m: Moments = aeta_sq.iter().copied().collect();
    let worst = aeta_sq.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let fitted_c1 = if axi_sq > 0.0 { ((worst - ledger.hs_c2 * scale * hs_sq) / axi_sq).max(0.0) } else { 0.0 };
    let fitted_c2 = if scale * hs_sq > 0.0 { ((worst - ledger.hs_c1 * axi_sq) / (scale * hs_sq)).max(0.0) } else { 0.0 };
    Ok(HsComparisonResult {
        aeta_sq,
        axi_sq,
        hs_sq,
        scale,
        analytic_mean,
        mc_mean: m.mean,
        mc_std_error: m.std_error(),
        fitted_c1,
        fitted_c2,
    })
}

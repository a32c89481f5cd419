use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::error::{invalid, Result};
use crate::geometry::RealMatrix;
use crate::rng::{par_batches, RngStream};

#[derive(Clone, Debug, PartialEq)]
pub struct BKappaSolution {
    pub alphas: Vec<f64>,
    pub value: f64,
    pub constraint_active: bool,
}

/// `B_kappa = min sum alpha_i^2 c_i` over `alpha_i in [0, 1]` with
/// `prod alpha_i >= kappa^{-n}`, where `c_i = |A e_i|^2` and `n = c.len()`.
///
/// On the active constraint the unclipped coordinates satisfy
/// `alpha_i^2 c_i = lambda`; coordinates that would exceed 1 are frozen at 1
/// and `lambda` is re-solved, at most `n` times.
pub fn b_kappa(column_norms_sq: &[f64], kappa: f64) -> Result<BKappaSolution> {
    let c = column_norms_sq;
    if c.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
        return Err(invalid("column_norms_sq", "entries must be finite and nonnegative"));
    }
    if !(kappa.is_finite() && kappa >= 1.0) {
        return Err(invalid("kappa", format!("must be at least 1, got {kappa}")));
    }
    let n = c.len();
    let mut alphas = vec![1.0; n];
    let budget = n as f64 * kappa.ln();
    let mut free: Vec<usize> = (0..n).filter(|&i| c[i] > 0.0).collect();
    let active = budget > 0.0 && !free.is_empty();
    if active {
        for _ in 0..=n {
            let k = free.len() as f64;
            let ln_lambda = (free.iter().map(|&i| c[i].ln()).sum::<f64>() - 2.0 * budget) / k;
            let lambda = ln_lambda.exp();
            let (clip, keep): (Vec<usize>, Vec<usize>) = free.iter().copied().partition(|&i| c[i] < lambda);
            if clip.is_empty() {
                for &i in &free {
                    alphas[i] = (0.5 * (ln_lambda - c[i].ln())).exp();
                }
                break;
            }
            free = keep;
        }
    }
    let value = alphas.iter().zip(c).map(|(a, ci)| a * a * ci).sum();
    Ok(BKappaSolution { alphas, value, constraint_active: active })
}

/// Random matrix models with independent columns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MatrixSampler {
    Gaussian { rows: usize, cols: usize },
    Rademacher { rows: usize, cols: usize },
    /// Gaussian entries with the first column scaled by `scale`.
    HeavyColumn { rows: usize, cols: usize, scale: f64 },
    /// Student-t entries with `dof` degrees of freedom.
    StudentT { rows: usize, cols: usize, dof: f64 },
}

impl MatrixSampler {
    pub fn shape(&self) -> (usize, usize) {
        match *self {
            MatrixSampler::Gaussian { rows, cols }
            | MatrixSampler::Rademacher { rows, cols }
            | MatrixSampler::HeavyColumn { rows, cols, .. }
            | MatrixSampler::StudentT { rows, cols, .. } => (rows, cols),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<RealMatrix<f64>> {
        let (rows, cols) = self.shape();
        let mut data = Vec::with_capacity(rows * cols);
        match *self {
            MatrixSampler::Gaussian { .. } => data.extend((0..rows * cols).map(|_| -> f64 { StandardNormal.sample(rng) })),
            MatrixSampler::Rademacher { .. } => {
                data.extend((0..rows * cols).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }))
            }
            MatrixSampler::HeavyColumn { scale, .. } => {
                for idx in 0..rows * cols {
                    let g: f64 = StandardNormal.sample(rng);
                    data.push(if idx % cols == 0 { scale * g } else { g });
                }
            }
            MatrixSampler::StudentT { dof, .. } => {
                let d = StudentT::new(dof).map_err(|e| invalid("dof", e.to_string()))?;
                data.extend((0..rows * cols).map(|_| d.sample(rng)));
            }
        }
        RealMatrix::new(rows, cols, data)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeviationResult {
    pub frequency: f64,
    pub std_error: f64,
    /// Pilot estimate of `E ||A||_HS^2`.
    pub hs_mean: f64,
    pub mean_b: f64,
    pub trials: u64,
}

/// Frequency of `B_kappa(A) >= 2 E ||A||_HS^2`, with the expectation taken
/// from an independent pilot run of `pilot` matrices.
pub fn b_kappa_deviation(
    sampler: &MatrixSampler,
    kappa: f64,
    trials: u64,
    pilot: u64,
    stream: RngStream,
) -> Result<DeviationResult> {
    if trials == 0 || pilot == 0 {
        return Err(invalid("trials", "trials and pilot must be at least 1"));
    }
    let pilot_sums = par_batches(stream.derive(0), pilot as usize, |range, rng| -> Result<f64> {
        let mut s = 0.0;
        for _ in range {
            s += sampler.sample(rng)?.hs_norm_sq();
        }
        Ok(s)
    });
    let hs_mean = pilot_sums.into_iter().sum::<Result<f64>>()? / pilot as f64;
    if !(hs_mean > 0.0 && hs_mean.is_finite()) {
        return Err(invalid("sampler", format!("pilot estimate of E||A||_HS^2 is {hs_mean}")));
    }
    let parts = par_batches(stream.derive(1), trials as usize, |range, rng| -> Result<(u64, f64)> {
        let (mut hits, mut sum_b) = (0u64, 0.0);
        for _ in range {
            let a = sampler.sample(rng)?;
            let b = b_kappa(&a.column_norms_sq(), kappa)?.value;
            sum_b += b;
            if b >= 2.0 * hs_mean {
                hits += 1;
            }
        }
        Ok((hits, sum_b))
    });
    let (mut hits, mut sum_b) = (0u64, 0.0);
    for p in parts {
        let (h, s) = p?;
        hits += h;
        sum_b += s;
    }
    let f = hits as f64 / trials as f64;
    Ok(DeviationResult {
        frequency: f,
        std_error: (f * (1.0 - f) / trials as f64).sqrt(),
        hs_mean,
        mean_b: sum_b / trials as f64,
        trials,
    })
}

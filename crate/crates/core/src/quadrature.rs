//! Globally adaptive 15-point Gauss-Kronrod quadrature.

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
struct Piece<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> Piece<T> {
    let half = (b - a) * T::lit(0.5);
    let center = (a + b) * T::lit(0.5);
    let fc = f(center);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let s = f(center - dx) + f(center + dx);
        kron += s * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss += s * T::lit(WG[j / 2]);
        }
    }
    Piece { a, b, value: kron * half, error: ((kron - gauss) * half).abs() }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
}

/// Integrates `f` over `[points[0], points[last]]`, starting from the
/// partition given by `points` and bisecting the worst piece until the
/// summed error estimate is below `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<T: Real, F: Fn(T) -> T>(
    f: F,
    points: &[T],
    rel_tol: T,
    abs_tol: T,
    max_intervals: usize,
) -> Result<Integral<T>> {
    if points.len() < 2 {
        return Err(Error::Numerical("quadrature needs at least two points".into()));
    }
    let mut pieces: Vec<Piece<T>> = points.windows(2).filter(|w| w[1] > w[0]).map(|w| gk15(&f, w[0], w[1])).collect();
    loop {
        let value: T = pieces.iter().map(|p| p.value).sum();
        let error: T = pieces.iter().map(|p| p.error).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::Numerical("non-finite integrand".into()));
        }
        let target = abs_tol.max(rel_tol * value.abs());
        if error <= target {
            return Ok(Integral { value, error, intervals: pieces.len() });
        }
        if pieces.len() >= max_intervals {
            return Err(Error::Numerical(format!(
                "quadrature did not converge: error {error} > target {target} after {} intervals",
                pieces.len()
            )));
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, p)| if p.error > acc.1 { (i, p.error) } else { acc });
        let p = pieces.swap_remove(worst);
        let mid = (p.a + p.b) * T::lit(0.5);
        if !(mid > p.a && mid < p.b) {
            return Err(Error::Numerical("interval below floating point resolution".into()));
        }
        pieces.push(gk15(&f, p.a, mid));
        pieces.push(gk15(&f, mid, p.b));
    }
}

//! Named slots for absolute constants that are only known to exist.
//!
//! Every slot defaults to a concrete value (`1` unless a provably valid
//! value is known) and can be overridden from a flat `key=value` file or
//! replaced by a fitted value.

use crate::error::{invalid, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantsLedger<T> {
    pub c1: T,
    pub c2: T,
    pub c3: T,
    pub c4: T,
    pub c5: T,
    pub c6: T,
    pub c7: T,
    /// `C3` of the supremum bound for Gaussian sums.
    pub c3_key: T,
    /// `C4` of the supremum bound.
    pub c4_key: T,
    /// `C5` of the supremum bound (`q >= 1 - C5 sqrt(n) / r`).
    pub c5_key: T,
    /// Exponent constant of the two-sided Hoeffding bound (classical: 1/2).
    pub c_hoeffding: T,
    /// Constant of the smoothing lower bound, `sqrt(pi / e)`.
    pub c_smoothing: T,
    /// `c` in the `(1 + c (log n)^2 / n)` factor of the sphere expectation bound.
    pub c_expectation: T,
    /// Strip-occupancy constant.
    pub c_tilde_strips: T,
    /// Matrix comparison constants; `(2, 1/2)` is valid in expectation.
    pub hs_c1: T,
    pub hs_c2: T,
}

impl<T: Real> Default for ConstantsLedger<T> {
    fn default() -> Self {
        let one = T::one();
        Self {
            c1: one,
            c2: one,
            c3: one,
            c4: one,
            c5: one,
            c6: one,
            c7: one,
            c3_key: one,
            c4_key: one,
            c5_key: one,
            c_hoeffding: T::lit(0.5),
            c_smoothing: (T::PI() / T::E()).sqrt(),
            c_expectation: one,
            c_tilde_strips: one,
            hs_c1: T::lit(2.0),
            hs_c2: T::lit(0.5),
        }
    }
}

impl<T: Real> ConstantsLedger<T> {
    pub const KEYS: [&'static str; 16] = [
        "C1", "C2", "C3", "C4", "C5", "C6", "C7", "C3_key", "C4_key", "C5_key", "c_hoeffding",
        "C_smoothing", "c_expectation", "C_tilde_strips", "hs_C1", "hs_C2",
    ];

    fn slot_mut(&mut self, key: &str) -> Option<&mut T> {
        Some(match key {
            "C1" => &mut self.c1,
            "C2" => &mut self.c2,
            "C3" => &mut self.c3,
            "C4" => &mut self.c4,
            "C5" => &mut self.c5,
            "C6" => &mut self.c6,
            "C7" => &mut self.c7,
            "C3_key" => &mut self.c3_key,
            "C4_key" => &mut self.c4_key,
            "C5_key" => &mut self.c5_key,
            "c_hoeffding" => &mut self.c_hoeffding,
            "C_smoothing" => &mut self.c_smoothing,
            "c_expectation" => &mut self.c_expectation,
            "C_tilde_strips" => &mut self.c_tilde_strips,
            "hs_C1" => &mut self.hs_c1,
            "hs_C2" => &mut self.hs_c2,
            _ => return None,
        })
    }

    pub fn get(&self, key: &str) -> Option<T> {
        self.clone().slot_mut(key).map(|v| *v)
    }

    pub fn set(&mut self, key: &str, value: T) -> Result<()> {
        if !(value.is_finite() && value > T::zero()) {
            return Err(invalid("ledger", format!("constant {key} must be positive and finite, got {value}")));
        }
        match self.slot_mut(key) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(invalid("ledger", format!("unknown constant `{key}`"))),
        }
    }

    /// Parses flat `key=value` lines on top of the defaults. Blank lines and
    /// `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut ledger = Self::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid("ledger", format!("expected key=value, got `{line}`")))?;
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|_| invalid("ledger", format!("`{}` is not a number", v.trim())))?;
            ledger.set(k.trim(), T::lit(value))?;
        }
        Ok(ledger)
    }

    /// Canonical `key=value` listing in [`Self::KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, T)> {
        Self::KEYS.iter().map(|&k| (k, self.get(k).expect("known key"))).collect()
    }
}

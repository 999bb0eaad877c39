//! Arithmetic policies for the lattice recursions.
//!
//! Zero temperature works in `(max, +)` on raw weights. Positive temperature
//! works in `(logsumexp, +)` on log-weights. Every table, increment and queue
//! operation is written once against [`Semiring`] and instantiated for both.

use serde::{Deserialize, Serialize};

pub trait Semiring: Copy + Clone + Send + Sync + std::fmt::Debug + Default + 'static {
    const TEMPERATURE: Temperature;

    /// Maps a positive weight into the additive domain.
    fn lift(w: f64) -> f64;

    /// Inverse of [`Semiring::lift`].
    fn lower(v: f64) -> f64;

    /// Path aggregation: `max` or `logsumexp`.
    fn plus(a: f64, b: f64) -> f64;

    /// Aggregate of the negated values, negated back: `min` or
    /// `-log(e^-a + e^-b)`.
    #[inline]
    fn dual(a: f64, b: f64) -> f64 {
        -Self::plus(-a, -b)
    }

    /// `plus(a, b)` together with the share of it carried by tracked paths,
    /// given the shares `sa` and `sb` of the operands.
    fn plus_share(a: f64, b: f64, sa: f64, sb: f64) -> (f64, f64);

    /// True when tracked paths carry a non-negligible share.
    fn share_dominates(share: f64) -> bool;

    /// Tolerance for identities whose two sides share the same inputs.
    const IDENTITY_TOL: f64;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MaxPlus;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LogSumExp;

/// Share of the partition function that may come from edge-touching paths
/// before a table counts as contaminated.
pub const EDGE_MASS_FRACTION: f64 = 1e-9;

impl Semiring for MaxPlus {
    const TEMPERATURE: Temperature = Temperature::Zero;
    const IDENTITY_TOL: f64 = 1e-9;

    #[inline]
    fn lift(w: f64) -> f64 {
        w
    }

    #[inline]
    fn lower(v: f64) -> f64 {
        v
    }

    #[inline]
    fn plus(a: f64, b: f64) -> f64 {
        a.max(b)
    }

    /// The share is 1 when some maximizing path is tracked, else 0.
    #[inline]
    fn plus_share(a: f64, b: f64, sa: f64, sb: f64) -> (f64, f64) {
        if a > b {
            (a, sa)
        } else if b > a {
            (b, sb)
        } else {
            (a, sa.max(sb))
        }
    }

    #[inline]
    fn share_dominates(share: f64) -> bool {
        share > 0.0
    }
}

impl Semiring for LogSumExp {
    const TEMPERATURE: Temperature = Temperature::Positive;
    const IDENTITY_TOL: f64 = 1e-7;

    #[inline]
    fn lift(w: f64) -> f64 {
        w.ln()
    }

    #[inline]
    fn lower(v: f64) -> f64 {
        v.exp()
    }

    #[inline]
    fn plus(a: f64, b: f64) -> f64 {
        logaddexp(a, b)
    }

    #[inline]
    fn plus_share(a: f64, b: f64, sa: f64, sb: f64) -> (f64, f64) {
        let (hi, lo, s_hi, s_lo) = if a >= b { (a, b, sa, sb) } else { (b, a, sb, sa) };
        if lo == f64::NEG_INFINITY {
            return (hi, s_hi);
        }
        let e = (lo - hi).exp();
        (hi + e.ln_1p(), (s_hi + s_lo * e) / (1.0 + e))
    }

    #[inline]
    fn share_dominates(share: f64) -> bool {
        share > EDGE_MASS_FRACTION
    }
}

/// `log(e^a + e^b)` without overflow; `-inf` is the neutral element.
#[inline]
pub fn logaddexp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `log(sum e^x)` over a slice; `-inf` for an empty slice.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Temperature {
    Zero,
    Positive,
}

impl Temperature {
    pub const BOTH: [Temperature; 2] = [Temperature::Zero, Temperature::Positive];

    pub fn identity_tolerance(self) -> f64 {
        match self {
            Temperature::Zero => MaxPlus::IDENTITY_TOL,
            Temperature::Positive => LogSumExp::IDENTITY_TOL,
        }
    }
}

impl std::fmt::Display for Temperature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Temperature::Zero => "zero",
            Temperature::Positive => "positive",
        })
    }
}

impl std::str::FromStr for Temperature {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "zero" => Ok(Temperature::Zero),
            "positive" => Ok(Temperature::Positive),
            _ => Err(crate::Error::Parameter(format!("unknown temperature {s:?}"))),
        }
    }
}

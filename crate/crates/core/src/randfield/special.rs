//! Digamma and trigamma.
//!
//! Both use upward recurrence to `x >= 8` followed by the Bernoulli asymptotic
//! series. The recurrence terms are accumulated in double-double arithmetic so
//! that the `1/x^2` pole term of the trigamma near zero keeps its last bit.

use crate::error::{Error, Result};

const SHIFT_TO: f64 = 8.0;

/// Digamma (`order = 0`) or trigamma (`order = 1`) at `x > 0`.
pub fn psi(order: u32, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("psi requires finite x > 0, got {x}")));
    }
    match order {
        0 => Ok(digamma(x)),
        1 => Ok(trigamma(x)),
        _ => Err(Error::Parameter(format!("psi order must be 0 or 1, got {order}"))),
    }
}

/// Digamma for `x > 0` (no domain check).
pub fn digamma(mut x: f64) -> f64 {
    let mut acc = DoubleDouble::ZERO;
    while x < SHIFT_TO {
        acc = acc.add(DoubleDouble::recip(x).neg());
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // -sum B_2k / (2k x^2k)
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    let tail = x.ln() - 0.5 * inv - series;
    acc.add_f64(tail).value()
}

/// Trigamma for `x > 0` (no domain check).
pub fn trigamma(mut x: f64) -> f64 {
    let mut terms = Vec::with_capacity(8);
    while x < SHIFT_TO {
        terms.push(DoubleDouble::recip(x).square());
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // 1/x + 1/(2x^2) + sum B_2k / x^(2k+1)
    let series = inv
        + inv2
            * (0.5
                + inv
                    * (1.0 / 6.0
                        - inv2
                            * (1.0 / 30.0
                                - inv2
                                    * (1.0 / 42.0
                                        - inv2
                                            * (1.0 / 30.0
                                                - inv2 * (5.0 / 66.0 - inv2 * (691.0 / 2730.0 - inv2 * 7.0 / 6.0)))))));
    // smallest terms first
    let mut acc = DoubleDouble::from(series);
    for t in terms.into_iter().rev() {
        acc = acc.add(t);
    }
    acc.value()
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };

    fn from(v: f64) -> Self {
        Self { hi: v, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Self { hi: s, lo: err }
    }

    /// `1/x` to roughly 2^-104 relative precision.
    fn recip(x: f64) -> Self {
        let q = 1.0 / x;
        // residual 1 - q*x is exact under fma
        let r = (-q).mul_add(x, 1.0);
        Self::two_sum(q, r / x)
    }

    fn square(self) -> Self {
        let p = self.hi * self.hi;
        let e = self.hi.mul_add(self.hi, -p);
        Self::two_sum(p, e + 2.0 * self.hi * self.lo)
    }

    fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }

    fn add(self, o: Self) -> Self {
        let s = Self::two_sum(self.hi, o.hi);
        Self::two_sum(s.hi, s.lo + self.lo + o.lo)
    }

    fn add_f64(self, v: f64) -> Self {
        self.add(Self::from(v))
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn trigamma_at_one_is_zeta_two() {
        assert!((psi(1, 1.0).unwrap() - PI * PI / 6.0).abs() < 1e-14);
    }

    #[test]
    fn trigamma_at_half() {
        assert!((trigamma(0.5) - PI * PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn trigamma_recurrence_examples() {
        for x in [0.5, 2.0, 10.0] {
            let d = psi(1, x).unwrap() - psi(1, x + 1.0).unwrap();
            assert!((d - 1.0 / (x * x)).abs() < 1e-12, "x={x}: {d}");
        }
    }

    #[test]
    fn domain_and_order_errors() {
        assert!(matches!(psi(0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(psi(1, -1.0), Err(Error::Domain(_))));
        assert!(matches!(psi(2, 1.0), Err(Error::Parameter(_))));
    }
}

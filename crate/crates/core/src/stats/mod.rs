//! Hypothesis tests used to check distributional claims, and the running
//! maximum bound checkers in [`bounds`].

pub mod bounds;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::randfield::Law;

pub use bounds::{
    certify, check_running_max_lower, check_running_max_upper, fit_subexp, Branch, Certificate, LowerBoundRow,
    RwConfig, StepLaw, SubExpParams, UpperBoundRow,
};

/// Smallest sample accepted by the asymptotic tests.
pub const MIN_SAMPLE: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub n: usize,
    pub pass: bool,
}

impl TestReport {
    pub fn new(name: impl Into<String>, statistic: f64, p_value: f64, alpha: f64, n: usize) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self { name: name.into(), statistic, p_value, alpha, n, pass: p_value > alpha }
    }
}

fn check_finite(xs: &[f64], min: usize) -> Result<()> {
    if xs.len() < min {
        return Err(Error::Input(format!("need at least {min} samples, got {}", xs.len())));
    }
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::Input("samples contain NaN".into()));
    }
    Ok(())
}

/// Kolmogorov survival function `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Dual theta series, fast for small arguments.
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=20).map(|k| (((2 * k - 1) as f64).powi(2) * c).exp()).sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Kolmogorov p-value for statistic `d` at effective size `ne`, with the
/// Stephens small-sample correction of the scaling.
fn ks_p_value(d: f64, ne: f64) -> f64 {
    let s = ne.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

/// Two-sided one-sample Kolmogorov-Smirnov test against `cdf`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64, alpha: f64) -> Result<TestReport> {
    check_finite(samples, MIN_SAMPLE)?;
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    Ok(TestReport::new("ks", d, ks_p_value(d, n), alpha, xs.len()))
}

/// KS test against a law with a closed-form CDF.
pub fn ks_test_law(samples: &[f64], law: &Law, alpha: f64) -> Result<TestReport> {
    law.validate()?;
    if law.cdf(1.0).is_none() {
        return Err(Error::Parameter(format!("no closed-form CDF for {law:?}")));
    }
    ks_test(samples, |x| law.cdf(x).unwrap(), alpha)
}

/// Two-sided two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<TestReport> {
    check_finite(a, MIN_SAMPLE)?;
    check_finite(b, MIN_SAMPLE)?;
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0_f64);
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    Ok(TestReport::new("ks_two_sample", d, ks_p_value(d, ne), alpha, n.min(m)))
}

/// Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Input(format!("paired samples of lengths {} and {}", a.len(), b.len())));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate("constant input has no correlation".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Bin index in `0..bins` of every sample by rank (ties broken by position).
fn quantile_bins(xs: &[f64], bins: usize) -> Result<Vec<usize>> {
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::Degenerate("constant input cannot be binned".into()));
    }
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]).then(i.cmp(&j)));
    let mut out = vec![0; xs.len()];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = rank * bins / xs.len();
    }
    Ok(out)
}

/// Pearson chi-square statistic and degrees of freedom of a contingency table
/// against the product of its margins.
fn chi_square_product(counts: &[usize], shape: &[usize]) -> (f64, f64) {
    let n: usize = counts.iter().sum();
    let mut margins: Vec<Vec<f64>> = shape.iter().map(|&s| vec![0.0; s]).collect();
    for (idx, &c) in counts.iter().enumerate() {
        for (axis, coord) in unravel(idx, shape).into_iter().enumerate() {
            margins[axis][coord] += c as f64;
        }
    }
    let nf = n as f64;
    let mut stat = 0.0;
    for (idx, &c) in counts.iter().enumerate() {
        let e = unravel(idx, shape)
            .into_iter()
            .enumerate()
            .fold(nf, |acc, (axis, coord)| acc * margins[axis][coord] / nf);
        if e > 0.0 {
            stat += (c as f64 - e).powi(2) / e;
        }
    }
    let cells: usize = shape.iter().product();
    let dof = (cells - 1) - shape.iter().map(|s| s - 1).sum::<usize>();
    (stat, dof as f64)
}

fn unravel(mut idx: usize, shape: &[usize]) -> Vec<usize> {
    let mut out = vec![0; shape.len()];
    for axis in (0..shape.len()).rev() {
        out[axis] = idx % shape[axis];
        idx /= shape[axis];
    }
    out
}

fn chi_square_sf(stat: f64, dof: f64) -> f64 {
    ChiSquared::new(dof).expect("positive degrees of freedom").sf(stat)
}

/// Quantile bins per axis of the independence test.
pub const INDEPENDENCE_BINS: usize = 8;

/// Smallest paired sample accepted by [`independence_tests`].
pub const MIN_PAIRED: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub chi_square: TestReport,
    pub pearson_r: f64,
    /// `4 / sqrt(n)`.
    pub pearson_threshold: f64,
    pub pearson_pass: bool,
}

impl IndependenceReport {
    pub fn pass(&self) -> bool {
        self.chi_square.pass && self.pearson_pass
    }
}

/// 8x8 quantile-binned chi-square test (49 degrees of freedom) and Pearson
/// correlation against `4 / sqrt(n)`.
pub fn independence_tests(a: &[f64], b: &[f64], alpha: f64) -> Result<IndependenceReport> {
    if a.len() != b.len() {
        return Err(Error::Input(format!("paired samples of lengths {} and {}", a.len(), b.len())));
    }
    check_finite(a, MIN_PAIRED)?;
    check_finite(b, MIN_PAIRED)?;
    let k = INDEPENDENCE_BINS;
    let (ba, bb) = (quantile_bins(a, k)?, quantile_bins(b, k)?);
    let mut counts = vec![0usize; k * k];
    for (i, j) in ba.iter().zip(&bb) {
        counts[i * k + j] += 1;
    }
    let (stat, dof) = chi_square_product(&counts, &[k, k]);
    let chi_square = TestReport::new("chi_square_8x8", stat, chi_square_sf(stat, dof), alpha, a.len());
    let r = pearson(a, b)?;
    let threshold = 4.0 / (a.len() as f64).sqrt();
    Ok(IndependenceReport { chi_square, pearson_r: r, pearson_threshold: threshold, pearson_pass: r.abs() <= threshold })
}

/// Mutual independence of three samples through their signs about the
/// median: chi-square on the 2x2x2 table against the product of margins
/// (4 degrees of freedom).
pub fn sign_pattern_test(a: &[f64], b: &[f64], c: &[f64], alpha: f64) -> Result<TestReport> {
    if a.len() != b.len() || a.len() != c.len() {
        return Err(Error::Input("samples must have equal lengths".into()));
    }
    for xs in [a, b, c] {
        check_finite(xs, MIN_SAMPLE)?;
    }
    let (sa, sb, sc) = (quantile_bins(a, 2)?, quantile_bins(b, 2)?, quantile_bins(c, 2)?);
    let mut counts = vec![0usize; 8];
    for i in 0..a.len() {
        counts[sa[i] * 4 + sb[i] * 2 + sc[i]] += 1;
    }
    let (stat, dof) = chi_square_product(&counts, &[2, 2, 2]);
    Ok(TestReport::new("sign_pattern_2x2x2", stat, chi_square_sf(stat, dof), alpha, a.len()))
}

/// Standard error of a binomial proportion estimate.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, f64::NAN);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_branches_agree() {
        for lam in [1.1, 1.18, 1.25] {
            let c = -std::f64::consts::PI.powi(2) / (8.0 * lam * lam);
            let dual: f64 = 1.0 - (2.0 * std::f64::consts::PI).sqrt() / lam * (1..=20).map(|k| (((2 * k - 1) as f64).powi(2) * c).exp()).sum::<f64>();
            let direct: f64 = 2.0 * (1..=100).map(|k| (if k % 2 == 1 { 1.0 } else { -1.0 }) * (-2.0 * (k * k) as f64 * lam * lam).exp()).sum::<f64>();
            assert!((dual - direct).abs() < 1e-12);
        }
        assert_eq!(kolmogorov_sf(0.0), 1.0);
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn empty_and_nan_inputs_are_rejected() {
        assert!(matches!(ks_test(&[], |x| x, 0.05), Err(Error::Input(_))));
        let mut xs = vec![0.5; 200];
        xs[3] = f64::NAN;
        assert!(matches!(ks_test(&xs, |x| x, 0.05), Err(Error::Input(_))));
    }

    #[test]
    fn constant_input_is_degenerate() {
        let a = vec![1.0; 2000];
        let b: Vec<f64> = (0..2000).map(|i| i as f64).collect();
        assert!(matches!(independence_tests(&a, &b, 0.001), Err(Error::Degenerate(_))));
    }

    #[test]
    fn product_table_has_no_excess() {
        let counts = vec![10, 20, 30, 60];
        let (stat, dof) = chi_square_product(&counts, &[2, 2]);
        assert!(stat.abs() < 1e-12);
        assert_eq!(dof, 1.0);
        assert_eq!(chi_square_product(&[1; 8], &[2, 2, 2]).1, 4.0);
    }
}

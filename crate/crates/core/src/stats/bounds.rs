//! Running-maximum tail bounds for random walks with sub-exponential steps.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::binomial_se;
use crate::error::{Error, Result};
use crate::randfield::{digamma, ln_gamma_variate, Law, SeedSpec, Stream};

const LANE_WALK: u64 = 0x7761_6c6b;

/// Points of the grid on `[-lambda0, lambda0]` used by [`certify`].
pub const CERTIFICATE_GRID: usize = 50;

/// Safety factor applied to the fitted `K0`.
const K0_SLACK: f64 = 1.01;

/// Step law of a random walk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepLaw {
    Gaussian { mu: f64, sigma: f64 },
    /// `log G` with `G ~ Ga(shape)`.
    LogGamma { shape: f64 },
    /// `log X - log Y` with `X ~ Ga^-1(shape_plus)`, `Y ~ Ga^-1(shape_minus)`.
    LogGammaDiff { shape_plus: f64, shape_minus: f64 },
}

impl StepLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepLaw::Gaussian { mu, sigma } => mu.is_finite() && sigma > 0.0 && sigma.is_finite(),
            StepLaw::LogGamma { shape } => shape > 0.0 && shape.is_finite(),
            StepLaw::LogGammaDiff { shape_plus, shape_minus } => {
                Law::LogGammaDiff { shape_plus, shape_minus }.validate().is_ok()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid step law {self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            StepLaw::Gaussian { mu, .. } => mu,
            StepLaw::LogGamma { shape } => digamma(shape),
            StepLaw::LogGammaDiff { shape_plus, shape_minus } => Law::LogGammaDiff { shape_plus, shape_minus }.mean(),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            StepLaw::Gaussian { sigma, .. } => sigma * sigma,
            StepLaw::LogGamma { shape } => crate::randfield::trigamma(shape),
            StepLaw::LogGammaDiff { shape_plus, shape_minus } => {
                Law::LogGammaDiff { shape_plus, shape_minus }.variance()
            }
        }
    }

    /// `log E[exp(lambda (X - E X))]`, or `None` outside the domain of the
    /// moment generating function.
    pub fn centered_log_mgf(&self, lambda: f64) -> Option<f64> {
        let lg = |a: f64, l: f64| (a + l > 0.0).then(|| ln_gamma(a + l) - ln_gamma(a) - l * digamma(a));
        match *self {
            StepLaw::Gaussian { sigma, .. } => Some(0.5 * lambda * lambda * sigma * sigma),
            StepLaw::LogGamma { shape } => lg(shape, lambda),
            // log X - log Y = log G_minus - log G_plus with G ~ Ga.
            StepLaw::LogGammaDiff { shape_plus, shape_minus } => Some(lg(shape_minus, lambda)? + lg(shape_plus, -lambda)?),
        }
    }

    /// Radius of the interval around zero where the MGF is finite.
    pub fn mgf_radius(&self) -> f64 {
        match *self {
            StepLaw::Gaussian { .. } => f64::INFINITY,
            StepLaw::LogGamma { shape } => shape,
            StepLaw::LogGammaDiff { shape_plus, shape_minus } => shape_plus.min(shape_minus),
        }
    }

    /// Draw of the step minus its mean.
    #[inline]
    pub fn draw_centered(&self, rng: &mut Stream) -> f64 {
        self.draw(rng) - self.mean()
    }

    #[inline]
    pub fn draw(&self, rng: &mut Stream) -> f64 {
        match *self {
            StepLaw::Gaussian { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                mu + sigma * z
            }
            // Ga(1/2) is Z^2 / 2 for a standard normal Z.
            StepLaw::LogGamma { shape } if shape == 0.5 => {
                let z: f64 = StandardNormal.sample(rng);
                (0.5 * z * z).ln()
            }
            StepLaw::LogGamma { shape } => ln_gamma_variate(shape, rng),
            StepLaw::LogGammaDiff { shape_plus, shape_minus } => {
                ln_gamma_variate(shape_minus, rng) - ln_gamma_variate(shape_plus, rng)
            }
        }
    }

    /// `E|X - E X|^3`: closed form for Gaussian steps, numerical quadrature of
    /// the log-gamma density, Monte Carlo (fixed stream, 10^6 draws) otherwise.
    pub fn third_abs_moment(&self) -> f64 {
        match *self {
            StepLaw::Gaussian { sigma, .. } => 2.0 * (2.0 / std::f64::consts::PI).sqrt() * sigma.powi(3),
            StepLaw::LogGamma { shape } => {
                let m = digamma(shape);
                log_gamma_expectation(shape, |l| (l - m).abs().powi(3))
            }
            StepLaw::LogGammaDiff { .. } => {
                let mut rng = SeedSpec::new(0, 0).stream(&[LANE_WALK, u64::MAX]);
                let n = 1_000_000;
                (0..n).map(|_| self.draw_centered(&mut rng).abs().powi(3)).sum::<f64>() / n as f64
            }
        }
    }
}

/// `E[f(log G)]` for `G ~ Ga(shape)` by composite Simpson quadrature of the
/// density `exp(shape l - e^l) / Gamma(shape)`, scaled so that `f` may grow
/// like `exp(c l)` with `shape + c > 0`.
fn log_gamma_expectation(shape: f64, f: impl Fn(f64) -> f64) -> f64 {
    log_gamma_expectation_tilted(shape, 0.0, f)
}

fn log_gamma_expectation_tilted(shape: f64, tilt: f64, f: impl Fn(f64) -> f64) -> f64 {
    let rate = shape + tilt;
    let lo = -40.0 / rate - 10.0;
    let hi = 6.0;
    let steps = 200_000;
    let h = (hi - lo) / steps as f64;
    let lgs = ln_gamma(shape);
    let g = |l: f64| f(l) * (shape * l - l.exp() - lgs).exp();
    let mut s = g(lo) + g(hi);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * g(lo + i as f64 * h);
    }
    s * h / 3.0
}

/// Constants of the quadratic MGF bound `log E[e^{lambda (X - E X)}] <= K0 lambda^2`
/// for `|lambda| <= lambda0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubExpParams {
    pub k0: f64,
    pub lambda0: f64,
}

impl SubExpParams {
    pub fn new(k0: f64, lambda0: f64) -> Result<Self> {
        if !(k0 > 0.0 && lambda0 > 0.0 && k0.is_finite() && lambda0.is_finite()) {
            return Err(Error::Parameter(format!("K0 and lambda0 must be positive, got {k0}, {lambda0}")));
        }
        Ok(Self { k0, lambda0 })
    }

    /// Tail bound for `P(max_{k <= n} S_k >= t sqrt(n))` and the branch used.
    pub fn bound(&self, t: f64, n: u64) -> (f64, Branch) {
        let sn = (n as f64).sqrt();
        if t <= 2.0 * self.lambda0 * self.k0 * sn {
            ((-t * t / (4.0 * self.k0)).exp(), Branch::Gaussian)
        } else {
            ((-0.5 * self.lambda0 * t * sn).exp(), Branch::Exponential)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Gaussian,
    Exponential,
}

/// Result of checking the MGF bound on the certificate grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub params: SubExpParams,
    pub grid_points: usize,
    /// Largest `log MGF(lambda) - K0 lambda^2` over the grid (must be <= 0).
    pub max_excess: f64,
    /// Largest gap between the closed form and quadrature, when quadrature
    /// is available for the law.
    pub quadrature_gap: Option<f64>,
}

fn grid(lambda0: f64) -> impl Iterator<Item = f64> {
    (0..CERTIFICATE_GRID).map(move |i| -lambda0 + 2.0 * lambda0 * i as f64 / (CERTIFICATE_GRID - 1) as f64)
}

/// Quadrature value of the centered log-MGF, where implemented.
fn quadrature_log_mgf(step: &StepLaw, lambda: f64) -> Option<f64> {
    match *step {
        StepLaw::LogGamma { shape } => {
            let m = digamma(shape);
            Some(log_gamma_expectation_tilted(shape, lambda, |l| (lambda * (l - m)).exp()).ln())
        }
        _ => None,
    }
}

/// Checks `log E[e^{lambda (X - E X)}] <= K0 lambda^2` on a grid of
/// [`CERTIFICATE_GRID`] points in `[-lambda0, lambda0]`, using the larger of
/// the closed form and the quadrature value.
pub fn certify(step: &StepLaw, params: SubExpParams) -> Result<Certificate> {
    step.validate()?;
    if params.lambda0 >= step.mgf_radius() {
        return Err(Error::Config(format!(
            "lambda0 = {} reaches the MGF domain boundary {}",
            params.lambda0,
            step.mgf_radius()
        )));
    }
    let mut max_excess = f64::NEG_INFINITY;
    let mut gap: Option<f64> = None;
    for l in grid(params.lambda0) {
        let closed = step.centered_log_mgf(l).expect("inside the MGF domain");
        let mut value = closed;
        if let Some(q) = quadrature_log_mgf(step, l) {
            gap = Some(gap.unwrap_or(0.0).max((q - closed).abs()));
            value = value.max(q);
        }
        max_excess = max_excess.max(value - params.k0 * l * l);
    }
    if max_excess > 0.0 {
        return Err(Error::Config(format!(
            "MGF bound fails for K0 = {}, lambda0 = {}: excess {max_excess:e}",
            params.k0, params.lambda0
        )));
    }
    Ok(Certificate { params, grid_points: CERTIFICATE_GRID, max_excess, quadrature_gap: gap })
}

/// Fits `lambda0` as half the MGF radius (1 for Gaussian steps) and `K0` as
/// 1.01 times the largest `log MGF / lambda^2` on the grid, then certifies.
pub fn fit_subexp(step: &StepLaw) -> Result<Certificate> {
    step.validate()?;
    let lambda0 = match step.mgf_radius() {
        r if r.is_finite() => r / 2.0,
        _ => 1.0,
    };
    let ratio = grid(lambda0)
        .filter(|l| l.abs() > 1e-12)
        .map(|l| {
            let closed = step.centered_log_mgf(l).expect("inside the MGF domain");
            let v = quadrature_log_mgf(step, l).map_or(closed, |q| closed.max(q));
            v / (l * l)
        })
        .fold(0.0, f64::max);
    certify(step, SubExpParams::new(K0_SLACK * ratio, lambda0)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundRow {
    pub t: f64,
    pub bound: f64,
    pub branch: Branch,
    pub empirical: f64,
    pub se: f64,
    pub pass: bool,
}

/// Running maxima `max_{0 <= k <= n} S_k` of `trials` centered walks, one
/// stream per trial.
fn running_maxima(step: &StepLaw, n: u64, trials: usize, seed: SeedSpec) -> Vec<f64> {
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = seed.stream(&[LANE_WALK, trial as u64]);
            let mean = step.mean();
            let (mut s, mut max) = (0.0_f64, 0.0_f64);
            for _ in 0..n {
                s += step.draw(&mut rng) - mean;
                max = max.max(s);
            }
            max
        })
        .collect()
}

/// Empirical `P(max_{0<=k<=n} S_k >= t sqrt(n))` for centered steps against
/// the tail bound; a row passes when the frequency is at most the bound plus
/// three binomial standard errors.
pub fn check_running_max_upper(
    params: SubExpParams,
    step: &StepLaw,
    n: u64,
    t_grid: &[f64],
    trials: usize,
    seed: SeedSpec,
) -> Result<Vec<UpperBoundRow>> {
    certify(step, params)?;
    if n == 0 || trials == 0 {
        return Err(Error::Parameter("n and trials must be positive".into()));
    }
    let maxima = running_maxima(step, n, trials, seed);
    let sn = (n as f64).sqrt();
    Ok(t_grid
        .iter()
        .map(|&t| {
            let hits = maxima.iter().filter(|&&m| m >= t * sn).count();
            let empirical = hits as f64 / trials as f64;
            let se = binomial_se(empirical, trials);
            let (bound, branch) = params.bound(t, n);
            UpperBoundRow { t, bound, branch, empirical, se, pass: empirical <= bound + 3.0 * se }
        })
        .collect())
}

/// Random walk with steps `X_i`, `E X = mu`, unit variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RwConfig {
    pub step: StepLaw,
    pub mu: f64,
    /// `E|X - mu|^3`.
    pub c3: f64,
    pub n: u64,
    pub trials: usize,
}

impl RwConfig {
    /// Unit-variance Gaussian steps with drift `mu`.
    pub fn gaussian(mu: f64, n: u64, trials: usize) -> Self {
        let step = StepLaw::Gaussian { mu, sigma: 1.0 };
        Self { step, mu, c3: step.third_abs_moment(), n, trials }
    }

    pub fn validate(&self) -> Result<()> {
        self.step.validate()?;
        if (self.step.variance() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("step variance must be 1, got {}", self.step.variance())));
        }
        if (self.step.mean() - self.mu).abs() > 1e-12 {
            return Err(Error::Config(format!("step mean {} does not match mu = {}", self.step.mean(), self.mu)));
        }
        if !(self.c3.is_finite() && self.c3 > 0.0) {
            return Err(Error::Config(format!("c3 must be finite and positive, got {}", self.c3)));
        }
        if self.n == 0 || self.trials == 0 {
            return Err(Error::Parameter("n and trials must be positive".into()));
        }
        Ok(())
    }
}

/// Lower tail of the running maximum at `N` and `4N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundRow {
    pub l: f64,
    pub n: u64,
    /// Empirical `P(max_{1<=k<=N} S_k < l)`.
    pub p_n: f64,
    /// Same at `4N` on the continuation of the same walks.
    pub p_4n: f64,
    pub ratio: f64,
    /// Shape of the bound up to its constant: `(c3 l + c3^2)(|mu| + N^{-1/2})`.
    pub bound_shape: f64,
    /// `l >= sqrt(N)`: outside the regime where the bound is informative.
    pub out_of_regime: bool,
    /// Whether the scaling ratio is asserted (zero drift, in regime).
    pub asserted: bool,
    pub pass: bool,
}

/// Asserted range of `P(max < l; 4N) / P(max < l; N)` at zero drift.
pub const SCALING_RATIO_RANGE: (f64, f64) = (0.35, 0.75);

/// Empirical `P(max_{1<=k<=N} S_k < l)` at `N` and `4N` for each `l`. At zero
/// drift and `l < sqrt(N)` the ratio must fall in [`SCALING_RATIO_RANGE`].
pub fn check_running_max_lower(cfg: &RwConfig, l_grid: &[f64], seed: SeedSpec) -> Result<Vec<LowerBoundRow>> {
    cfg.validate()?;
    let (n, n4) = (cfg.n, 4 * cfg.n);
    let maxima: Vec<(f64, f64)> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = seed.stream(&[LANE_WALK, trial as u64]);
            let (mut s, mut max_n, mut max) = (0.0_f64, f64::NEG_INFINITY, f64::NEG_INFINITY);
            for k in 1..=n4 {
                s += cfg.step.draw(&mut rng);
                max = max.max(s);
                if k == n {
                    max_n = max;
                }
            }
            (max_n, max)
        })
        .collect();
    let trials = cfg.trials as f64;
    Ok(l_grid
        .iter()
        .map(|&l| {
            let p_n = maxima.iter().filter(|m| m.0 < l).count() as f64 / trials;
            let p_4n = maxima.iter().filter(|m| m.1 < l).count() as f64 / trials;
            let ratio = p_4n / p_n;
            let out_of_regime = l >= (n as f64).sqrt();
            let asserted = cfg.mu == 0.0 && !out_of_regime;
            let (lo, hi) = SCALING_RATIO_RANGE;
            let pass = !asserted || (ratio >= lo && ratio <= hi);
            let bound_shape = (cfg.c3 * l + cfg.c3 * cfg.c3) * (cfg.mu.abs() + 1.0 / (n as f64).sqrt());
            LowerBoundRow { l, n, p_n, p_4n, ratio, bound_shape, out_of_regime, asserted, pass }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_gamma_mgf_matches_quadrature() {
        for shape in [0.25, 0.5, 0.75, 2.0] {
            let step = StepLaw::LogGamma { shape };
            for l in [-shape / 2.0, -0.05, 0.1, shape / 2.0] {
                let a = step.centered_log_mgf(l).unwrap();
                let b = quadrature_log_mgf(&step, l).unwrap();
                assert!((a - b).abs() < 1e-8, "shape {shape} lambda {l}: {a} vs {b}");
            }
            let mean = log_gamma_expectation(shape, |l| l);
            assert!((mean - digamma(shape)).abs() < 1e-8);
        }
    }

    #[test]
    fn fitted_constants_certify() {
        for shape in [0.25, 0.5, 0.75] {
            let c = fit_subexp(&StepLaw::LogGamma { shape }).unwrap();
            assert!(c.max_excess <= 0.0);
            assert_eq!(c.params.lambda0, shape / 2.0);
            // Near zero the ratio tends to half the variance.
            assert!(c.params.k0 >= 0.5 * crate::randfield::trigamma(shape));
        }
        let step = StepLaw::LogGamma { shape: 0.5 };
        assert!(matches!(certify(&step, SubExpParams::new(0.1, 0.25).unwrap()), Err(Error::Config(_))));
        assert!(matches!(certify(&step, SubExpParams::new(10.0, 0.5).unwrap()), Err(Error::Config(_))));
    }

    #[test]
    fn bound_branches_switch_at_threshold() {
        let p = SubExpParams::new(2.0, 0.25).unwrap();
        let n = 100;
        let t_star = 2.0 * 0.25 * 2.0 * 10.0;
        assert_eq!(p.bound(t_star, n).1, Branch::Gaussian);
        assert_eq!(p.bound(t_star + 1e-9, n).1, Branch::Exponential);
        assert_eq!(p.bound(0.0, n).0, 1.0);
        let (g, _) = p.bound(t_star, n);
        let e = (-0.5 * 0.25 * t_star * 10.0_f64).exp();
        assert!((g - e).abs() < 1e-12);
    }

    #[test]
    fn half_shape_fast_path_has_the_right_moments() {
        let step = StepLaw::LogGamma { shape: 0.5 };
        let mut rng = SeedSpec::new(9, 0).stream(&[1]);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| step.draw_centered(&mut rng)).collect();
        let (m, se) = crate::stats::mean_se(&xs);
        assert!(m.abs() < 4.0 * se);
        let v = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((v - step.variance()).abs() < 0.1);
    }

    #[test]
    fn lower_check_rejects_non_unit_variance() {
        let cfg = RwConfig { step: StepLaw::Gaussian { mu: 0.0, sigma: 2.0 }, mu: 0.0, c3: 1.0, n: 10, trials: 10 };
        assert!(matches!(check_running_max_lower(&cfg, &[1.0], SeedSpec::new(0, 0)), Err(Error::Config(_))));
    }
}

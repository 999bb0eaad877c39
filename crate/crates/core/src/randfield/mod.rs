//! Reproducible random environments.
//!
//! Every lattice weight is drawn from its own counter-based stream keyed by
//! `(base_seed, replica_index, row, column)`, so a field can be regenerated
//! bit-exactly, enlarged without disturbing existing values, and generated in
//! any order or thread layout.

mod special;
mod stream;

use std::collections::BTreeMap;

use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur};

pub use special::{digamma, psi, trigamma};
pub use stream::{SeedSpec, Stream};

use crate::error::{Error, Result};
use crate::lattice::{LatticePoint, Rect, RowSequence};

/// Laws of the lattice weights and walk steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Law {
    Exponential { rate: f64 },
    Gamma { shape: f64 },
    InverseGamma { shape: f64 },
    /// `log X - log Y` with `X ~ Ga^-1(shape_plus)`, `Y ~ Ga^-1(shape_minus)`
    /// independent.
    LogGammaDiff { shape_plus: f64, shape_minus: f64 },
}

impl Law {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Law::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            Law::Gamma { shape } | Law::InverseGamma { shape } => shape > 0.0 && shape.is_finite(),
            Law::LogGammaDiff { shape_plus, shape_minus } => {
                shape_plus > 0.0 && shape_minus > 0.0 && shape_plus.is_finite() && shape_minus.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("law parameters must be finite and positive: {self:?}")))
        }
    }

    /// One draw. The law is assumed valid.
    #[inline]
    pub fn draw(&self, rng: &mut Stream) -> f64 {
        match *self {
            Law::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            Law::Gamma { shape } => gamma_variate(shape, rng),
            Law::InverseGamma { shape } => 1.0 / gamma_variate(shape, rng),
            Law::LogGammaDiff { shape_plus, shape_minus } => {
                // log X - log Y = log G_minus - log G_plus
                ln_gamma_variate(shape_minus, rng) - ln_gamma_variate(shape_plus, rng)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Law::Exponential { rate } => 1.0 / rate,
            Law::Gamma { shape } => shape,
            Law::InverseGamma { shape } => {
                if shape > 1.0 {
                    1.0 / (shape - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            Law::LogGammaDiff { shape_plus, shape_minus } => digamma(shape_minus) - digamma(shape_plus),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Law::Exponential { rate } => 1.0 / (rate * rate),
            Law::Gamma { shape } => shape,
            Law::InverseGamma { shape } => {
                if shape > 2.0 {
                    1.0 / ((shape - 1.0).powi(2) * (shape - 2.0))
                } else {
                    f64::INFINITY
                }
            }
            Law::LogGammaDiff { shape_plus, shape_minus } => trigamma(shape_plus) + trigamma(shape_minus),
        }
    }

    /// Closed-form CDF where one exists.
    pub fn cdf(&self, x: f64) -> Option<f64> {
        match *self {
            Law::Exponential { rate } => Some(if x <= 0.0 { 0.0 } else { -(-rate * x).exp_m1() }),
            Law::Gamma { shape } => Some(if x <= 0.0 { 0.0 } else if x == f64::INFINITY { 1.0 } else { gamma_lr(shape, x) }),
            Law::InverseGamma { shape } => Some(if x <= 0.0 { 0.0 } else if 1.0 / x == 0.0 { 1.0 } else { gamma_ur(shape, 1.0 / x) }),
            Law::LogGammaDiff { .. } => None,
        }
    }
}

/// `Ga(shape)` by Marsaglia-Tsang rejection; shapes below one are boosted
/// through `Ga(shape + 1) * U^(1/shape)`.
#[inline]
pub fn gamma_variate(shape: f64, rng: &mut Stream) -> f64 {
    if shape >= 1.0 {
        let (d, v) = marsaglia_tsang(shape, rng);
        d * v
    } else {
        ln_gamma_variate(shape, rng).exp()
    }
}

/// `log G` for `G ~ Ga(shape)`, computed without leaving the log domain so
/// that tiny shapes do not underflow.
#[inline]
pub fn ln_gamma_variate(shape: f64, rng: &mut Stream) -> f64 {
    if shape >= 1.0 {
        let (d, v) = marsaglia_tsang(shape, rng);
        d.ln() + v.ln()
    } else {
        let u = rng.next_open01();
        let (d, v) = marsaglia_tsang(shape + 1.0, rng);
        d.ln() + v.ln() + u.ln() / shape
    }
}

#[inline]
fn marsaglia_tsang(shape: f64, rng: &mut Stream) -> (f64, f64) {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = StandardNormal.sample(rng);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = rng.next_open01();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return (d, v);
        }
    }
}

/// `count` i.i.d. draws from `law`, reproducible from `seed`.
pub fn sample(law: &Law, count: usize, seed: SeedSpec) -> Result<Vec<f64>> {
    law.validate()?;
    let mut rng = seed.stream(&[stream::LANE_SAMPLE]);
    Ok((0..count).map(|_| law.draw(&mut rng)).collect())
}

/// Per-row law assignment for a weight field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub default: Law,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub rows: BTreeMap<i64, Law>,
}

impl Recipe {
    pub fn uniform(law: Law) -> Self {
        Self { default: law, rows: BTreeMap::new() }
    }

    pub fn with_row(mut self, y: i64, law: Law) -> Self {
        self.rows.insert(y, law);
        self
    }

    pub fn law_for(&self, y: i64) -> &Law {
        self.rows.get(&y).unwrap_or(&self.default)
    }

    pub fn validate(&self) -> Result<()> {
        self.default.validate()?;
        self.rows.values().try_for_each(Law::validate)
    }
}

/// Positive vertex weights over a rectangular window, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightField {
    window: Rect,
    values: Vec<f64>,
    recipe: Option<Recipe>,
    seed: Option<SeedSpec>,
}

impl WeightField {
    /// Field from explicit row-major values (bottom row first).
    pub fn from_values(window: Rect, values: Vec<f64>) -> Result<Self> {
        if values.len() != window.len() {
            return Err(Error::Input(format!(
                "window holds {} vertices but {} values were given",
                window.len(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Input(format!("weights must be finite and positive, got {bad}")));
        }
        Ok(Self { window, values, recipe: None, seed: None })
    }

    /// Stacks rows bottom-up starting at level `y0`, restricted to the common
    /// column range of all rows.
    pub fn stack(y0: i64, rows: &[&RowSequence]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Input("cannot stack zero rows".into()));
        }
        let lo = rows.iter().map(|r| r.start()).max().unwrap();
        let hi = rows.iter().map(|r| r.end()).min().unwrap();
        if hi < lo {
            return Err(Error::Domain("rows have no common column range".into()));
        }
        let window = Rect::new(lo, hi, y0, y0 + rows.len() as i64 - 1);
        let mut values = Vec::with_capacity(window.len());
        for r in rows {
            values.extend_from_slice(&r.restrict(lo, hi).entries);
        }
        Self::from_values(window, values)
    }

    pub fn window(&self) -> Rect {
        self.window
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn recipe(&self) -> Option<&Recipe> {
        self.recipe.as_ref()
    }

    pub fn seed(&self) -> Option<SeedSpec> {
        self.seed
    }

    pub fn get(&self, p: LatticePoint) -> Option<f64> {
        self.window.contains(p).then(|| self.values[self.window.index(p)])
    }

    /// Weight at `p`; panics outside the window.
    #[inline]
    pub fn at(&self, p: LatticePoint) -> f64 {
        assert!(self.window.contains(p), "{p} outside field window {:?}", self.window);
        self.values[self.window.index(p)]
    }

    pub fn row(&self, y: i64) -> Option<RowSequence> {
        if y < self.window.y0 || y > self.window.y1 {
            return None;
        }
        let w = self.window.width();
        let start = (y - self.window.y0) as usize * w;
        Some(RowSequence::from_raw(self.window.x0, self.values[start..start + w].to_vec()))
    }

    /// Slice of row `y` (no bounds check beyond the window's).
    pub(crate) fn row_slice(&self, y: i64) -> &[f64] {
        let w = self.window.width();
        let start = (y - self.window.y0) as usize * w;
        &self.values[start..start + w]
    }

    /// Sub-field over `window`, which must lie inside the field window.
    pub fn restrict(&self, window: Rect) -> Result<Self> {
        if window.is_empty() || window.intersect(&self.window) != window {
            return Err(Error::Domain(format!("window {window:?} not inside field window {:?}", self.window)));
        }
        let lo = (window.x0 - self.window.x0) as usize;
        let hi = (window.x1 - self.window.x0) as usize;
        let mut values = Vec::with_capacity(window.len());
        for y in window.y0..=window.y1 {
            values.extend_from_slice(&self.row_slice(y)[lo..=hi]);
        }
        Ok(Self { window, values, recipe: self.recipe.clone(), seed: self.seed })
    }

    /// Applies `f` to every weight; provenance is dropped.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values(self.window, self.values.iter().map(|&v| f(v)).collect())
    }
}

/// Generates a field over `window`: the weight at `(x, y)` is the first draw of
/// law `recipe.law_for(y)` on the vertex stream `(seed, y, x)`.
pub fn make_field(recipe: &Recipe, window: Rect, seed: SeedSpec) -> Result<WeightField> {
    recipe.validate()?;
    let mut values = Vec::with_capacity(window.len());
    if !window.is_empty() {
        for y in window.y0..=window.y1 {
            let law = *recipe.law_for(y);
            for x in window.x0..=window.x1 {
                let mut rng = seed.vertex_stream(x, y);
                values.push(law.draw(&mut rng));
            }
        }
    }
    Ok(WeightField { window, values, recipe: Some(recipe.clone()), seed: Some(seed) })
}

//! Positive-temperature polymer: log-partition tables, the point-to-line
//! endpoint measure and quenched path sampling.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::dp::{IncrementSet, Table};
use crate::error::{Error, Result};
use crate::lattice::{LatticePoint, RowSequence};
use crate::randfield::{Recipe, SeedSpec, WeightField};
use crate::semiring::{logaddexp, logsumexp, LogSumExp};

pub type LogZTable = Table<LogSumExp>;
pub type LogIncrements = IncrementSet<LogSumExp>;

impl Table<LogSumExp> {
    /// Whether paths through the truncation column carry more than the
    /// tolerated share of the mass at some vertex right of the base column.
    pub fn contaminated(&self) -> bool {
        self.touched_edge()
    }
}

/// `log Z_{base,z}` for all `z >= base` in the field window.
pub fn logz_table(field: &WeightField, base: LatticePoint) -> Result<LogZTable> {
    Table::bulk(field, base)
}

/// Log-partition values from a horizontal boundary one level below `bulk`.
pub fn boundary_logz_table(boundary: &RowSequence, bulk: &WeightField, base_x: i64) -> Result<LogZTable> {
    Table::with_boundary(boundary, bulk, base_x)
}

/// Point-to-line quenched endpoint law on the antidiagonal `x + y = 2N`;
/// endpoint `s` is the vertex `(N + s, N - s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointMeasure {
    pub n: u64,
    /// Smallest stored endpoint index.
    pub s_lo: i64,
    /// `log Z_{0,(N+s,N-s)}` for `s = s_lo, s_lo + 1, ...`.
    pub logweights: Vec<f64>,
    /// Endpoint probabilities, normalized over the whole antidiagonal.
    pub probabilities: Vec<f64>,
    /// `log` of the point-to-line partition function.
    pub log_total: f64,
}

impl EndpointMeasure {
    pub fn s_hi(&self) -> i64 {
        self.s_lo + self.logweights.len() as i64 - 1
    }

    pub fn probability(&self, s: i64) -> Option<f64> {
        if s < self.s_lo {
            return None;
        }
        self.probabilities.get((s - self.s_lo) as usize).copied()
    }
}

/// Endpoint events.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EndpointEvent {
    /// Endpoints with `|s| <= k`.
    Centered { k: i64 },
    /// Endpoints with `m <= s <= m + k`.
    OneSided { m: i64, k: i64 },
}

impl EndpointEvent {
    /// Endpoint indices in the event; empty when `k < 0`.
    pub fn endpoints(&self) -> RangeInclusive<i64> {
        match *self {
            EndpointEvent::Centered { k } => -k..=k,
            EndpointEvent::OneSided { m, k } => m..=m + k,
        }
    }
}

/// Half-width `floor(delta * N^(2/3))`.
pub fn window_halfwidth(delta: f64, n: u64) -> i64 {
    (delta * (n as f64).powf(2.0 / 3.0)).floor() as i64
}

/// Quenched probability of `event`. Parts of the event off the antidiagonal
/// carry no mass; parts on the antidiagonal but outside the stored endpoints
/// are a domain error.
pub fn quenched_event_probability(measure: &EndpointMeasure, event: EndpointEvent) -> Result<f64> {
    let r = event.endpoints();
    let n = measure.n as i64;
    let lo = (*r.start()).max(-n);
    let hi = (*r.end()).min(n);
    if lo > hi {
        return Ok(0.0);
    }
    if lo < measure.s_lo || hi > measure.s_hi() {
        return Err(Error::Domain(format!(
            "event endpoints {lo}..={hi} exceed stored endpoints {}..={}",
            measure.s_lo,
            measure.s_hi()
        )));
    }
    let a = (lo - measure.s_lo) as usize;
    let b = (hi - measure.s_lo) as usize;
    Ok(measure.probabilities[a..=b].iter().sum())
}

/// Endpoint measure of `field` from the origin to `x + y = 2N`, storing
/// endpoints `s_window` clipped to `[-N, N]`.
pub fn endpoint_measure(field: &WeightField, n: u64, s_window: (i64, i64)) -> Result<EndpointMeasure> {
    let w = field.window();
    let side = 2 * n as i64;
    if w.x0 > 0 || w.y0 > 0 || w.x1 < side || w.y1 < side {
        return Err(Error::Domain(format!("field window {w:?} does not cover the triangle x + y <= {side}")));
    }
    endpoint_measure_with(n, s_window, |x, y| field.at(LatticePoint::new(x, y)))
}

/// As [`endpoint_measure`], drawing each weight from its vertex stream
/// instead of a stored field. Agrees bit-exactly with a field made by
/// `make_field(recipe, _, seed)`.
pub fn endpoint_measure_streamed(recipe: &Recipe, seed: SeedSpec, n: u64, s_window: (i64, i64)) -> Result<EndpointMeasure> {
    recipe.validate()?;
    endpoint_measure_with(n, s_window, |x, y| recipe.law_for(y).draw(&mut seed.vertex_stream(x, y)))
}

fn endpoint_measure_with(n: u64, s_window: (i64, i64), mut weight: impl FnMut(i64, i64) -> f64) -> Result<EndpointMeasure> {
    let ni = n as i64;
    let (mut lo, mut hi) = s_window;
    if lo > hi {
        return Err(Error::Domain(format!("empty endpoint window {lo}..={hi}")));
    }
    if lo < -ni || hi > ni {
        log::warn!("endpoint window {lo}..={hi} clipped to the antidiagonal -{ni}..={ni}");
        lo = lo.max(-ni);
        hi = hi.min(ni);
    }
    let side = 2 * ni;
    // all[s + N] = log Z to (N + s, N - s); the last vertex of row y = N - s
    let mut all = vec![0.0; (side + 1) as usize];
    let mut row = vec![f64::NEG_INFINITY; (side + 1) as usize];
    row[0] = 0.0;
    let mut below = row.clone();
    for y in 0..=side {
        let len = (side - y + 1) as usize;
        let mut left = f64::NEG_INFINITY;
        for x in 0..len {
            let v = weight(x as i64, y).ln() + logaddexp(left, below[x]);
            row[x] = v;
            left = v;
        }
        all[(side - y) as usize] = row[len - 1];
        std::mem::swap(&mut row, &mut below);
    }
    // all is indexed by x of the endpoint, x = N + s
    let log_total = logsumexp(&all);
    let a = (lo + ni) as usize;
    let b = (hi + ni) as usize;
    let logweights = all[a..=b].to_vec();
    let probabilities = logweights.iter().map(|l| (l - log_total).exp()).collect();
    Ok(EndpointMeasure { n, s_lo: lo, logweights, probabilities, log_total })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuenchedPath {
    pub vertices: Vec<LatticePoint>,
}

/// Draws a path from the quenched measure between the table base and
/// `endpoint` by backward sampling.
pub fn sample_quenched_path(table: &LogZTable, endpoint: LatticePoint, seed: SeedSpec) -> Result<QuenchedPath> {
    let base = table.base();
    if !base.precedes(&endpoint) {
        return Err(Error::Domain(format!("endpoint {endpoint} is not above base {base}")));
    }
    if !table.window().contains(endpoint) {
        return Err(Error::Domain(format!("endpoint {endpoint} outside table window")));
    }
    if table.mode() != crate::dp::BoundaryMode::Bulk {
        return Err(Error::Domain("quenched path sampling needs a bulk table".into()));
    }
    let mut rng = seed.stream(&[0x7061_7468, endpoint.x as u64, endpoint.y as u64]);
    let mut z = endpoint;
    let mut vertices = vec![z];
    while z != base {
        let left = (z.x > base.x).then(|| z - LatticePoint::E1);
        let down = (z.y > base.y).then(|| z - LatticePoint::E2);
        z = match (left, down) {
            (Some(l), Some(d)) => {
                let (a, b) = (table.at(l), table.at(d));
                let p_left = (a - logaddexp(a, b)).exp();
                if rng.next_open01() < p_left {
                    l
                } else {
                    d
                }
            }
            (Some(l), None) => l,
            (None, Some(d)) => d,
            (None, None) => unreachable!("loop stops at the base"),
        };
        vertices.push(z);
    }
    vertices.reverse();
    Ok(QuenchedPath { vertices })
}

/// `log` of the product of weights along a path.
pub fn path_log_weight(field: &WeightField, vertices: &[LatticePoint]) -> f64 {
    vertices.iter().map(|&p| field.at(p).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Rect;
    use crate::randfield::{make_field, Law};

    #[test]
    fn single_site_and_two_by_two() {
        let f = WeightField::from_values(Rect::square(1), vec![2.0]).unwrap();
        assert_eq!(logz_table(&f, LatticePoint::new(0, 0)).unwrap().at(LatticePoint::new(0, 0)), 2f64.ln());
        let f = WeightField::from_values(Rect::square(2), vec![1.0, 2.0, 4.0, 8.0]).unwrap();
        let t = logz_table(&f, LatticePoint::new(0, 0)).unwrap();
        assert!((t.at(LatticePoint::new(1, 1)) - 48f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn boundary_single_sites() {
        let b = RowSequence::new(0, vec![3.0]).unwrap();
        let bulk = WeightField::from_values(Rect::new(0, 0, 1, 1), vec![5.0]).unwrap();
        let t = boundary_logz_table(&b, &bulk, 0).unwrap();
        assert!((t.at(LatticePoint::new(0, 1)) - (3f64.ln() + 5f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn degenerate_boundary_matches_bulk_table() {
        let bulk = make_field(&Recipe::uniform(Law::InverseGamma { shape: 1.0 }), Rect::new(0, 5, 1, 5), SeedSpec::new(4, 0)).unwrap();
        let y0 = 2.5;
        let b = RowSequence::new(0, vec![y0, 1e-30, 1e-30, 1e-30, 1e-30, 1e-30]).unwrap();
        let t = boundary_logz_table(&b, &bulk, 0).unwrap();
        let bt = logz_table(&bulk, LatticePoint::new(0, 1)).unwrap();
        for p in bt.window().points() {
            assert!((t.at(p) - (bt.at(p) + y0.ln())).abs() < 1e-9, "{p}");
        }
    }

    #[test]
    fn endpoint_measure_small_enumeration() {
        let f = make_field(&Recipe::uniform(Law::InverseGamma { shape: 1.0 }), Rect::square(5), SeedSpec::new(2, 0)).unwrap();
        let m = endpoint_measure(&f, 2, (-2, 2)).unwrap();
        let total: f64 = m.probabilities.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let t = logz_table(&f, LatticePoint::new(0, 0)).unwrap();
        for s in -2..=2i64 {
            let p = LatticePoint::new(2 + s, 2 - s);
            assert!((m.logweights[(s + 2) as usize] - t.at(p)).abs() < 1e-12);
        }
        assert_eq!(quenched_event_probability(&m, EndpointEvent::Centered { k: -1 }).unwrap(), 0.0);
        assert!((quenched_event_probability(&m, EndpointEvent::Centered { k: 2 }).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn streamed_measure_matches_field_measure() {
        let recipe = Recipe::uniform(Law::InverseGamma { shape: 1.0 });
        let seed = SeedSpec::new(5, 3);
        let f = make_field(&recipe, Rect::square(13), seed).unwrap();
        let a = endpoint_measure(&f, 6, (-6, 6)).unwrap();
        let b = endpoint_measure_streamed(&recipe, seed, 6, (-6, 6)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn quenched_path_on_a_line() {
        let f = WeightField::from_values(Rect::new(0, 1, 0, 0), vec![1.0, 3.0]).unwrap();
        let t = logz_table(&f, LatticePoint::new(0, 0)).unwrap();
        let p = sample_quenched_path(&t, LatticePoint::new(1, 0), SeedSpec::new(0, 0)).unwrap();
        assert_eq!(p.vertices, vec![LatticePoint::new(0, 0), LatticePoint::new(1, 0)]);
        assert!(path_log_weight(&f, &p.vertices) <= t.at(LatticePoint::new(1, 0)) + 1e-15);
    }
}

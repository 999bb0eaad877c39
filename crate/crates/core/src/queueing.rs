//! Queueing operators on windowed rows: departures, sojourn times, dual
//! weights and their iterates, plus verifiers for the identities that tie
//! them to stacked boundary tables.
//!
//! Every operator truncates a bi-infinite row to its window. Outputs are
//! reported from `margin` columns right of the left end; the truncation
//! column is tracked through the tables and any reported entry that depends
//! on it sets `contaminated`.

use serde::{Deserialize, Serialize};

use crate::dp::Table;
use crate::error::{Error, Result};
use crate::lattice::{Rect, RowSequence};
use crate::randfield::{sample, Law, SeedSpec, WeightField};
use crate::semiring::{LogSumExp, MaxPlus, Semiring, Temperature};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueConfig {
    /// Columns dropped at the left end of each operator output.
    pub margin: usize,
    pub temperature: Temperature,
}

impl QueueConfig {
    pub fn new(margin: usize, temperature: Temperature) -> Self {
        Self { margin, temperature }
    }

    /// Identity tolerance of the arithmetic policy.
    pub fn tolerance(&self) -> f64 {
        self.temperature.identity_tolerance()
    }
}

/// Operator output with its truncation flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueueRow {
    pub row: RowSequence,
    pub contaminated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub max_abs_discrepancy: f64,
    /// Inclusive column range compared; empty when `hi < lo`.
    pub compared_window: (i64, i64),
    pub contaminated: bool,
    pub pass: bool,
}

impl IdentityReport {
    fn new(max_abs_discrepancy: f64, compared_window: (i64, i64), contaminated: bool, tolerance: f64) -> Self {
        let nonempty = compared_window.0 <= compared_window.1;
        let pass = nonempty && !contaminated && max_abs_discrepancy <= tolerance;
        Self { max_abs_discrepancy, compared_window, contaminated, pass }
    }

    /// Merges reports of identities checked on the same instance; the window
    /// is the hull of both.
    pub fn merge(&self, other: &IdentityReport, tolerance: f64) -> IdentityReport {
        let lo = self.compared_window.0.min(other.compared_window.0);
        let hi = self.compared_window.1.max(other.compared_window.1);
        IdentityReport::new(
            self.max_abs_discrepancy.max(other.max_abs_discrepancy),
            (lo, hi),
            self.contaminated || other.contaminated,
            tolerance,
        )
    }
}

macro_rules! dispatch {
    ($cfg:expr, $f:ident($($arg:expr),*)) => {
        match $cfg.temperature {
            Temperature::Zero => $f::<MaxPlus>($($arg),*),
            Temperature::Positive => $f::<LogSumExp>($($arg),*),
        }
    };
}

/// Inter-departure times `D(arrivals, services)`.
pub fn depart(arrivals: &RowSequence, services: &RowSequence, cfg: QueueConfig) -> Result<QueueRow> {
    dispatch!(cfg, depart_with(arrivals, services, cfg.margin))
}

/// Sojourn times `S(arrivals, services)`.
pub fn sojourn(arrivals: &RowSequence, services: &RowSequence, cfg: QueueConfig) -> Result<QueueRow> {
    dispatch!(cfg, sojourn_with(arrivals, services, cfg.margin))
}

/// Dual weights, shifted so that entry `j` comes from the edge pair at `j - 1`.
pub fn dual(arrivals: &RowSequence, services: &RowSequence, cfg: QueueConfig) -> Result<QueueRow> {
    dispatch!(cfg, dual_with(arrivals, services, cfg.margin))
}

/// `D^(n)(rows[0], ..., rows[n])`, applying `depart` `n` times.
pub fn iterate_depart(rows: &[RowSequence], cfg: QueueConfig) -> Result<QueueRow> {
    dispatch!(cfg, iterate_with(rows, cfg.margin))
}

/// Iterated departures against the top-level horizontal increments of the
/// stacked boundary table.
pub fn verify_iterated(rows: &[RowSequence], cfg: QueueConfig) -> Result<IdentityReport> {
    dispatch!(cfg, verify_iterated_with(rows, cfg.margin))
}

/// Sojourn times behind `n - 1` queues against the stacked table's vertical
/// increments into level `n`.
pub fn verify_sojourn(rows: &[RowSequence], cfg: QueueConfig) -> Result<IdentityReport> {
    dispatch!(cfg, verify_sojourn_with(rows, cfg.margin))
}

/// Nested table on `I[n-1]` and `rows[n]` against the outer table on
/// `rows[0..=n]`, horizontal and vertical increments at level `n`.
pub fn verify_nested(rows: &[RowSequence], n: usize, cfg: QueueConfig) -> Result<IdentityReport> {
    dispatch!(cfg, verify_nested_with(rows, n, cfg.margin))
}

/// Dual swap: `rows` holds `Y[-k], ..., Y[n]`; the identity replaces
/// `Y[0], Y[1]` by the dual row and the departures of the pair.
pub fn verify_dual_swap(rows: &[RowSequence], k: usize, cfg: QueueConfig) -> Result<IdentityReport> {
    dispatch!(cfg, verify_dual_swap_with(rows, k, cfg.margin))
}

/// Rows with offset `offset` and `len` entries, row `m` drawn from
/// `laws[m]` on its own child stream of `seed`.
pub fn random_rows(laws: &[Law], offset: i64, len: usize, seed: SeedSpec) -> Result<Vec<RowSequence>> {
    laws.iter()
        .enumerate()
        .map(|(m, law)| RowSequence::new(offset, sample(law, len, seed.child(m as u64))?))
        .collect()
}

/// Default margin: `4 (width + levels)` at zero temperature. Positive
/// temperature adds `128` columns per level, since the edge-mass criterion
/// needs a longer burn-in for pair queues with close rates.
pub fn default_margin(width: usize, levels: usize, t: Temperature) -> usize {
    let base = 4 * (width + levels);
    match t {
        Temperature::Zero => base,
        Temperature::Positive => base + 128 * levels,
    }
}

fn pair_table<S: Semiring>(arrivals: &RowSequence, services: &RowSequence) -> Result<(Table<S>, i64, i64)> {
    let lo = arrivals.start().max(services.start());
    let hi = arrivals.end().min(services.end());
    if arrivals.is_empty() || services.is_empty() || lo > hi {
        return Err(Error::Domain(format!(
            "arrival window {}..={} and service window {}..={} do not overlap",
            arrivals.start(),
            arrivals.end(),
            services.start(),
            services.end()
        )));
    }
    let bulk = WeightField::stack(1, &[services])?;
    let table = Table::<S>::with_boundary(arrivals, &bulk, lo)?;
    Ok((table, lo, hi))
}

fn stacked_table<S: Semiring>(rows: &[RowSequence]) -> Result<(Table<S>, i64, i64)> {
    if rows.len() < 2 {
        return Err(Error::Parameter(format!("need at least two rows, got {}", rows.len())));
    }
    let refs: Vec<&RowSequence> = rows[1..].iter().collect();
    let bulk = WeightField::stack(1, &refs)?;
    let lo = rows[0].start().max(bulk.window().x0);
    let table = Table::<S>::with_boundary(&rows[0], &bulk, lo)?;
    let w = table.window();
    Ok((table, w.x0, w.x1))
}

fn reported<S: Semiring>(row: RowSequence, lo: i64, hi: i64) -> Result<RowSequence> {
    let out = row.restrict(lo, hi);
    if out.is_empty() {
        return Err(Error::Domain(format!("window {lo}..={hi} left no entries after the margin")));
    }
    Ok(out)
}

fn depart_with<S: Semiring>(arrivals: &RowSequence, services: &RowSequence, margin: usize) -> Result<QueueRow> {
    let (table, lo, hi) = pair_table::<S>(arrivals, services)?;
    let start = lo + (margin as i64).max(1);
    let row = reported::<S>(table.horizontal_row(1), start, hi)?;
    let contaminated = table.edge_dominates_in(&Rect::new(start - 1, hi, 1, 1));
    Ok(QueueRow { row, contaminated })
}

fn sojourn_with<S: Semiring>(arrivals: &RowSequence, services: &RowSequence, margin: usize) -> Result<QueueRow> {
    let (table, lo, hi) = pair_table::<S>(arrivals, services)?;
    let start = lo + margin as i64;
    let row = reported::<S>(table.vertical_row(0), start, hi)?;
    let contaminated = table.edge_dominates_in(&Rect::new(start, hi, 1, 1));
    Ok(QueueRow { row, contaminated })
}

fn dual_with<S: Semiring>(arrivals: &RowSequence, services: &RowSequence, margin: usize) -> Result<QueueRow> {
    let (table, lo, hi) = pair_table::<S>(arrivals, services)?;
    let start = lo + (margin as i64).max(1);
    let row = reported::<S>(table.dual_row(0), start, hi)?;
    let contaminated = table.edge_dominates_in(&Rect::new(start - 1, hi - 1, 1, 1));
    Ok(QueueRow { row, contaminated })
}

fn iterate_with<S: Semiring>(rows: &[RowSequence], margin: usize) -> Result<QueueRow> {
    if rows.len() < 2 {
        return Err(Error::Parameter(format!("need at least two rows, got {}", rows.len())));
    }
    let mut cur = QueueRow { row: rows[0].clone(), contaminated: false };
    for services in &rows[1..] {
        let next = depart_with::<S>(&cur.row, services, margin)?;
        cur = QueueRow { row: next.row, contaminated: cur.contaminated || next.contaminated };
    }
    Ok(cur)
}

/// Largest `|lift(a_j) - lift(b_j)|` over the common indices, with that range.
fn compare<S: Semiring>(a: &RowSequence, b: &RowSequence) -> (f64, (i64, i64)) {
    let lo = a.start().max(b.start());
    let hi = a.end().min(b.end());
    let max = (lo..=hi)
        .map(|j| (S::lift(a.get(j).unwrap()) - S::lift(b.get(j).unwrap())).abs())
        .fold(0.0, f64::max);
    (max, (lo, hi))
}

fn verify_iterated_with<S: Semiring>(rows: &[RowSequence], margin: usize) -> Result<IdentityReport> {
    let n = rows.len() as i64 - 1;
    let lhs = iterate_with::<S>(rows, margin)?;
    let (table, _, hi) = stacked_table::<S>(rows)?;
    let rhs = table.horizontal_row(n);
    let (max, win) = compare::<S>(&lhs.row, &rhs);
    let contaminated = lhs.contaminated || table.edge_dominates_in(&Rect::new(win.0 - 1, hi, n, n));
    Ok(IdentityReport::new(max, win, contaminated, S::IDENTITY_TOL))
}

fn verify_sojourn_with<S: Semiring>(rows: &[RowSequence], margin: usize) -> Result<IdentityReport> {
    if rows.len() < 2 {
        return Err(Error::Parameter(format!("need at least two rows, got {}", rows.len())));
    }
    let n = rows.len() - 1;
    let arrivals = if n == 1 {
        QueueRow { row: rows[0].clone(), contaminated: false }
    } else {
        iterate_with::<S>(&rows[..n], margin)?
    };
    let lhs = sojourn_with::<S>(&arrivals.row, &rows[n], margin)?;
    let (table, _, hi) = stacked_table::<S>(rows)?;
    let rhs = table.vertical_row(n as i64 - 1);
    let (max, win) = compare::<S>(&lhs.row, &rhs);
    let top = n as i64;
    let contaminated = arrivals.contaminated
        || lhs.contaminated
        || table.edge_dominates_in(&Rect::new(win.0, hi, top - 1, top));
    Ok(IdentityReport::new(max, win, contaminated, S::IDENTITY_TOL))
}

fn verify_nested_with<S: Semiring>(rows: &[RowSequence], n: usize, margin: usize) -> Result<IdentityReport> {
    if n == 0 || rows.len() < n + 1 {
        return Err(Error::Parameter(format!("nested identity at level {n} needs {} rows, got {}", n + 1, rows.len())));
    }
    let (outer, lo, hi) = stacked_table::<S>(&rows[..=n])?;
    let top = n as i64;
    let inner_boundary = if n == 1 { rows[0].clone() } else { outer.horizontal_row(top - 1) };
    let bulk = WeightField::stack(top, &[&rows[n]])?;
    let base = inner_boundary.start().max(bulk.window().x0);
    let nested = Table::<S>::with_boundary(&inner_boundary, &bulk, base)?;
    let start = lo + margin as i64;
    let (hmax, hwin) = compare::<S>(&outer.horizontal_row(top).restrict(start, hi), &nested.horizontal_row(top));
    let (vmax, vwin) = compare::<S>(&outer.vertical_row(top - 1).restrict(start, hi), &nested.vertical_row(top - 1));
    let lo_cmp = hwin.0.min(vwin.0);
    let region = Rect::new(lo_cmp - 1, hi, top - 1, top);
    let contaminated = outer.edge_dominates_in(&region) || nested.edge_dominates_in(&region);
    let tol = S::IDENTITY_TOL;
    let h = IdentityReport::new(hmax, hwin, contaminated, tol);
    let v = IdentityReport::new(vmax, vwin, contaminated, tol);
    Ok(h.merge(&v, tol))
}

fn verify_dual_swap_with<S: Semiring>(rows: &[RowSequence], k: usize, margin: usize) -> Result<IdentityReport> {
    if k == 0 || rows.len() < k + 2 {
        return Err(Error::Parameter(format!("dual swap needs k >= 1 and n >= 1, got k = {k} with {} rows", rows.len())));
    }
    let lhs = iterate_with::<S>(rows, margin)?;
    let dual_row = dual_with::<S>(&rows[k], &rows[k + 1], margin)?;
    let departures = depart_with::<S>(&rows[k], &rows[k + 1], margin)?;
    let mut swapped: Vec<RowSequence> = rows[..k].to_vec();
    swapped.push(dual_row.row);
    swapped.push(departures.row);
    swapped.extend_from_slice(&rows[k + 2..]);
    let rhs = iterate_with::<S>(&swapped, margin)?;
    let (max, win) = compare::<S>(&lhs.row, &rhs.row);
    let contaminated = lhs.contaminated || rhs.contaminated || dual_row.contaminated || departures.contaminated;
    Ok(IdentityReport::new(max, win, contaminated, S::IDENTITY_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(offset: i64, v: &[f64]) -> RowSequence {
        RowSequence::new(offset, v.to_vec()).unwrap()
    }

    const ZERO: QueueConfig = QueueConfig { margin: 0, temperature: Temperature::Zero };

    #[test]
    fn two_column_example() {
        let a = row(0, &[1.0, 2.0]);
        let s = row(0, &[3.0, 1.0]);
        let d = depart(&a, &s, ZERO).unwrap();
        assert_eq!(d.row, row(1, &[1.0]));
        let so = sojourn(&a, &s, ZERO).unwrap();
        assert_eq!(so.row, row(0, &[3.0, 2.0]));
        let du = dual(&a, &s, ZERO).unwrap();
        assert_eq!(du.row, row(1, &[2.0]));
    }

    #[test]
    fn saturated_server_passes_services_through() {
        let a = row(0, &[1e-3; 12]);
        let s = row(0, &[100.0; 12]);
        let d = depart(&a, &s, QueueConfig::new(2, Temperature::Zero)).unwrap();
        assert!(d.row.entries.iter().all(|&v| (v - 100.0).abs() < 1e-9));
    }

    #[test]
    fn misaligned_windows_are_rejected() {
        assert!(matches!(depart(&row(0, &[1.0]), &row(5, &[1.0]), ZERO), Err(Error::Domain(_))));
        assert!(matches!(
            depart(&row(0, &[1.0, 1.0]), &row(0, &[1.0, 1.0]), QueueConfig::new(5, Temperature::Zero)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn single_step_iterate_is_depart() {
        let rows = vec![row(0, &[2.0, 1.0, 3.0, 0.5]), row(0, &[1.0, 1.5, 0.2, 0.7])];
        for t in Temperature::BOTH {
            let cfg = QueueConfig::new(1, t);
            assert_eq!(iterate_depart(&rows, cfg).unwrap(), depart(&rows[0], &rows[1], cfg).unwrap());
        }
    }
}

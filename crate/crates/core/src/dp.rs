//! Generic lattice tables shared by the zero- and positive-temperature models.
//!
//! A [`Table`] holds `V(z)`, the aggregate over up-right paths ending at `z`, in
//! the additive domain of a [`Semiring`]. In bulk mode paths start at the base
//! vertex. In horizontal-boundary mode the bottom row holds the boundary
//! prefix `h` and paths enter the bulk from any boundary column.

use std::marker::PhantomData;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticePoint, Rect, RowSequence};
use crate::randfield::{Law, WeightField};
use crate::semiring::Semiring;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    Bulk,
    HorizontalBoundary,
}

/// Real values over a rectangle, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    window: Rect,
    values: Vec<f64>,
}

impl Grid {
    pub fn new(window: Rect, values: Vec<f64>) -> Result<Self> {
        if values.len() != window.len() {
            return Err(Error::Input(format!(
                "grid of {} cells given {} values",
                window.len(),
                values.len()
            )));
        }
        Ok(Self { window, values })
    }

    pub fn window(&self) -> Rect {
        self.window
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, p: LatticePoint) -> Option<f64> {
        self.window.contains(p).then(|| self.values[self.window.index(p)])
    }

    /// Value at `p`; panics outside the window.
    pub fn at(&self, p: LatticePoint) -> f64 {
        self.get(p)
            .unwrap_or_else(|| panic!("{p} outside grid window {:?}", self.window))
    }

    /// Row `y` restricted to columns `lo..=hi`.
    pub fn row(&self, y: i64, lo: i64, hi: i64) -> Vec<f64> {
        (lo..=hi).map(|x| self.at(LatticePoint::new(x, y))).collect()
    }

    /// Full row `y`; panics outside the window.
    fn row_slice(&self, y: i64) -> &[f64] {
        assert!(y >= self.window.y0 && y <= self.window.y1, "row {y} outside grid window {:?}", self.window);
        let w = self.window.width();
        let start = (y - self.window.y0) as usize * w;
        &self.values[start..start + w]
    }
}

/// Path-aggregate table for the arithmetic policy `S`.
#[derive(Clone, Debug)]
pub struct Table<S: Semiring> {
    base: LatticePoint,
    mode: BoundaryMode,
    grid: Grid,
    /// Share of each aggregate carried by paths through the left truncation
    /// column.
    edge: Option<Vec<f64>>,
    /// Raw boundary weights over the table columns.
    boundary: Option<RowSequence>,
    touched_edge: bool,
    shape_mu: f64,
    _policy: PhantomData<S>,
}

impl<S: Semiring> Table<S> {
    /// Bulk table of `V(z)` for `z >= base` inside the field window.
    pub fn bulk(field: &WeightField, base: LatticePoint) -> Result<Self> {
        let fw = field.window();
        if !fw.contains(base) {
            return Err(Error::Domain(format!("base {base} outside field window {fw:?}")));
        }
        let window = Rect::new(base.x, fw.x1, base.y, fw.y1);
        let width = window.width();
        let mut below = vec![f64::NEG_INFINITY; width];
        below[0] = 0.0;
        let rows = field_rows(field, &window, window.y0);
        let values = sweep::<S>(&below, &rows, None).0;
        Ok(Self {
            base,
            mode: BoundaryMode::Bulk,
            grid: Grid { window, values },
            edge: None,
            boundary: None,
            touched_edge: false,
            shape_mu: shape_of(field),
            _policy: PhantomData,
        })
    }

    /// Horizontal-boundary table. The boundary row sits one level below the
    /// bulk field; `h` is the signed prefix aggregate of the boundary relative
    /// to `base_x`, so `h_j - h_{j-1} = lift(Y_j)` for every column.
    pub fn with_boundary(boundary: &RowSequence, bulk: &WeightField, base_x: i64) -> Result<Self> {
        if boundary.is_empty() {
            return Err(Error::Domain("empty boundary row".into()));
        }
        let fw = bulk.window();
        let lo = boundary.start().max(fw.x0);
        let hi = boundary.end().min(fw.x1);
        if lo > hi {
            return Err(Error::Domain(format!(
                "boundary columns {}..={} do not overlap bulk columns {}..={}",
                boundary.start(),
                boundary.end(),
                fw.x0,
                fw.x1
            )));
        }
        if base_x < lo || base_x > hi {
            return Err(Error::Domain(format!("base column {base_x} outside common columns {lo}..={hi}")));
        }
        let level = fw.y0 - 1;
        let window = Rect::new(lo, hi, level, fw.y1);
        let bnd = boundary.restrict(lo, hi);
        let h = prefix::<S>(&bnd, base_x);
        let mut edge_row = vec![0.0; h.len()];
        edge_row[0] = 1.0;
        let rows = field_rows(bulk, &window, fw.y0);
        let (upper, edge) = sweep::<S>(&h, &rows, Some(&edge_row));
        let edge = edge.expect("edge sweep requested");
        let mut values = h.clone();
        values.extend_from_slice(&upper);
        let mut edge_full = edge_row;
        edge_full.extend_from_slice(&edge);
        let mut table = Self {
            base: LatticePoint::new(base_x, level),
            mode: BoundaryMode::HorizontalBoundary,
            grid: Grid { window, values },
            edge: Some(edge_full),
            boundary: Some(bnd),
            touched_edge: false,
            shape_mu: shape_of(bulk),
            _policy: PhantomData,
        };
        let interior = Rect::new(base_x, hi, level + 1, fw.y1);
        table.touched_edge = table.edge_dominates_in(&interior);
        Ok(table)
    }

    pub fn base(&self) -> LatticePoint {
        self.base
    }

    pub fn window(&self) -> Rect {
        self.grid.window
    }

    pub fn mode(&self) -> BoundaryMode {
        self.mode
    }

    pub fn values(&self) -> &[f64] {
        &self.grid.values
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn get(&self, p: LatticePoint) -> Option<f64> {
        self.grid.get(p)
    }

    pub fn at(&self, p: LatticePoint) -> f64 {
        self.grid.at(p)
    }

    /// Boundary prefix `h` over the table columns (boundary mode only).
    pub fn boundary_prefix(&self) -> Option<&[f64]> {
        match self.mode {
            BoundaryMode::Bulk => None,
            BoundaryMode::HorizontalBoundary => Some(&self.grid.values[..self.grid.window.width()]),
        }
    }

    /// Raw boundary weights over the table columns (boundary mode only).
    pub fn boundary(&self) -> Option<&RowSequence> {
        self.boundary.as_ref()
    }

    /// True when an optimal path (zero temperature) or a mass share above the
    /// tolerance (positive temperature) enters through the truncation column at
    /// some vertex right of the base column.
    pub fn touched_edge(&self) -> bool {
        self.touched_edge
    }

    /// Same criterion restricted to the vertices of `region`.
    pub fn edge_dominates_in(&self, region: &Rect) -> bool {
        let Some(edge) = &self.edge else { return false };
        let r = region.intersect(&self.grid.window);
        if r.is_empty() {
            return false;
        }
        let w = self.grid.window;
        (r.y0..=r.y1).any(|y| {
            let start = w.index(LatticePoint::new(r.x0, y));
            edge[start..start + r.width()].iter().any(|&sh| S::share_dominates(sh))
        })
    }

    /// Per-vertex edge criterion; `false` in bulk mode or outside the window.
    pub fn edge_dominates_at(&self, p: LatticePoint) -> bool {
        match (&self.edge, self.grid.window.contains(p)) {
            (Some(edge), true) => {
                let i = self.grid.window.index(p);
                S::share_dominates(edge[i])
            }
            _ => false,
        }
    }

    /// Inverse-gamma shape of the bulk law (1 when the field has no such recipe).
    pub fn shape_mu(&self) -> f64 {
        self.shape_mu
    }

    /// Additive horizontal increments on row `y`, indexed by the left column.
    fn horizontal_values(&self, y: i64) -> Vec<f64> {
        let w = self.grid.window;
        match (&self.boundary, y == w.y0) {
            (Some(b), true) => (w.x0..w.x1).map(|x| S::lift(b.get(x + 1).expect("boundary spans table columns"))).collect(),
            _ => self.grid.row_slice(y).windows(2).map(|p| p[1] - p[0]).collect(),
        }
    }

    /// Additive vertical increments from row `y` to `y + 1`.
    fn vertical_values(&self, y: i64) -> Vec<f64> {
        let (lower, upper) = (self.grid.row_slice(y), self.grid.row_slice(y + 1));
        upper.iter().zip(lower).map(|(u, l)| u - l).collect()
    }

    fn dual_values(&self, y: i64) -> Vec<f64> {
        let h = self.horizontal_values(y);
        let v = self.vertical_values(y);
        h.iter().zip(&v).map(|(&a, &b)| S::dual(a, b)).collect()
    }

    fn check_row(&self, m: i64, top: i64) {
        let w = self.grid.window;
        assert!(m >= w.y0 && m <= top, "increment row {m} outside {}..={top}", w.y0);
    }

    /// `I[m]_j` = increment on the edge from `(j-1, m)` to `(j, m)`, as weights.
    pub fn horizontal_row(&self, m: i64) -> RowSequence {
        self.check_row(m, self.grid.window.y1);
        RowSequence::from_raw(self.grid.window.x0 + 1, self.horizontal_values(m).into_iter().map(S::lower).collect())
    }

    /// Vertical increments from level `m` to `m + 1`, indexed by column, as weights.
    pub fn vertical_row(&self, m: i64) -> RowSequence {
        self.check_row(m, self.grid.window.y1 - 1);
        RowSequence::from_raw(self.grid.window.x0, self.vertical_values(m).into_iter().map(S::lower).collect())
    }

    /// Dual row with its index shift: entry `j` is the dual weight at `(j-1, m)`.
    pub fn dual_row(&self, m: i64) -> RowSequence {
        self.check_row(m, self.grid.window.y1 - 1);
        RowSequence::from_raw(self.grid.window.x0 + 1, self.dual_values(m).into_iter().map(S::lower).collect())
    }

    /// Horizontal, vertical and dual increments of the table.
    pub fn increments(&self) -> IncrementSet<S> {
        let w = self.grid.window;
        let hwin = Rect::new(w.x0, w.x1 - 1, w.y0, w.y1);
        let vwin = Rect::new(w.x0, w.x1, w.y0, w.y1 - 1);
        let dwin = Rect::new(w.x0, w.x1 - 1, w.y0, w.y1 - 1);
        let horizontal: Vec<f64> = (w.y0..=w.y1).flat_map(|y| self.horizontal_values(y)).collect();
        let vertical: Vec<f64> = (w.y0..w.y1).flat_map(|y| self.vertical_values(y)).collect();
        let dual: Vec<f64> = (w.y0..w.y1).flat_map(|y| self.dual_values(y)).collect();
        IncrementSet {
            horizontal: Grid { window: hwin, values: horizontal },
            vertical: Grid { window: vwin, values: vertical },
            dual: Grid { window: dwin, values: dual },
            _policy: PhantomData,
        }
    }
}

/// Increments `I` on horizontal edges (indexed by the left endpoint), `J` on
/// vertical edges (indexed by the lower endpoint) and the dual weights, all in
/// the additive domain.
#[derive(Clone, Debug)]
pub struct IncrementSet<S: Semiring> {
    pub horizontal: Grid,
    pub vertical: Grid,
    pub dual: Grid,
    _policy: PhantomData<S>,
}

impl<S: Semiring> IncrementSet<S> {
    /// `I[m]_j` = increment on the edge from `(j-1, m)` to `(j, m)`, as weights.
    pub fn horizontal_row(&self, m: i64) -> RowSequence {
        let w = self.horizontal.window();
        let vals = self.horizontal.row(m, w.x0, w.x1).into_iter().map(S::lower).collect();
        RowSequence::from_raw(w.x0 + 1, vals)
    }

    /// Vertical increments from level `m` to `m + 1`, indexed by column, as weights.
    pub fn vertical_row(&self, m: i64) -> RowSequence {
        let w = self.vertical.window();
        let vals = self.vertical.row(m, w.x0, w.x1).into_iter().map(S::lower).collect();
        RowSequence::from_raw(w.x0, vals)
    }

    /// Dual row with its index shift: entry `j` is the dual weight at `(j-1, m)`.
    pub fn dual_row(&self, m: i64) -> RowSequence {
        let w = self.dual.window();
        let vals = self.dual.row(m, w.x0, w.x1).into_iter().map(S::lower).collect();
        RowSequence::from_raw(w.x0 + 1, vals)
    }
}

/// Aggregates toward a fixed target: `R(z)` over up-right paths from `z` to
/// `target`, both endpoints included.
#[derive(Clone, Debug)]
pub struct ReverseTable<S: Semiring> {
    target: LatticePoint,
    grid: Grid,
    _policy: PhantomData<S>,
}

impl<S: Semiring> ReverseTable<S> {
    /// Covers `z <= target` within `region` (clipped to the field window).
    pub fn new(field: &WeightField, target: LatticePoint, region: Rect) -> Result<Self> {
        let fw = field.window();
        if !fw.contains(target) {
            return Err(Error::Domain(format!("target {target} outside field window {fw:?}")));
        }
        let r = region.intersect(&fw);
        let window = Rect::new(r.x0, target.x, r.y0, target.y);
        if window.is_empty() {
            return Err(Error::Domain(format!("empty region below target {target}")));
        }
        let width = window.width();
        let height = window.height();
        let mut values = vec![f64::NEG_INFINITY; window.len()];
        let mut above = vec![f64::NEG_INFINITY; width];
        above[width - 1] = 0.0;
        for row in (0..height).rev() {
            let y = window.y0 + row as i64;
            let weights = &field.row_slice(y)[(window.x0 - fw.x0) as usize..=(window.x1 - fw.x0) as usize];
            let out = &mut values[row * width..(row + 1) * width];
            let mut right = f64::NEG_INFINITY;
            for x in (0..width).rev() {
                let v = S::lift(weights[x]) + S::plus(right, above[x]);
                out[x] = v;
                right = v;
            }
            above.copy_from_slice(out);
        }
        Ok(Self { target, grid: Grid { window, values }, _policy: PhantomData })
    }

    pub fn target(&self) -> LatticePoint {
        self.target
    }

    pub fn window(&self) -> Rect {
        self.grid.window
    }

    pub fn get(&self, p: LatticePoint) -> Option<f64> {
        self.grid.get(p)
    }

    pub fn at(&self, p: LatticePoint) -> f64 {
        self.grid.at(p)
    }
}

/// Signed prefix aggregate of `row` relative to `base_x`: zero just left of the
/// base column, adding `lift(Y_j)` per column to the right and subtracting to
/// the left.
pub fn prefix<S: Semiring>(row: &RowSequence, base_x: i64) -> Vec<f64> {
    let k = (base_x - row.start()) as usize;
    let lifted: Vec<f64> = row.iter().map(|(_, w)| S::lift(w)).collect();
    let mut h = vec![0.0; lifted.len()];
    let mut acc = 0.0;
    for j in k..lifted.len() {
        acc += lifted[j];
        h[j] = acc;
    }
    for j in (0..k.saturating_sub(1)).rev() {
        h[j] = h[j + 1] - lifted[j + 1];
    }
    h
}

fn shape_of(field: &WeightField) -> f64 {
    match field.recipe().map(|r| r.law_for(field.window().y1)) {
        Some(Law::InverseGamma { shape }) => *shape,
        _ => 1.0,
    }
}

/// Field rows `y0..=window.y1`, sliced to the window columns.
fn field_rows<'a>(field: &'a WeightField, window: &Rect, y0: i64) -> Vec<&'a [f64]> {
    let fx0 = field.window().x0;
    let lo = (window.x0 - fx0) as usize;
    let hi = (window.x1 - fx0) as usize;
    (y0..=window.y1).map(|y| &field.row_slice(y)[lo..=hi]).collect()
}

/// Row-by-row recursion `V(x,y) = lift(w) + plus(V(x-1,y), V(x,y-1))` with
/// `-inf` left of the first column. `below` is the row under the first
/// weight row. With `edge_below`, the share of each value carried by paths
/// from the tracked entries of `below` is propagated alongside.
fn sweep<S: Semiring>(below: &[f64], rows: &[&[f64]], edge_below: Option<&[f64]>) -> (Vec<f64>, Option<Vec<f64>>) {
    let width = below.len();
    let mut out = Vec::with_capacity(width * rows.len());
    let mut edge_out = edge_below.map(|_| Vec::with_capacity(width * rows.len()));
    let mut prev = below.to_vec();
    let mut eprev = edge_below.map(<[f64]>::to_vec);
    let mut lifted = vec![0.0; width];
    for weights in rows {
        debug_assert_eq!(weights.len(), width);
        for (l, &w) in lifted.iter_mut().zip(weights.iter()) {
            *l = S::lift(w);
        }
        match (edge_out.as_mut(), eprev.as_mut()) {
            (Some(eo), Some(ep)) => {
                step_row_shared::<S>(&lifted, &mut prev, ep);
                eo.extend_from_slice(ep);
            }
            _ => step_row::<S>(&lifted, &mut prev),
        }
        out.extend_from_slice(&prev);
    }
    (out, edge_out)
}

/// [`step_row`] with the tracked shares advanced in `share`.
#[inline]
fn step_row_shared<S: Semiring>(lifted: &[f64], row: &mut [f64], share: &mut [f64]) {
    let (mut left, mut left_share) = (f64::NEG_INFINITY, 0.0);
    for ((v, s), &l) in row.iter_mut().zip(share.iter_mut()).zip(lifted) {
        let (agg, sh) = S::plus_share(left, *v, left_share, *s);
        left = l + agg;
        left_share = sh;
        *v = left;
        *s = sh;
    }
}

/// Advances `row` in place from one level to the next.
#[inline]
fn step_row<S: Semiring>(lifted: &[f64], row: &mut [f64]) {
    let mut left = f64::NEG_INFINITY;
    for (v, &l) in row.iter_mut().zip(lifted) {
        left = l + S::plus(left, *v);
        *v = left;
    }
}

//! Busemann functions: characteristic directions, finite-`N` estimates, the
//! coalescence form, and increment blocks along down-right paths from the
//! multi-boundary coupled construction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dp::{ReverseTable, Table};
use crate::error::{Error, Result};
use crate::lattice::{LatticePoint, Rect};
use crate::lpp::{coalescence_in, lpp_table, target_point, Coalescence};
use crate::randfield::{make_field, trigamma, Law, Recipe, SeedSpec, WeightField};
use crate::semiring::{LogSumExp, MaxPlus, Semiring, Temperature};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Exponential corner growth model (zero temperature).
    Cgm,
    /// Inverse-gamma polymer (positive temperature).
    InverseGamma,
}

impl Model {
    pub const BOTH: [Model; 2] = [Model::Cgm, Model::InverseGamma];

    pub fn temperature(self) -> Temperature {
        match self {
            Model::Cgm => Temperature::Zero,
            Model::InverseGamma => Temperature::Positive,
        }
    }

    /// Bulk weight law.
    pub fn bulk_law(self) -> Law {
        match self {
            Model::Cgm => Law::Exponential { rate: 1.0 },
            Model::InverseGamma => Law::InverseGamma { shape: 1.0 },
        }
    }

    /// Law of a stationary boundary in direction `rho`; also the law of a
    /// horizontal Busemann increment (exponentiated at positive temperature).
    pub fn horizontal_law(self, rho: f64) -> Law {
        match self {
            Model::Cgm => Law::Exponential { rate: 1.0 - rho },
            Model::InverseGamma => Law::InverseGamma { shape: 1.0 - rho },
        }
    }

    /// Law of a vertical Busemann increment (exponentiated at positive temperature).
    pub fn vertical_law(self, rho: f64) -> Law {
        match self {
            Model::Cgm => Law::Exponential { rate: rho },
            Model::InverseGamma => Law::InverseGamma { shape: rho },
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Cgm => "cgm",
            Model::InverseGamma => "inverse_gamma",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cgm" => Ok(Model::Cgm),
            "inverse_gamma" | "polymer" => Ok(Model::InverseGamma),
            _ => Err(Error::Parameter(format!("unknown model {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionParam {
    pub rho: f64,
    pub model: Model,
}

impl DirectionParam {
    pub fn new(rho: f64, model: Model) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Domain(format!("rho must lie in (0, 1), got {rho}")));
        }
        Ok(Self { rho, model })
    }
}

/// `xi[rho]`: `((1-rho)^2, rho^2)` for the CGM, `(psi1(rho), psi1(1-rho))`
/// for the polymer.
pub fn characteristic_direction(d: DirectionParam) -> Result<(f64, f64)> {
    let rho = d.rho;
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!("rho must lie in (0, 1), got {rho}")));
    }
    Ok(match d.model {
        Model::Cgm => ((1.0 - rho).powi(2), rho * rho),
        Model::InverseGamma => (trigamma(rho), trigamma(1.0 - rho)),
    })
}

/// Finite-`N` Busemann estimates over a schedule of `N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub n: Vec<u64>,
    pub targets: Vec<LatticePoint>,
    /// `G_{x,v_N} - G_{y,v_N}` or `log Z_{x,v_N} - log Z_{y,v_N}`.
    pub values: Vec<f64>,
    /// Zero temperature: whether the geodesics to `v_N` met before `v_N`.
    pub coalesced: Vec<Option<bool>>,
    /// Differences between consecutive values.
    pub gaps: Vec<f64>,
}

impl LimitEstimate {
    pub fn last(&self) -> f64 {
        *self.values.last().expect("non-empty schedule")
    }
}

/// Busemann estimates `B(x, y)` at each `N` of the schedule.
pub fn busemann_limit_estimate(
    field: &WeightField,
    x: LatticePoint,
    y: LatticePoint,
    d: DirectionParam,
    n_schedule: &[u64],
) -> Result<LimitEstimate> {
    if n_schedule.is_empty() {
        return Err(Error::Parameter("empty N schedule".into()));
    }
    let mut est = LimitEstimate { n: vec![], targets: vec![], values: vec![], coalesced: vec![], gaps: vec![] };
    for &n in n_schedule {
        let v = target_point(d, n)?;
        let region = reverse_region(field, x, y, v)?;
        let (value, coalesced) = match d.model {
            Model::Cgm => {
                let rev = ReverseTable::<MaxPlus>::new(field, v, region)?;
                let c = coalescence_in(&rev, x, y)?;
                (rev.at(x) - rev.at(y), Some(matches!(c, Coalescence::At(_))))
            }
            Model::InverseGamma => {
                let rev = ReverseTable::<LogSumExp>::new(field, v, region)?;
                (rev.at(x) - rev.at(y), None)
            }
        };
        if let Some(&prev) = est.values.last() {
            est.gaps.push(value - prev);
        }
        est.n.push(n);
        est.targets.push(v);
        est.values.push(value);
        est.coalesced.push(coalesced);
    }
    Ok(est)
}

fn reverse_region(field: &WeightField, x: LatticePoint, y: LatticePoint, v: LatticePoint) -> Result<Rect> {
    let fw = field.window();
    for p in [x, y] {
        if !p.precedes(&v) || !fw.contains(p) {
            return Err(Error::Domain(format!("{p} not below target {v} inside field window {fw:?}")));
        }
    }
    if !fw.contains(v) {
        return Err(Error::Domain(format!("field window {fw:?} does not reach target {v}")));
    }
    Ok(Rect::new(x.x.min(y.x), v.x, x.y.min(y.y), v.y))
}

/// `G_{x,c} - G_{y,c}` for the finite-`N` coalescence point `c`; `None` when
/// the geodesics have not met before `v_N`.
pub fn busemann_coalescence_form(
    field: &WeightField,
    x: LatticePoint,
    y: LatticePoint,
    d: DirectionParam,
    n: u64,
) -> Result<Option<f64>> {
    if d.model != Model::Cgm {
        return Err(Error::Parameter("the coalescence form needs geodesics (zero temperature)".into()));
    }
    let v = target_point(d, n)?;
    let region = reverse_region(field, x, y, v)?;
    let rev = ReverseTable::<MaxPlus>::new(field, v, region)?;
    let c = match coalescence_in(&rev, x, y)? {
        Coalescence::At(c) => c,
        Coalescence::NotCoalesced => return Ok(None),
    };
    let sub = field.restrict(Rect::new(x.x.min(y.x), c.x, x.y.min(y.y), c.y))?;
    let gx = lpp_table(&sub, x)?.at(c);
    let gy = lpp_table(&sub, y)?.at(c);
    Ok(Some(gx - gy))
}

/// Step of a down-right path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    E1,
    MinusE2,
}

/// Down-right lattice path with block cuts and one direction per block.
///
/// Edge `i` joins vertex `i` to vertex `i + 1`. Block 1 holds edges
/// `i >= cuts[0]`, block `k` holds `cuts[k-1] <= i < cuts[k-2]`, and block `K`
/// holds `i < cuts[K-2]`; cuts decrease strictly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DownRightPath {
    pub vertices: Vec<LatticePoint>,
    pub cuts: Vec<usize>,
    pub rhos: Vec<f64>,
}

impl DownRightPath {
    /// Path from `start` following `steps`, as a single block with direction
    /// 0.5 until [`DownRightPath::with_blocks`] is applied.
    pub fn from_steps(start: LatticePoint, steps: &[Step]) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Parameter("a path needs at least one step".into()));
        }
        let mut vertices = vec![start];
        let mut z = start;
        for s in steps {
            z = match s {
                Step::E1 => z + LatticePoint::E1,
                Step::MinusE2 => z - LatticePoint::E2,
            };
            vertices.push(z);
        }
        Ok(Self { vertices, cuts: vec![], rhos: vec![0.5] })
    }

    /// Parses `staircase:n`, `horizontal:n`, `vertical:n` or
    /// `explicit:e1,-e2,...`. Paths start at `(0, d)` with `d` the number of
    /// down steps, so they end on the line `y = 0`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, arg) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parameter(format!("path spec {spec:?} lacks ':'")))?;
        let count = || -> Result<usize> {
            let n: usize = arg
                .trim()
                .parse()
                .map_err(|_| Error::Parameter(format!("bad path length in {spec:?}")))?;
            if n == 0 {
                return Err(Error::Parameter(format!("path length must be positive in {spec:?}")));
            }
            Ok(n)
        };
        let steps: Vec<Step> = match kind.trim() {
            "staircase" => (0..count()?).flat_map(|_| [Step::E1, Step::MinusE2]).collect(),
            "horizontal" => vec![Step::E1; count()?],
            "vertical" => vec![Step::MinusE2; count()?],
            "explicit" => arg
                .split(',')
                .map(|t| match t.trim() {
                    "e1" => Ok(Step::E1),
                    "-e2" => Ok(Step::MinusE2),
                    other => Err(Error::Parameter(format!("unknown step {other:?} in {spec:?}"))),
                })
                .collect::<Result<_>>()?,
            other => return Err(Error::Parameter(format!("unknown path kind {other:?}"))),
        };
        let downs = steps.iter().filter(|s| **s == Step::MinusE2).count() as i64;
        Self::from_steps(LatticePoint::new(0, downs), &steps)
    }

    /// Assigns directions and cuts; `cuts = None` splits edges into `K` blocks
    /// of near-equal size.
    pub fn with_blocks(mut self, rhos: &[f64], cuts: Option<Vec<usize>>) -> Result<Self> {
        let k = rhos.len();
        if k == 0 {
            return Err(Error::Parameter("at least one direction is required".into()));
        }
        let e = self.edge_count();
        if k > e {
            return Err(Error::Parameter(format!("{k} blocks need at least {k} edges, path has {e}")));
        }
        let cuts = match cuts {
            Some(c) => c,
            None => (1..k).rev().map(|j| (j * e + k / 2) / k).collect(),
        };
        self.rhos = rhos.to_vec();
        self.cuts = cuts;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for w in self.vertices.windows(2) {
            let d = w[1] - w[0];
            if d != LatticePoint::E1 && d != LatticePoint::new(0, -1) {
                return Err(Error::Parameter(format!("invalid step {d} in down-right path")));
            }
        }
        let k = self.rhos.len();
        if k == 0 || self.cuts.len() + 1 != k {
            return Err(Error::Parameter(format!("{k} directions need {} cuts, got {}", k.saturating_sub(1), self.cuts.len())));
        }
        for &r in &self.rhos {
            DirectionParam::new(r, Model::Cgm)?;
        }
        if self.rhos.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parameter(format!("directions must increase strictly: {:?}", self.rhos)));
        }
        let e = self.edge_count();
        if self.cuts.windows(2).any(|w| w[0] <= w[1]) || self.cuts.iter().any(|&c| c == 0 || c >= e) {
            return Err(Error::Parameter(format!("cuts {:?} must decrease strictly within 1..{e}", self.cuts)));
        }
        Ok(())
    }

    pub fn edge_count(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn k(&self) -> usize {
        self.rhos.len()
    }

    /// Edge range of block `k` (1-based).
    pub fn block_edges(&self, k: usize) -> std::ops::Range<usize> {
        let kk = self.k();
        let hi = if k == 1 { self.edge_count() } else { self.cuts[k - 2] };
        let lo = if k == kk { 0 } else { self.cuts[k - 1] };
        lo..hi
    }

    pub fn is_horizontal(&self, edge: usize) -> bool {
        self.vertices[edge + 1].y == self.vertices[edge].y
    }

    /// Bounding rectangle of the vertices.
    pub fn bounds(&self) -> Rect {
        let xs = self.vertices.iter().map(|p| p.x);
        let ys = self.vertices.iter().map(|p| p.y);
        Rect::new(
            xs.clone().min().unwrap(),
            xs.max().unwrap(),
            ys.clone().min().unwrap(),
            ys.max().unwrap(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    CoupledConstruction,
    LimitEstimate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockEntry {
    pub edge: usize,
    pub horizontal: bool,
    /// Positive increment across the edge (log-ratio at positive temperature).
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub k: usize,
    pub rho: f64,
    pub entries: Vec<BlockEntry>,
}

impl Block {
    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|e| e.value).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncrementBlocks {
    pub model: Model,
    pub provenance: Provenance,
    pub blocks: Vec<Block>,
    /// Any boundary table flagged truncation contamination.
    pub contaminated: bool,
}

/// Default left margin: `4 (W + H) + ceil(4 H xi1 / xi2)` at the smallest
/// direction, with `W` the path width and `H` the number of levels from the
/// lowest boundary to the top of the path. The polymer uses four times that,
/// since its edge-mass criterion needs a longer burn-in.
pub fn default_margin(path: &DownRightPath, model: Model) -> Result<i64> {
    let b = path.bounds();
    let rho = path.rhos.iter().copied().fold(f64::INFINITY, f64::min);
    let (xi1, xi2) = characteristic_direction(DirectionParam::new(rho, model)?)?;
    let w = b.width() as i64;
    let h = b.y1 + path.k() as i64 + 1;
    let base = 4 * (w + h) + (4.0 * h as f64 * xi1 / xi2).ceil() as i64;
    Ok(match model {
        Model::Cgm => base,
        Model::InverseGamma => 4 * base,
    })
}

/// Coupled increment blocks for the CGM.
pub fn coupled_blocks(path: &DownRightPath, seed: SeedSpec, window_margin: Option<i64>) -> Result<IncrementBlocks> {
    coupled::<MaxPlus>(path, seed, window_margin, Model::Cgm)
}

/// Coupled increment blocks for the inverse-gamma polymer.
pub fn coupled_blocks_polymer(path: &DownRightPath, seed: SeedSpec, window_margin: Option<i64>) -> Result<IncrementBlocks> {
    coupled::<LogSumExp>(path, seed, window_margin, Model::InverseGamma)
}

/// Coupled blocks for either model.
pub fn coupled_blocks_for(model: Model, path: &DownRightPath, seed: SeedSpec, window_margin: Option<i64>) -> Result<IncrementBlocks> {
    match model {
        Model::Cgm => coupled_blocks(path, seed, window_margin),
        Model::InverseGamma => coupled_blocks_polymer(path, seed, window_margin),
    }
}

/// Boundary rows `A^k` at level `-k` with the stationary law of direction
/// `rho_k`, bulk above level `-1`. System `k` is the boundary table on
/// `A^k` using rows `-k+1..` as bulk; block `k` is read from system `k`.
fn coupled<S: Semiring>(path: &DownRightPath, seed: SeedSpec, window_margin: Option<i64>, model: Model) -> Result<IncrementBlocks> {
    path.validate()?;
    let b = path.bounds();
    if b.y0 < 0 {
        return Err(Error::Domain("the path must lie in the upper half-plane".into()));
    }
    let margin = match window_margin {
        Some(m) if m < 0 => return Err(Error::Parameter(format!("negative margin {m}"))),
        Some(m) => m,
        None => default_margin(path, model)?,
    };
    let kk = path.k() as i64;
    let base_x = b.x0;
    let mut recipe = Recipe::uniform(model.bulk_law());
    for (i, &rho) in path.rhos.iter().enumerate() {
        recipe = recipe.with_row(-(i as i64 + 1), model.horizontal_law(rho));
    }
    let window = Rect::new(base_x - margin, b.x1, -kk, b.y1);
    let field = make_field(&recipe, window, seed)?;
    let mut blocks = Vec::with_capacity(path.k());
    let mut contaminated = false;
    for (idx, &rho) in path.rhos.iter().enumerate() {
        let k = idx + 1;
        let level = -(k as i64);
        let boundary = field.row(level).expect("boundary row inside field");
        let bulk = field.restrict(Rect::new(window.x0, window.x1, level + 1, window.y1))?;
        let table = Table::<S>::with_boundary(&boundary, &bulk, base_x)?;
        contaminated |= table.touched_edge();
        let entries = path
            .block_edges(k)
            .map(|i| {
                let (a, c) = (path.vertices[i], path.vertices[i + 1]);
                let horizontal = path.is_horizontal(i);
                let value = if horizontal { table.at(c) - table.at(a) } else { table.at(a) - table.at(c) };
                BlockEntry { edge: i, horizontal, value }
            })
            .collect();
        blocks.push(Block { k, rho, entries });
    }
    Ok(IncrementBlocks { model, provenance: Provenance::CoupledConstruction, blocks, contaminated })
}

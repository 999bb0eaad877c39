use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{num, par_replicas, ExperimentResult, TestEntry};
use crate::busemann::{busemann_coalescence_form, busemann_limit_estimate, DirectionParam, Model};
use crate::error::{Error, Result};
use crate::lattice::{LatticePoint, Rect};
use crate::lpp::target_point;
use crate::randfield::{make_field, Recipe, SeedSpec};
use crate::stats::mean_se;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalescenceConfig {
    pub rho: f64,
    pub x: (i64, i64),
    pub y: (i64, i64),
    /// Increasing schedule of `N`.
    pub n: Vec<u64>,
    pub replicas: usize,
    pub seed: u64,
    /// Least fraction of replicas whose value is stable between the last two `N`.
    pub majority: f64,
}

impl Default for CoalescenceConfig {
    fn default() -> Self {
        Self { rho: 0.5, x: (0, 0), y: (1, 0), n: vec![100, 200, 400], replicas: 1000, seed: 7, majority: 0.5 }
    }
}

/// Values at consecutive `N` count as equal within this relative tolerance;
/// the two differences are summed along different orders.
pub const STABILITY_TOL: f64 = 1e-9;

const COLUMNS: &[&str] = &[
    "n",
    "target_x",
    "target_y",
    "replicas",
    "coalesced",
    "stable_with_next",
    "form_checked",
    "form_max_gap",
    "mean",
    "se",
    "law_mean",
];

struct Replica {
    values: Vec<f64>,
    coalesced: Vec<bool>,
    /// `|coalescence form - limit estimate|` where the form is available.
    form_gaps: Vec<Option<f64>>,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= STABILITY_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Finite-`N` Busemann estimates for the CGM along a schedule of `N`, one
/// field per replica covering the largest target: stabilization across `N`
/// and agreement of the coalescence form with the limit form.
pub fn run_coalescence(cfg: &CoalescenceConfig) -> Result<ExperimentResult> {
    let start = Instant::now();
    if cfg.n.len() < 2 || cfg.n.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("the N schedule needs at least two strictly increasing values".into()));
    }
    if cfg.replicas == 0 || !(cfg.majority > 0.0 && cfg.majority < 1.0) {
        return Err(Error::Config("replicas must be positive and majority in (0, 1)".into()));
    }
    let d = DirectionParam::new(cfg.rho, Model::Cgm)?;
    let x = LatticePoint::new(cfg.x.0, cfg.x.1);
    let y = LatticePoint::new(cfg.y.0, cfg.y.1);
    let targets: Vec<LatticePoint> = cfg.n.iter().map(|&n| target_point(d, n)).collect::<Result<_>>()?;
    let last = *targets.last().expect("non-empty schedule");
    let window = Rect::new(x.x.min(y.x), last.x, x.y.min(y.y), last.y);
    let recipe = Recipe::uniform(Model::Cgm.bulk_law());
    let runs: Vec<Result<Replica>> = par_replicas(cfg.replicas, |r| {
        let field = make_field(&recipe, window, SeedSpec::new(cfg.seed, r))?;
        let est = busemann_limit_estimate(&field, x, y, d, &cfg.n)?;
        let mut form_gaps = Vec::with_capacity(cfg.n.len());
        for (i, &n) in cfg.n.iter().enumerate() {
            let gap = busemann_coalescence_form(&field, x, y, d, n)?.map(|f| (f - est.values[i]).abs());
            form_gaps.push(gap);
        }
        Ok(Replica {
            values: est.values,
            coalesced: est.coalesced.iter().map(|c| c.unwrap_or(false)).collect(),
            form_gaps,
        })
    });
    let runs: Vec<Replica> = runs.into_iter().collect::<Result<_>>()?;
    let mut result = ExperimentResult::new("coalescence", serde_json::to_value(cfg).expect("config serializes"), COLUMNS);
    result.notes.push("coalescence is detected at finite N only; no convergence rate is claimed".into());
    let law_mean = if y == x + LatticePoint::new(1, 0) {
        Model::Cgm.horizontal_law(cfg.rho).mean()
    } else if y == x + LatticePoint::new(0, 1) {
        Model::Cgm.vertical_law(cfg.rho).mean()
    } else {
        f64::NAN
    };
    let total = runs.len() as f64;
    let mut stable_fractions = Vec::new();
    let mut form_violations = 0;
    let mut form_checked_total = 0;
    for (i, &n) in cfg.n.iter().enumerate() {
        let values: Vec<f64> = runs.iter().map(|r| r.values[i]).collect();
        let (mean, se) = mean_se(&values);
        let coalesced = runs.iter().filter(|r| r.coalesced[i]).count() as f64 / total;
        let stable = (i + 1 < cfg.n.len()).then(|| {
            runs.iter().filter(|r| close(r.values[i], r.values[i + 1])).count() as f64 / total
        });
        if let Some(s) = stable {
            stable_fractions.push((n, cfg.n[i + 1], s));
        }
        let gaps: Vec<f64> = runs.iter().filter_map(|r| r.form_gaps[i]).collect();
        let max_gap = gaps.iter().copied().fold(0.0, f64::max);
        form_checked_total += gaps.len();
        form_violations += runs
            .iter()
            .filter(|r| r.form_gaps[i].is_some_and(|g| g > STABILITY_TOL * r.values[i].abs().max(1.0)))
            .count();
        result.push_cell(json!({
            "n": n,
            "target_x": targets[i].x,
            "target_y": targets[i].y,
            "replicas": runs.len(),
            "coalesced": num(coalesced),
            "stable_with_next": stable.map_or(Value::Null, num),
            "form_checked": gaps.len(),
            "form_max_gap": num(max_gap),
            "mean": num(mean),
            "se": num(se),
            "law_mean": num(law_mean),
        }));
    }
    let &(n0, n1, last_stable) = stable_fractions.last().expect("two or more N");
    result.tests.push(TestEntry::at_least(
        format!("stable fraction N={n0}->{n1}"),
        last_stable,
        cfg.majority,
        runs.len(),
    ));
    for w in stable_fractions.windows(2) {
        result.tests.push(TestEntry::at_least(
            format!("stable fraction increases from N={}->{} to N={}->{}", w[0].0, w[0].1, w[1].0, w[1].1),
            w[1].2 - w[0].2,
            f64::MIN_POSITIVE,
            runs.len(),
        ));
    }
    result.tests.push(TestEntry::at_most(
        "coalescence form differs from limit form",
        form_violations as f64,
        0.0,
        form_checked_total,
    ));
    Ok(result.finish(start.elapsed()))
}

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{num, par_replicas, ExperimentResult, TestEntry};
use crate::busemann::{coupled_blocks_for, Block, DownRightPath, Model};
use crate::error::{Error, Result};
use crate::randfield::{Law, SeedSpec};
use crate::stats::{independence_tests, ks_test_law, mean_se, sign_pattern_test};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndependenceConfig {
    /// Path spec, e.g. `staircase:10`.
    pub path: String,
    /// Directions, strictly increasing; all equal selects the equal-direction
    /// control.
    pub rhos: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    pub models: Vec<Model>,
    /// Left margin of the coupled construction; default per path.
    pub margin: Option<i64>,
    pub alpha: f64,
    /// Least fraction of uncontaminated replicas.
    pub quota: f64,
}

impl Default for IndependenceConfig {
    fn default() -> Self {
        Self {
            path: "staircase:10".into(),
            rhos: vec![0.3, 0.7],
            replicas: 10_000,
            seed: 7,
            models: Model::BOTH.to_vec(),
            margin: None,
            alpha: 0.001,
            quota: 0.95,
        }
    }
}

const COLUMNS: &[&str] = &[
    "model",
    "block",
    "rho",
    "edges",
    "replicas",
    "contaminated",
    "mean_sum",
    "se_sum",
    "mean_first",
    "se_first",
    "law_mean_first",
];

/// Block statistics of the clean replicas of one model.
struct Sample {
    blocks: Vec<Block>,
}

/// Increment blocks from the coupled construction, tested for mutual
/// independence across blocks, marginal laws, and independence within
/// blocks. With all directions equal, a single-direction system is split at
/// the cuts instead and the blocks are expected to be independent.
pub fn run_independence(cfg: &IndependenceConfig) -> Result<ExperimentResult> {
    let start = Instant::now();
    if cfg.models.is_empty() {
        return Err(Error::Config("no model selected".into()));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) || !(cfg.quota > 0.0 && cfg.quota <= 1.0) {
        return Err(Error::Config(format!("alpha {} and quota {} must lie in (0, 1]", cfg.alpha, cfg.quota)));
    }
    let control = cfg.rhos.len() >= 2 && cfg.rhos.windows(2).all(|w| w[0] == w[1]);
    let base = DownRightPath::parse(&cfg.path)?;
    let (path, split_cuts) = if control {
        let single = base.clone().with_blocks(&cfg.rhos[..1], None)?;
        let split = base.with_blocks(&equal_split_rhos(cfg.rhos.len()), None)?;
        (single, Some(split.cuts))
    } else {
        (base.with_blocks(&cfg.rhos, None)?, None)
    };
    let mut result = ExperimentResult::new("independence", serde_json::to_value(cfg).expect("config serializes"), COLUMNS);
    result.params["cuts"] = json!(split_cuts.clone().unwrap_or_else(|| path.cuts.clone()));
    if control {
        result.notes.push("equal directions: one system split at the cuts (within-direction control)".into());
    }
    for &model in &cfg.models {
        let seed = SeedSpec::new(cfg.seed, 0).child(model as u64);
        let runs = par_replicas(cfg.replicas, |r| coupled_blocks_for(model, &path, seed.replica(r), cfg.margin));
        let mut clean = Vec::with_capacity(runs.len());
        for run in runs {
            let run = run?;
            if !run.contaminated {
                clean.push(Sample { blocks: split_blocks(run.blocks, split_cuts.as_deref(), &path) });
            }
        }
        if (clean.len() as f64) < cfg.quota * cfg.replicas as f64 {
            return Err(Error::QuotaUnmet { clean: clean.len(), total: cfg.replicas, quota: cfg.quota });
        }
        let contaminated = cfg.replicas - clean.len();
        battery(&mut result, model, &clean, contaminated, cfg.alpha, control)?;
    }
    Ok(result.finish(start.elapsed()))
}

/// Placeholder strictly increasing directions used only to compute the
/// default cuts of a `k`-block split.
fn equal_split_rhos(k: usize) -> Vec<f64> {
    (1..=k).map(|i| i as f64 / (k + 1) as f64).collect()
}

/// In control mode, splits the single block at `cuts` into blocks ordered
/// like the coupled construction (block 1 holds the last edges).
fn split_blocks(blocks: Vec<Block>, cuts: Option<&[usize]>, path: &DownRightPath) -> Vec<Block> {
    let Some(cuts) = cuts else { return blocks };
    let single = &blocks[0];
    let e = path.edge_count();
    let k = cuts.len() + 1;
    (1..=k)
        .map(|b| {
            let hi = if b == 1 { e } else { cuts[b - 2] };
            let lo = if b == k { 0 } else { cuts[b - 1] };
            let entries = single.entries.iter().filter(|x| x.edge >= lo && x.edge < hi).copied().collect();
            Block { k: b, rho: single.rho, entries }
        })
        .collect()
}

fn law_of(model: Model, rho: f64, horizontal: bool) -> Law {
    if horizontal {
        model.horizontal_law(rho)
    } else {
        model.vertical_law(rho)
    }
}

/// Entry value on the weight scale of its law.
fn weight(model: Model, v: f64) -> f64 {
    match model {
        Model::Cgm => v,
        Model::InverseGamma => v.exp(),
    }
}

fn battery(result: &mut ExperimentResult, model: Model, clean: &[Sample], contaminated: usize, alpha: f64, control: bool) -> Result<()> {
    let k = clean[0].blocks.len();
    let n = clean.len();
    let sums: Vec<Vec<f64>> = (0..k).map(|b| clean.iter().map(|s| s.blocks[b].sum()).collect()).collect();
    let firsts: Vec<Vec<f64>> = (0..k).map(|b| clean.iter().map(|s| s.blocks[b].entries[0].value).collect()).collect();
    for b in 0..k {
        let block = &clean[0].blocks[b];
        let first = block.entries[0];
        let law = law_of(model, block.rho, first.horizontal);
        let (ms, ss) = mean_se(&sums[b]);
        let (mf, sf) = mean_se(&firsts[b]);
        let law_mean = match model {
            Model::Cgm => law.mean(),
            Model::InverseGamma => f64::NAN,
        };
        result.push_cell(json!({
            "model": model.to_string(),
            "block": block.k,
            "rho": block.rho,
            "edges": block.entries.len(),
            "replicas": n,
            "contaminated": contaminated,
            "mean_sum": num(ms),
            "se_sum": num(ss),
            "mean_first": num(mf),
            "se_first": num(sf),
            "law_mean_first": num(law_mean),
        }));
        let samples: Vec<f64> = firsts[b].iter().map(|&v| weight(model, v)).collect();
        let ks = ks_test_law(&samples, &law, alpha)?;
        result.tests.push(TestEntry::from_report(format!("{model} block {} first entry law", block.k), &ks));
        if block.entries.len() >= 2 {
            let second: Vec<f64> = clean.iter().map(|s| s.blocks[b].entries[1].value).collect();
            let r = independence_tests(&firsts[b], &second, alpha)?;
            push_independence(result, &format!("{model} block {} adjacent entries", block.k), &r, n);
        }
    }
    for a in 0..k {
        for b in a + 1..k {
            let r = independence_tests(&sums[a], &sums[b], alpha)?;
            push_independence(result, &format!("{model} blocks {},{} sums", a + 1, b + 1), &r, n);
            let r = independence_tests(&firsts[a], &firsts[b], alpha)?;
            push_independence(result, &format!("{model} blocks {},{} first entries", a + 1, b + 1), &r, n);
        }
    }
    if k == 3 {
        let r = sign_pattern_test(&sums[0], &sums[1], &sums[2], alpha)?;
        result.tests.push(TestEntry::from_report(format!("{model} blocks 1,2,3 sum sign pattern"), &r));
        let r = sign_pattern_test(&firsts[0], &firsts[1], &firsts[2], alpha)?;
        result.tests.push(TestEntry::from_report(format!("{model} blocks 1,2,3 first-entry sign pattern"), &r));
    }
    if !control {
        // Same direction, overlapping edges: must be detected as dependent.
        let r = independence_tests(&sums[0], &firsts[0], alpha)?;
        result.tests.push(TestEntry::rejects(format!("{model} control block 1 sum vs its first entry"), &r.chi_square));
    }
    Ok(())
}

fn push_independence(result: &mut ExperimentResult, name: &str, r: &crate::stats::IndependenceReport, n: usize) {
    result.tests.push(TestEntry::from_report(format!("{name} chi-square"), &r.chi_square));
    result.tests.push(TestEntry::at_most(format!("{name} |pearson r|"), r.pearson_r.abs(), r.pearson_threshold, n));
}

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{num, par_replicas, ExperimentResult, TestEntry};
use crate::error::{Error, Result};
use crate::lattice::RowSequence;
use crate::queueing::{
    default_margin, random_rows, verify_dual_swap, verify_iterated, verify_nested, verify_sojourn, IdentityReport,
    QueueConfig,
};
use crate::randfield::{Law, SeedSpec};
use crate::semiring::Temperature;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueueingFuzzConfig {
    /// Reported widths of the compared windows.
    pub widths: Vec<usize>,
    /// Numbers of rows per instance (at least 3).
    pub levels: Vec<usize>,
    /// Uncontaminated instances required per family.
    pub seeds: usize,
    pub seed: u64,
    pub temperatures: Vec<Temperature>,
    /// Instances of equal constant rows with tiny jitter per temperature.
    pub near_tie_instances: usize,
}

impl Default for QueueingFuzzConfig {
    fn default() -> Self {
        Self {
            widths: vec![30, 60],
            levels: vec![3, 6, 9],
            seeds: 100,
            seed: 7,
            temperatures: Temperature::BOTH.to_vec(),
            near_tie_instances: 20,
        }
    }
}

const COLUMNS: &[&str] = &[
    "temperature",
    "family",
    "width",
    "levels",
    "instances",
    "uncontaminated",
    "failures",
    "max_discrepancy",
];

/// Identities checked on every instance.
const IDENTITIES: [&str; 4] = ["iterated departures", "sojourn", "nested", "dual swap"];

/// Outcome of all identities on one instance.
struct Instance {
    reports: Vec<(usize, IdentityReport)>,
}

impl Instance {
    fn contaminated(&self) -> bool {
        self.reports.iter().any(|r| r.1.contaminated)
    }

    /// Uncontaminated identity checks that exceed the tolerance.
    fn failures(&self) -> Vec<usize> {
        self.reports.iter().filter(|r| !r.1.contaminated && !r.1.pass).map(|r| r.0).collect()
    }

    fn max_discrepancy(&self) -> f64 {
        self.reports.iter().filter(|r| !r.1.contaminated).map(|r| r.1.max_abs_discrepancy).fold(0.0, f64::max)
    }
}

/// Least separation `s_1 - s_0`; the first queue then relaxes well within
/// the default margin.
pub const MIN_FIRST_GAP: f64 = 0.1;

/// Drift parameters `0 < s_0 < s_1 <= ... <= 1`, drawn per instance with
/// `s_1 >= s_0 + MIN_FIRST_GAP`.
fn drift_schedule(levels: usize, seed: SeedSpec) -> Vec<f64> {
    let mut rng = seed.stream(&[0x6472_6966_74]);
    let s0 = 0.2 + 0.4 * rng.next_open01();
    let lo = s0 + MIN_FIRST_GAP;
    let mut rest: Vec<f64> = (1..levels).map(|_| lo + (1.0 - lo) * rng.next_open01()).collect();
    rest.sort_by(f64::total_cmp);
    std::iter::once(s0).chain(rest).collect()
}

fn law(t: Temperature, s: f64) -> Law {
    match t {
        Temperature::Zero => Law::Exponential { rate: s },
        Temperature::Positive => Law::InverseGamma { shape: s },
    }
}

fn check_all(rows: &[RowSequence], cfg: QueueConfig) -> Result<Instance> {
    let levels = rows.len();
    let mut reports = vec![
        (0, verify_iterated(rows, cfg)?),
        (1, verify_sojourn(rows, cfg)?),
        (2, verify_nested(rows, levels - 1, cfg)?),
    ];
    for k in 1..=levels - 2 {
        reports.push((3, verify_dual_swap(rows, k, cfg)?));
    }
    Ok(Instance { reports })
}

/// Random drift-schedule instances per (temperature, width, levels) until
/// `seeds` uncontaminated instances are found (at most twice as many tries),
/// plus near-tie instances of equal constant rows. Fails on any
/// uncontaminated discrepancy above the tolerance.
pub fn run_queueing_fuzz(cfg: &QueueingFuzzConfig) -> Result<ExperimentResult> {
    let start = Instant::now();
    if cfg.widths.is_empty() || cfg.levels.is_empty() || cfg.temperatures.is_empty() || cfg.seeds == 0 {
        return Err(Error::Config("widths, levels, temperatures and seeds must be non-empty".into()));
    }
    if let Some(l) = cfg.levels.iter().find(|&&l| l < 3) {
        return Err(Error::Config(format!("instances need at least 3 rows, got {l}")));
    }
    if let Some(w) = cfg.widths.iter().find(|&&w| w == 0) {
        return Err(Error::Config(format!("width must be positive, got {w}")));
    }
    let mut result = ExperimentResult::new("queueing-fuzz", serde_json::to_value(cfg).expect("config serializes"), COLUMNS);
    for &t in &cfg.temperatures {
        let mut failures = [0usize; 4];
        let mut checked = [0usize; 4];
        for &width in &cfg.widths {
            for &levels in &cfg.levels {
                let margin = default_margin(width, levels, t);
                let qcfg = QueueConfig::new(margin, t);
                let len = width + levels * margin;
                let family = SeedSpec::new(cfg.seed, 0).child(t as u64).child(width as u64).child(levels as u64);
                let tries = 2 * cfg.seeds;
                let instances: Vec<Result<Instance>> = par_replicas(tries, |r| {
                    let seed = family.replica(r);
                    let laws: Vec<Law> = drift_schedule(levels, seed).into_iter().map(|s| law(t, s)).collect();
                    check_all(&random_rows(&laws, 0, len, seed)?, qcfg)
                });
                let mut clean = 0;
                let mut used = 0;
                let mut fails = 0;
                let mut max = 0.0_f64;
                for inst in instances {
                    let inst = inst?;
                    used += 1;
                    for id in inst.failures() {
                        failures[id] += 1;
                        fails += 1;
                    }
                    for r in &inst.reports {
                        checked[r.0] += !r.1.contaminated as usize;
                    }
                    max = max.max(inst.max_discrepancy());
                    if !inst.contaminated() {
                        clean += 1;
                        if clean == cfg.seeds {
                            break;
                        }
                    }
                }
                result.push_cell(json!({
                    "temperature": t.to_string(),
                    "family": "drift",
                    "width": width,
                    "levels": levels,
                    "instances": used,
                    "uncontaminated": clean,
                    "failures": fails,
                    "max_discrepancy": num(max),
                }));
                result.tests.push(TestEntry::at_least(
                    format!("{t} width {width} levels {levels} uncontaminated instances"),
                    clean as f64,
                    cfg.seeds as f64,
                    used,
                ));
            }
        }
        if cfg.near_tie_instances > 0 {
            let width = cfg.widths[0];
            let levels = cfg.levels[0];
            let margin = default_margin(width, levels, t);
            let len = width + levels * margin;
            let family = SeedSpec::new(cfg.seed, 1).child(t as u64);
            let instances: Vec<Result<Instance>> = par_replicas(cfg.near_tie_instances, |r| {
                let mut rng = family.replica(r).stream(&[0x7469_65]);
                let rows: Vec<RowSequence> = (0..levels)
                    .map(|_| RowSequence::new(0, (0..len).map(|_| 1.0 + 1e-13 * rng.next_open01()).collect()))
                    .collect::<Result<_>>()?;
                check_all(&rows, QueueConfig::new(margin, t))
            });
            let (mut clean, mut fails, mut max) = (0, 0, 0.0_f64);
            for inst in instances {
                let inst = inst?;
                for id in inst.failures() {
                    failures[id] += 1;
                    fails += 1;
                }
                clean += !inst.contaminated() as usize;
                max = max.max(inst.max_discrepancy());
            }
            result.push_cell(json!({
                "temperature": t.to_string(),
                "family": "near_tie",
                "width": width,
                "levels": levels,
                "instances": cfg.near_tie_instances,
                "uncontaminated": clean,
                "failures": fails,
                "max_discrepancy": num(max),
            }));
        }
        for (id, name) in IDENTITIES.iter().enumerate() {
            result.tests.push(TestEntry::at_most(
                format!("{t} {name} uncontaminated failures"),
                failures[id] as f64,
                0.0,
                checked[id],
            ));
        }
    }
    Ok(result.finish(start.elapsed()))
}

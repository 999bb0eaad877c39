use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{num, par_replicas, ExperimentResult, TestEntry};
use crate::busemann::{coupled_blocks_for, DownRightPath, Model};
use crate::error::{Error, Result};
use crate::randfield::{digamma, Law, SeedSpec};
use crate::stats::{ks_test_law, mean_se};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalsConfig {
    pub rhos: Vec<f64>,
    pub models: Vec<Model>,
    /// Single-direction paths whose first edge is tested.
    pub paths: Vec<String>,
    pub replicas: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Least fraction of uncontaminated replicas.
    pub quota: f64,
}

impl Default for MarginalsConfig {
    fn default() -> Self {
        Self {
            rhos: vec![0.3, 0.5, 0.7],
            models: Model::BOTH.to_vec(),
            paths: vec!["horizontal:1".into(), "vertical:1".into()],
            replicas: 10_000,
            seed: 7,
            alpha: 0.001,
            quota: 0.95,
        }
    }
}

const COLUMNS: &[&str] = &[
    "model",
    "path",
    "rho",
    "step",
    "law",
    "replicas",
    "contaminated",
    "log_scale",
    "mean",
    "se",
    "law_mean",
    "ks_statistic",
    "p_value",
];

/// KS tests of single coupled-block increments against the stationary
/// horizontal and vertical laws, exponentiated at positive temperature.
/// Means are reported on the increment scale, which is logarithmic for the
/// polymer.
pub fn run_marginals(cfg: &MarginalsConfig) -> Result<ExperimentResult> {
    let start = Instant::now();
    if cfg.rhos.is_empty() || cfg.models.is_empty() || cfg.paths.is_empty() {
        return Err(Error::Config("rhos, models and paths must be non-empty".into()));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) || !(cfg.quota > 0.0 && cfg.quota <= 1.0) {
        return Err(Error::Config(format!("alpha {} and quota {} must lie in (0, 1]", cfg.alpha, cfg.quota)));
    }
    let mut result = ExperimentResult::new("marginals", serde_json::to_value(cfg).expect("config serializes"), COLUMNS);
    for (pi, spec) in cfg.paths.iter().enumerate() {
        let base = DownRightPath::parse(spec)?;
        for (ri, &rho) in cfg.rhos.iter().enumerate() {
            let path = base.clone().with_blocks(&[rho], None)?;
            let horizontal = path.is_horizontal(path.block_edges(1).start);
            for &model in &cfg.models {
                let seed = SeedSpec::new(cfg.seed, 0).child(model as u64).child(pi as u64).child(ri as u64);
                let runs = par_replicas(cfg.replicas, |r| coupled_blocks_for(model, &path, seed.replica(r), None));
                let mut increments = Vec::with_capacity(runs.len());
                for run in runs {
                    let run = run?;
                    if !run.contaminated {
                        increments.push(run.blocks[0].entries[0].value);
                    }
                }
                let values: Vec<f64> = match model {
                    Model::Cgm => increments.clone(),
                    Model::InverseGamma => increments.iter().map(|v| v.exp()).collect(),
                };
                if (values.len() as f64) < cfg.quota * cfg.replicas as f64 {
                    return Err(Error::QuotaUnmet { clean: values.len(), total: cfg.replicas, quota: cfg.quota });
                }
                let law = if horizontal { model.horizontal_law(rho) } else { model.vertical_law(rho) };
                let ks = ks_test_law(&values, &law, cfg.alpha)?;
                let (mean, se) = mean_se(&increments);
                let law_mean = match law {
                    Law::InverseGamma { shape } => -digamma(shape),
                    _ => law.mean(),
                };
                let step = if horizontal { "e1" } else { "-e2" };
                result.push_cell(json!({
                    "model": model.to_string(),
                    "path": spec,
                    "rho": rho,
                    "step": step,
                    "law": format!("{law:?}"),
                    "replicas": values.len(),
                    "contaminated": cfg.replicas - values.len(),
                    "log_scale": model == Model::InverseGamma,
                    "mean": num(mean),
                    "se": num(se),
                    "law_mean": num(law_mean),
                    "ks_statistic": num(ks.statistic),
                    "p_value": num(ks.p_value),
                }));
                result.tests.push(TestEntry::from_report(format!("{model} {spec} rho={rho} {step} law"), &ks));
            }
        }
    }
    Ok(result.finish(start.elapsed()))
}

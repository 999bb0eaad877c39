use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{num, par_replicas, ExperimentResult, TestEntry};
use crate::error::{Error, Result};
use crate::polymer::{endpoint_measure_streamed, EndpointMeasure, quenched_event_probability, window_halfwidth, EndpointEvent};
use crate::randfield::{Law, Recipe, SeedSpec};
use crate::stats::mean_se;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointExperimentConfig {
    pub n: Vec<u64>,
    pub delta: Vec<f64>,
    /// Offsets of the one-sided windows; `|m| <= |log delta| N^(2/3)`.
    pub m: Vec<i64>,
    pub replicas: usize,
    pub seed: u64,
    /// Inverse-gamma shape of the bulk weights.
    pub mu: f64,
}

impl Default for EndpointExperimentConfig {
    fn default() -> Self {
        Self { n: vec![200], delta: vec![0.05, 0.1, 0.2, 0.4], m: vec![0], replicas: 1000, seed: 7, mu: 1.0 }
    }
}

/// Asserted range of `estimate(2 delta) / estimate(delta)`.
pub const DOUBLING_RATIO_RANGE: (f64, f64) = (1.3, 2.8);

impl EndpointExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() || self.delta.is_empty() {
            return Err(Error::Config("N and delta lists must be non-empty".into()));
        }
        if let Some(n) = self.n.iter().find(|&&n| n < 16) {
            return Err(Error::Config(format!("N must be at least 16, got {n}")));
        }
        if self.replicas < 100 {
            return Err(Error::Config(format!("at least 100 replicas are required, got {}", self.replicas)));
        }
        if let Some(d) = self.delta.iter().find(|&&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::Config(format!("delta must be positive, got {d}")));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::Config(format!("shape mu must be positive, got {}", self.mu)));
        }
        for &n in &self.n {
            for &d in &self.delta {
                let limit = d.ln().abs() * (n as f64).powf(2.0 / 3.0);
                if let Some(m) = self.m.iter().find(|&&m| m.abs() as f64 > limit) {
                    return Err(Error::Config(format!("offset m = {m} exceeds |log delta| N^(2/3) = {limit:.3} at N = {n}, delta = {d}")));
                }
            }
        }
        Ok(())
    }

    /// Events per `N`: the centered window for every delta, then the
    /// one-sided windows for every `(m, delta)`.
    fn events(&self, n: u64) -> Vec<(Option<i64>, f64, EndpointEvent)> {
        let mut out: Vec<_> = self
            .delta
            .iter()
            .map(|&d| (None, d, EndpointEvent::Centered { k: window_halfwidth(d, n) }))
            .collect();
        for &m in &self.m {
            for &d in &self.delta {
                out.push((Some(m), d, EndpointEvent::OneSided { m, k: window_halfwidth(d, n) }));
            }
        }
        out
    }
}

const COLUMNS: &[&str] = &[
    "n",
    "event",
    "m",
    "delta",
    "halfwidth",
    "replicas",
    "estimate",
    "se",
    "tail_threshold",
    "tail_frequency",
];

/// Monte Carlo estimates of the expected quenched probability that the
/// point-to-line polymer ends in a window of width `delta N^(2/3)`, exact
/// monotonicity in `delta`, and doubling ratios over `delta`.
pub fn run_endpoint_scaling(cfg: &EndpointExperimentConfig) -> Result<ExperimentResult> {
    let start = Instant::now();
    cfg.validate()?;
    let recipe = Recipe::uniform(Law::InverseGamma { shape: cfg.mu });
    let mut result = ExperimentResult::new("endpoint-scaling", serde_json::to_value(cfg).expect("config serializes"), COLUMNS);
    result.notes.push("the |log delta|^10 factor and the constant C are not resolved at this scale".into());
    for &n in &cfg.n {
        let events = cfg.events(n);
        let lo = events.iter().map(|e| *e.2.endpoints().start()).min().unwrap();
        let hi = events.iter().map(|e| *e.2.endpoints().end()).max().unwrap();
        let ni = n as i64;
        let window = (lo.max(-ni), hi.min(ni));
        let per_replica: Vec<Result<Vec<f64>>> = par_replicas(cfg.replicas, |r| {
            let seed = SeedSpec::new(cfg.seed, r).child(n);
            let measure = endpoint_measure_streamed(&recipe, seed, n, window)?;
            let mut out = Vec::with_capacity(events.len());
            for family in events.chunks(cfg.delta.len()) {
                out.extend(nested_probabilities(&measure, family)?);
            }
            Ok(out)
        });
        let per_replica: Vec<Vec<f64>> = per_replica.into_iter().collect::<Result<_>>()?;
        let mut estimates = Vec::with_capacity(events.len());
        for (i, &(m, d, event)) in events.iter().enumerate() {
            let qs: Vec<f64> = per_replica.iter().map(|q| q[i]).collect();
            let (est, se) = mean_se(&qs);
            let threshold = (-(d.ln().powi(2)) * d.sqrt() * (n as f64).powf(1.0 / 3.0)).exp();
            let tail = qs.iter().filter(|&&q| q >= threshold).count() as f64 / qs.len() as f64;
            let (name, k) = match event {
                EndpointEvent::Centered { k } => ("centered", k),
                EndpointEvent::OneSided { k, .. } => ("one_sided", k),
            };
            result.push_cell(json!({
                "n": n,
                "event": name,
                "m": m,
                "delta": d,
                "halfwidth": k,
                "replicas": qs.len(),
                "estimate": num(est),
                "se": num(se),
                "tail_threshold": num(threshold),
                "tail_frequency": num(tail),
            }));
            estimates.push((m, d, est, qs));
        }
        assert_scaling(&mut result, n, &cfg.delta, &estimates);
    }
    Ok(result.finish(start.elapsed()))
}

/// Event probabilities of one family of nested windows. Each larger window
/// adds its extra endpoints to the previous value, so the results are
/// nondecreasing in the window size in floating point as well.
fn nested_probabilities(measure: &EndpointMeasure, family: &[(Option<i64>, f64, EndpointEvent)]) -> Result<Vec<f64>> {
    let mut order: Vec<usize> = (0..family.len()).collect();
    order.sort_by(|&a, &b| family[a].1.total_cmp(&family[b].1));
    let mut out = vec![0.0; family.len()];
    let mut prev: Option<(EndpointEvent, f64)> = None;
    for i in order {
        let event = family[i].2;
        let q = match prev {
            None => quenched_event_probability(measure, event)?,
            Some((p, q)) => {
                let (inner, outer) = (p.endpoints(), event.endpoints());
                let extra = (*outer.start()..*inner.start()).chain(inner.end() + 1..=*outer.end());
                let n = measure.n as i64;
                let mut acc = q;
                for s in extra.filter(|s| s.abs() <= n) {
                    acc += measure
                        .probability(s)
                        .ok_or_else(|| Error::Domain(format!("endpoint {s} outside the stored window")))?;
                }
                acc
            }
        };
        out[i] = q;
        prev = Some((event, q));
    }
    Ok(out)
}

type Estimate = (Option<i64>, f64, f64, Vec<f64>);

fn label(n: u64, m: Option<i64>) -> String {
    match m {
        None => format!("N={n} centered"),
        Some(m) => format!("N={n} one-sided m={m}"),
    }
}

/// Per-replica monotonicity in delta and doubling ratios for each event family.
fn assert_scaling(result: &mut ExperimentResult, n: u64, deltas: &[f64], estimates: &[Estimate]) {
    let mut order: Vec<usize> = (0..deltas.len()).collect();
    order.sort_by(|&a, &b| deltas[a].total_cmp(&deltas[b]));
    for family in estimates.chunks(deltas.len()) {
        let m = family[0].0;
        let mut violations = 0;
        for w in order.windows(2) {
            let (small, large) = (&family[w[0]], &family[w[1]]);
            violations += small.3.iter().zip(&large.3).filter(|(a, b)| a > b).count();
            if small.2 > large.2 {
                violations += 1;
            }
            if (large.1 - 2.0 * small.1).abs() <= 1e-12 * large.1 {
                let (lo, hi) = DOUBLING_RATIO_RANGE;
                result.tests.push(TestEntry::range(
                    format!("{} doubling ratio delta {}->{}", label(n, m), small.1, large.1),
                    large.2 / small.2,
                    lo,
                    hi,
                    small.3.len(),
                ));
            }
        }
        result.tests.push(TestEntry::at_most(
            format!("{} monotone in delta (violations)", label(n, m)),
            violations as f64,
            0.0,
            family[0].3.len(),
        ));
    }
}

//! Random search over retrieval hyperparameters.
//!
//! Each trial runs the full retrieval over the training queries and is scored
//! by its best micro-F1 over rank cutoffs. Trial parameters are drawn up front
//! from a seeded generator, so trial `i` has the same parameters whether or not
//! earlier trials are resumed from a log.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, parse_max_terms};
use crate::corpus::{Collection, Qrels};
use crate::error::{Error, Result};
use crate::eval::{self, CutoffSummary, RankMetrics};
use crate::index::Index;
use crate::retrieval::Retriever;

/// Closed interval sampled uniformly; `lo == hi` collapses to a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub const fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.lo == self.hi {
            // keep the stream aligned with non-degenerate draws
            let _: f64 = rng.r#gen();
            self.lo
        } else {
            rng.gen_range(self.lo..=self.hi)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub k1: Interval,
    pub b: Interval,
    pub lambda: Interval,
    pub max_terms: Vec<Option<usize>>,
    pub passage_boost: Interval,
    pub statute_boost: Interval,
}

const LAMBDA_EPS: f64 = 1e-6;

impl Default for ParamSpace {
    fn default() -> Self {
        ParamSpace {
            k1: Interval::new(0.0, 3.0),
            b: Interval::new(0.0, 1.0),
            lambda: Interval::new(0.0, 1.0),
            max_terms: vec![Some(50), Some(100), Some(200), Some(500), None],
            passage_boost: Interval::new(1.0, 10.0),
            statute_boost: Interval::new(0.0, 5.0),
        }
    }
}

impl ParamSpace {
    /// Pins the statute boosts to their neutral values (`P_b = 1`, `s_b = 0`).
    pub fn without_statutes(mut self) -> Self {
        self.passage_boost = Interval::point(1.0);
        self.statute_boost = Interval::point(0.0);
        self
    }

    /// Pins every parameter except the statute boosts to `base`.
    pub fn statutes_only(base: &ExperimentConfig) -> Self {
        ParamSpace {
            k1: Interval::point(base.k1),
            b: Interval::point(base.b),
            lambda: Interval::point(base.lambda),
            max_terms: vec![base.max_terms],
            ..ParamSpace::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, i: &Interval, min: f64, max: f64| {
            if !(i.lo.is_finite() && i.hi.is_finite() && i.lo <= i.hi && i.lo >= min && i.hi <= max) {
                return Err(Error::Argument(format!(
                    "range for {name} must satisfy {min} <= lo <= hi <= {max}"
                )));
            }
            Ok(())
        };
        check("k1", &self.k1, 0.0, f64::MAX)?;
        check("b", &self.b, 0.0, 1.0)?;
        check("lambda", &self.lambda, 0.0, 1.0)?;
        check("P_b", &self.passage_boost, 0.0, f64::MAX)?;
        check("s_b", &self.statute_boost, 0.0, f64::MAX)?;
        if self.max_terms.is_empty() {
            return Err(Error::Argument("T needs at least one choice".into()));
        }
        Ok(())
    }

    /// Parses `key=lo,hi` lines (`T=50,100,none` lists choices).
    pub fn parse(text: &str) -> Result<Self> {
        let mut space = ParamSpace::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::Argument(format!("space line {}: expected key=lo,hi", lineno + 1));
            let (key, value) = line.split_once('=').ok_or_else(bad)?;
            let parts: Vec<&str> = value.split(',').map(str::trim).collect();
            if key.trim() == "T" {
                space.max_terms = parts.iter().map(|p| parse_max_terms(p)).collect::<Result<_>>()?;
                continue;
            }
            let nums: Vec<f64> = parts
                .iter()
                .map(|p| p.parse().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            let interval = match nums[..] {
                [v] => Interval::point(v),
                [lo, hi] => Interval::new(lo, hi),
                _ => return Err(bad()),
            };
            match key.trim() {
                "k1" => space.k1 = interval,
                "b" => space.b = interval,
                "lambda" => space.lambda = interval,
                "P_b" => space.passage_boost = interval,
                "s_b" => space.statute_boost = interval,
                other => return Err(Error::Argument(format!("unknown space key {other:?}"))),
            }
        }
        space.validate()?;
        Ok(space)
    }

    /// Draws `n` parameter sets.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<TrialParams> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let k1 = self.k1.sample(&mut rng);
                let b = self.b.sample(&mut rng);
                let lambda = self.lambda.sample(&mut rng).clamp(LAMBDA_EPS, 1.0 - LAMBDA_EPS);
                let max_terms = self.max_terms[rng.gen_range(0..self.max_terms.len())];
                let passage_boost = self.passage_boost.sample(&mut rng);
                let statute_boost = self.statute_boost.sample(&mut rng);
                TrialParams {
                    k1,
                    b,
                    lambda,
                    max_terms,
                    passage_boost,
                    statute_boost,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialParams {
    pub k1: f64,
    pub b: f64,
    pub lambda: f64,
    #[serde(rename = "T")]
    pub max_terms: Option<usize>,
    #[serde(rename = "P_b")]
    pub passage_boost: f64,
    #[serde(rename = "s_b")]
    pub statute_boost: f64,
}

impl TrialParams {
    pub fn apply(&self, base: &ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            k1: self.k1,
            b: self.b,
            lambda: self.lambda,
            max_terms: self.max_terms,
            passage_boost: self.passage_boost,
            statute_boost: self.statute_boost,
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub params: TrialParams,
    pub best_f1: f64,
    pub best_k: usize,
    pub metrics: Vec<RankMetrics>,
}

/// What a trial runs against.
pub struct TuneContext<'a> {
    pub index: &'a Index,
    pub collection: &'a Collection,
    pub qrels: &'a Qrels,
    pub base: ExperimentConfig,
    pub queries: Vec<String>,
    pub max_rank: usize,
}

impl TuneContext<'_> {
    /// Retrieval plus per-rank metrics for one configuration.
    pub fn evaluate(&self, config: &ExperimentConfig, queries: &[String]) -> Result<Vec<RankMetrics>> {
        let retriever = Retriever::new(self.index, self.collection, config.retrieval_config()?)?;
        let rankings = retriever.retrieve_all(queries)?;
        let runs: BTreeMap<String, Vec<String>> =
            rankings.into_iter().map(|r| (r.query_id.clone(), r.case_ids())).collect();
        eval::metrics_at_ranks(&runs, self.qrels, self.max_rank)
    }

    pub fn run_trial(&self, trial: usize, params: TrialParams) -> Result<TrialResult> {
        let metrics = self.evaluate(&params.apply(&self.base), &self.queries)?;
        let best_k = eval::select_cutoff(&metrics)
            .ok_or_else(|| Error::Argument("max rank must be at least 1".into()))?;
        Ok(TrialResult {
            trial,
            params,
            best_f1: metrics[best_k - 1].f1,
            best_k,
            metrics,
        })
    }

    /// Dev-set metrics of `config` at a fixed cutoff.
    pub fn evaluate_at(&self, config: &ExperimentConfig, queries: &[String], k: usize) -> Result<CutoffSummary> {
        let metrics = self.evaluate(config, queries)?;
        CutoffSummary::at(&metrics, k, queries.len())
            .ok_or_else(|| Error::Argument(format!("cutoff {k} exceeds max rank {}", self.max_rank)))
    }
}

/// Runs `n_trials` trials, skipping trial indices already in `resumed`, and
/// returns all results sorted by best F1 (descending, then trial index).
/// `on_trial` sees each newly computed trial in index order.
pub fn run_random_search(
    ctx: &TuneContext<'_>,
    space: &ParamSpace,
    n_trials: usize,
    seed: u64,
    resumed: Vec<TrialResult>,
    on_trial: &mut dyn FnMut(&TrialResult) -> Result<()>,
) -> Result<Vec<TrialResult>> {
    if n_trials == 0 {
        return Err(Error::Argument("at least one trial is required".into()));
    }
    space.validate()?;
    let draws = space.sample(n_trials, seed);
    let done: BTreeSet<usize> = resumed.iter().map(|t| t.trial).collect();
    for t in &resumed {
        if t.trial >= n_trials || t.params != draws[t.trial] {
            return Err(Error::Validation(format!(
                "resumed trial {} does not match this search (seed or space changed?)",
                t.trial
            )));
        }
    }
    let mut results = resumed;
    for (i, params) in draws.into_iter().enumerate() {
        if done.contains(&i) {
            continue;
        }
        let result = ctx.run_trial(i, params)?;
        log::info!("trial {i}: best F1 {:.4} at k={}", result.best_f1, result.best_k);
        on_trial(&result)?;
        results.push(result);
    }
    results.sort_by(|a, b| b.best_f1.total_cmp(&a.best_f1).then(a.trial.cmp(&b.trial)));
    Ok(results)
}

pub fn parse_trials_log(text: &str) -> Result<Vec<TrialResult>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::Format(format!("trials log: {e}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_seeded() {
        let s = ParamSpace::default();
        assert_eq!(s.sample(20, 3), s.sample(20, 3));
        assert_ne!(s.sample(5, 3), s.sample(5, 4));
        for p in s.sample(200, 9) {
            assert!((0.0..=3.0).contains(&p.k1));
            assert!(p.lambda > 0.0 && p.lambda < 1.0);
            assert!((1.0..=10.0).contains(&p.passage_boost));
        }
    }

    #[test]
    fn point_space_yields_one_parameter_set() {
        let s = ParamSpace {
            k1: Interval::point(1.0),
            b: Interval::point(0.5),
            lambda: Interval::point(0.5),
            max_terms: vec![None],
            passage_boost: Interval::point(1.0),
            statute_boost: Interval::point(0.0),
        };
        let draws = s.sample(25, 1);
        assert!(draws.iter().all(|d| *d == draws[0]));
    }

    #[test]
    fn space_file() {
        let s = ParamSpace::parse("k1=0.5,1.5\nb=0.3\nT=100,none\n").unwrap();
        assert_eq!(s.k1, Interval::new(0.5, 1.5));
        assert_eq!(s.b, Interval::point(0.3));
        assert_eq!(s.max_terms, vec![Some(100), None]);
        assert!(ParamSpace::parse("b=0,2").is_err());
        assert!(ParamSpace::parse("mu=1,2").is_err());
    }
}

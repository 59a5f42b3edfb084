//! Micro-averaged precision, recall and F1 at every rank cutoff.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::Qrels;
use crate::error::{Error, Result};

pub const DEFAULT_TRAIN_COUNT: usize = 700;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankMetrics {
    pub k: usize,
    pub tp: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Metrics for k = 1..=max_rank. Precision divides by the number of results
/// actually retrieved (`min(k, |ranking|)` summed over queries).
pub fn metrics_at_ranks(
    runs: &BTreeMap<String, Vec<String>>,
    qrels: &Qrels,
    max_rank: usize,
) -> Result<Vec<RankMetrics>> {
    let missing: Vec<&str> = runs
        .keys()
        .filter(|q| !qrels.contains_key(*q))
        .map(String::as_str)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Validation(format!(
            "run queries without relevance labels: {}",
            missing.join(", ")
        )));
    }

    // hits[k-1] = relevant results at exactly rank k, summed over queries
    let mut hits = vec![0usize; max_rank];
    let mut returned = vec![0usize; max_rank];
    let mut relevant_total = 0usize;
    for (q, ranking) in runs {
        let rel = &qrels[q];
        relevant_total += rel.len();
        let mut seen = HashSet::new();
        for (i, case) in ranking.iter().take(max_rank).enumerate() {
            returned[i] += 1;
            if rel.contains(case) && seen.insert(case) {
                hits[i] += 1;
            }
        }
    }

    let mut out = Vec::with_capacity(max_rank);
    let (mut tp, mut retrieved) = (0usize, 0usize);
    for k in 1..=max_rank {
        tp += hits[k - 1];
        retrieved += returned[k - 1];
        let precision = if retrieved == 0 { 0.0 } else { tp as f64 / retrieved as f64 };
        let recall = if relevant_total == 0 { 0.0 } else { tp as f64 / relevant_total as f64 };
        out.push(RankMetrics {
            k,
            tp,
            precision,
            recall,
            f1: f1_score(precision, recall),
        });
    }
    Ok(out)
}

/// Cutoff with the highest F1; the smallest k wins ties.
pub fn select_cutoff(metrics: &[RankMetrics]) -> Option<usize> {
    let mut best: Option<&RankMetrics> = None;
    for m in metrics {
        if best.is_none_or(|b| m.f1 > b.f1) {
            best = Some(m);
        }
    }
    best.map(|m| m.k)
}

/// First `train_count` queries train, the rest form the dev set.
pub fn split_train_dev(queries: &[String], train_count: usize) -> Result<(Vec<String>, Vec<String>)> {
    if train_count == 0 || train_count >= queries.len() {
        return Err(Error::Argument(format!(
            "train count {train_count} must be in 1..{} for {} queries",
            queries.len(),
            queries.len()
        )));
    }
    let (train, dev) = queries.split_at(train_count);
    Ok((train.to_vec(), dev.to_vec()))
}

/// TSV report: header, then `k<TAB>precision<TAB>recall<TAB>f1` per rank.
pub fn metrics_tsv(metrics: &[RankMetrics]) -> String {
    let mut out = String::from("k\tprecision\trecall\tf1\n");
    for m in metrics {
        let _ = writeln!(out, "{}\t{:.6}\t{:.6}\t{:.6}", m.k, m.precision, m.recall, m.f1);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffSummary {
    pub queries: usize,
    pub best_k: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl CutoffSummary {
    pub fn at(metrics: &[RankMetrics], k: usize, queries: usize) -> Option<Self> {
        let m = metrics.iter().find(|m| m.k == k)?;
        Some(CutoffSummary {
            queries,
            best_k: k,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
        })
    }
}

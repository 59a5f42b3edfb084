//! TREC run files and competition submission files.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::retrieval::CaseRanking;

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub query_id: String,
    pub case_id: String,
    pub rank: usize,
    pub score: f64,
    pub tag: String,
}

/// Parsed run: query id → rows in rank order.
pub type Run = BTreeMap<String, Vec<RunRow>>;

/// Six whitespace-separated columns: `qid Q0 case rank score tag`.
/// Queries are written in lexicographic order.
pub fn write_run(rankings: &[CaseRanking], tag: &str) -> String {
    let mut sorted: Vec<&CaseRanking> = rankings.iter().collect();
    sorted.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    let mut out = String::new();
    for r in sorted {
        for (i, (case, score)) in r.results.iter().enumerate() {
            let _ = writeln!(out, "{} Q0 {} {} {} {}", r.query_id, case, i + 1, score, tag);
        }
    }
    out
}

pub fn parse_run(text: &str) -> Result<Run> {
    let mut run = Run::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        let bad = |what: &str| Error::Validation(format!("run line {}: {what}", lineno + 1));
        if cols.len() != 6 {
            return Err(bad("expected 6 columns"));
        }
        let rank: usize = cols[3].parse().map_err(|_| bad("rank is not an integer"))?;
        let score: f64 = cols[4].parse().map_err(|_| bad("score is not a number"))?;
        run.entry(cols[0].to_string()).or_default().push(RunRow {
            query_id: cols[0].to_string(),
            case_id: cols[2].to_string(),
            rank,
            score,
            tag: cols[5].to_string(),
        });
    }
    for (q, rows) in run.iter_mut() {
        rows.sort_by_key(|r| r.rank);
        for (i, r) in rows.iter().enumerate() {
            if r.rank != i + 1 {
                return Err(Error::Validation(format!(
                    "run ranks for query {q} are not contiguous from 1"
                )));
            }
        }
    }
    Ok(run)
}

/// Case ids per query, in rank order.
pub fn run_case_lists(run: &Run) -> BTreeMap<String, Vec<String>> {
    run.iter()
        .map(|(q, rows)| (q.clone(), rows.iter().map(|r| r.case_id.clone()).collect()))
        .collect()
}

/// `query_id<TAB>case_id` for the top `cutoff` rows of each query.
pub fn write_submission(run: &Run, cutoff: usize) -> String {
    let mut out = String::new();
    for (q, rows) in run {
        for r in rows.iter().take(cutoff) {
            let _ = writeln!(out, "{q}\t{}", r.case_id);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranking(q: &str, results: &[(&str, f64)]) -> CaseRanking {
        CaseRanking {
            query_id: q.into(),
            results: results.iter().map(|(c, s)| (c.to_string(), *s)).collect(),
        }
    }

    #[test]
    fn write_then_parse() {
        let text = write_run(
            &[ranking("q2", &[("a", 0.5)]), ranking("q1", &[("b", 0.1), ("c", 1.0 / 61.0)])],
            "tag",
        );
        assert!(text.starts_with("q1 Q0 b 1 0.1 tag\n"));
        let run = parse_run(&text).unwrap();
        assert_eq!(run["q1"][1].score, 1.0 / 61.0);
        assert_eq!(run_case_lists(&run)["q1"], vec!["b", "c"]);
    }

    #[test]
    fn gaps_in_ranks_rejected() {
        assert!(parse_run("q Q0 a 1 1.0 t\nq Q0 b 3 0.5 t\n").is_err());
        assert!(parse_run("q Q0 a 1 1.0\n").is_err());
    }

    #[test]
    fn submission_cutoff() {
        let run = parse_run("q Q0 a 1 3 t\nq Q0 b 2 2 t\nq Q0 c 3 1 t\n").unwrap();
        assert_eq!(write_submission(&run, 2), "q\ta\nq\tb\n");
        assert_eq!(write_submission(&run, 10).lines().count(), 3);
        assert_eq!(write_submission(&Run::new(), 7), "");
    }
}

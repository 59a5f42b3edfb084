//! Case collections: loading from disk, passage segmentation, relevance labels.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc;

static PARAGRAPH_MARKER_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*\[\d+\]").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub case_id: String,
    pub passage_index: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Case {
    pub case_id: String,
    pub raw_text: String,
    pub passages: Vec<Passage>,
    pub is_query: bool,
}

impl Case {
    /// Segments `raw_text` into passages. Fails when the text has no content.
    pub fn new(case_id: impl Into<String>, raw_text: impl Into<String>) -> Result<Self> {
        let case_id = case_id.into();
        let raw_text = raw_text.into();
        let passages: Vec<Passage> = split_passages(&raw_text)
            .into_iter()
            .enumerate()
            .map(|(passage_index, text)| Passage {
                case_id: case_id.clone(),
                passage_index,
                text,
            })
            .collect();
        if passages.is_empty() {
            return Err(Error::Validation(format!("case {case_id} is empty")));
        }
        Ok(Case {
            case_id,
            raw_text,
            passages,
            is_query: false,
        })
    }
}

/// Query → relevant notice cases.
pub type Qrels = BTreeMap<String, BTreeSet<String>>;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Collection {
    pub cases: BTreeMap<String, Case>,
    pub qrels: Qrels,
}

impl Collection {
    /// Builds a collection from in-memory cases, marking every qrels key (or
    /// every id in `queries`, when given) as a query.
    pub fn from_cases(
        cases: impl IntoIterator<Item = Case>,
        qrels: Qrels,
        queries: Option<&[String]>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for case in cases {
            if map.contains_key(&case.case_id) {
                return Err(Error::Validation(format!("duplicate case id {}", case.case_id)));
            }
            map.insert(case.case_id.clone(), case);
        }
        let mut collection = Collection { cases: map, qrels };
        collection.validate_qrels()?;
        let query_ids: Vec<String> = match queries {
            Some(q) => q.to_vec(),
            None => collection.qrels.keys().cloned().collect(),
        };
        let unknown: BTreeSet<&String> = query_ids
            .iter()
            .filter(|id| !collection.cases.contains_key(*id))
            .collect();
        if !unknown.is_empty() {
            return Err(Error::Validation(format!(
                "query list references unknown case ids: {}",
                join(unknown)
            )));
        }
        for id in &query_ids {
            collection.cases.get_mut(id).unwrap().is_query = true;
        }
        Ok(collection)
    }

    fn validate_qrels(&self) -> Result<()> {
        let unknown: BTreeSet<&String> = self
            .qrels
            .iter()
            .flat_map(|(q, rel)| std::iter::once(q).chain(rel.iter()))
            .filter(|id| !self.cases.contains_key(*id))
            .collect();
        if !unknown.is_empty() {
            return Err(Error::Validation(format!(
                "qrels reference unknown case ids: {}",
                join(unknown)
            )));
        }
        if let Some((q, _)) = self.qrels.iter().find(|(_, rel)| rel.is_empty()) {
            return Err(Error::Validation(format!("query {q} has no notice cases")));
        }
        Ok(())
    }

    /// Query case ids in lexicographic order.
    pub fn query_ids(&self) -> Vec<String> {
        self.cases
            .values()
            .filter(|c| c.is_query)
            .map(|c| c.case_id.clone())
            .collect()
    }

    pub fn is_labeled(&self) -> bool {
        !self.qrels.is_empty()
    }

    pub fn passage_count(&self) -> usize {
        self.cases.values().map(|c| c.passages.len()).sum()
    }
}

fn join<'a>(ids: impl IntoIterator<Item = &'a String>) -> String {
    ids.into_iter().map(String::as_str).collect::<Vec<_>>().join(", ")
}

/// Splits case text at blank lines and at lines opening with a `[n]`
/// paragraph number. Segments are trimmed; empty ones are dropped.
pub fn split_passages(text: &str) -> Vec<String> {
    let mut passages = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    let mut flush = |current: &mut Vec<&str>| {
        let joined = current.join("\n");
        let trimmed = joined.trim();
        if !trimmed.is_empty() {
            passages.push(trimmed.to_string());
        }
        current.clear();
    };
    for line in text.lines() {
        if line.trim().is_empty() {
            flush(&mut current);
            continue;
        }
        if PARAGRAPH_MARKER_RE.is_match(line) {
            flush(&mut current);
        }
        current.push(line);
    }
    flush(&mut current);
    passages
}

/// Parses a two-column qrels TSV (`query_id<TAB>notice_id`, `#` comments).
pub fn parse_qrels(text: &str) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t').map(str::trim);
        match (cols.next(), cols.next(), cols.next()) {
            (Some(q), Some(n), None) if !q.is_empty() && !n.is_empty() => {
                qrels.entry(q.to_string()).or_default().insert(n.to_string());
            }
            _ => {
                return Err(Error::Validation(format!(
                    "qrels line {}: expected two tab-separated columns",
                    lineno + 1
                )));
            }
        }
    }
    Ok(qrels)
}

pub fn load_qrels(path: &Path) -> Result<Qrels> {
    parse_qrels(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_qrels(qrels: &Qrels) -> String {
    let mut out = String::new();
    for (q, rel) in qrels {
        for n in rel {
            out.push_str(&format!("{q}\t{n}\n"));
        }
    }
    out
}

/// Loads one case per `*.txt` file in `corpus_dir`, in lexicographic filename order.
pub fn load_collection(
    corpus_dir: &Path,
    qrels_path: Option<&Path>,
    query_list_path: Option<&Path>,
) -> Result<Collection> {
    let entries = fs::read_dir(corpus_dir).map_err(|e| Error::io(corpus_dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(corpus_dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "txt") {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::Validation(format!(
            "no .txt case files in {}",
            corpus_dir.display()
        )));
    }

    let mut cases = Vec::with_capacity(files.len());
    for path in &files {
        let case_id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Validation(format!("non-UTF-8 file name {}", path.display())))?;
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if text.trim().is_empty() {
            return Err(Error::Validation(format!("case file {} is empty", path.display())));
        }
        cases.push(Case::new(case_id, text)?);
    }

    let qrels = qrels_path.map(load_qrels).transpose()?.unwrap_or_default();
    let queries = query_list_path
        .map(|p| textproc::load_word_list(p, false))
        .transpose()?
        .map(|set| set.into_iter().collect::<Vec<_>>());
    Collection::from_cases(cases, qrels, queries.as_deref())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub max: f64,
    pub median: f64,
    pub mean: f64,
}

impl Summary {
    /// `None` for an empty sample.
    pub fn of(values: &[usize]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable();
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2] as f64
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
        };
        let mean = sorted.iter().sum::<usize>() as f64 / n as f64;
        Some(Summary {
            max: sorted[n - 1] as f64,
            median,
            mean,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionStats {
    pub total_cases: usize,
    pub query_cases: usize,
    pub tokens_per_document: Option<Summary>,
    /// Absent for unlabeled collections.
    pub notice_cases_per_query: Option<Summary>,
}

/// Table-style collection statistics. Token counts use raw tokenization.
pub fn collection_stats(collection: &Collection) -> CollectionStats {
    let token_counts: Vec<usize> = collection
        .cases
        .values()
        .map(|c| textproc::tokenize(&c.raw_text).len())
        .collect();
    let notice_counts: Vec<usize> = collection.qrels.values().map(BTreeSet::len).collect();
    CollectionStats {
        total_cases: collection.cases.len(),
        query_cases: collection.cases.values().filter(|c| c.is_query).count(),
        tokens_per_document: Summary::of(&token_counts),
        notice_cases_per_query: Summary::of(&notice_counts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn blank_line_boundary() {
        assert_eq!(split_passages("para one.\n\npara two."), vec!["para one.", "para two."]);
    }

    #[test]
    fn bracketed_number_boundary() {
        assert_eq!(split_passages("[1] First.\n[2] Second."), vec!["[1] First.", "[2] Second."]);
    }

    #[test]
    fn no_boundary() {
        assert_eq!(
            split_passages("single block no separators"),
            vec!["single block no separators"]
        );
    }

    #[test]
    fn marker_must_open_the_line() {
        assert_eq!(
            split_passages("see para [3] above\ncontinued"),
            vec!["see para [3] above\ncontinued"]
        );
        assert_eq!(
            split_passages("intro\n  [12] indented\n\n\n   \nlast"),
            vec!["intro", "[12] indented", "last"]
        );
    }

    #[test]
    fn empty_case_rejected() {
        assert!(matches!(Case::new("x", "  \n\n "), Err(Error::Validation(_))));
    }

    #[test]
    fn summary_even_and_singleton() {
        let s = Summary::of(&[10, 20]).unwrap();
        assert_eq!((s.max, s.median, s.mean), (20.0, 15.0, 15.0));
        let s = Summary::of(&[7]).unwrap();
        assert_eq!((s.max, s.median, s.mean), (7.0, 7.0, 7.0));
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn qrels_parsing() {
        let q = parse_qrels("# comment\nA\tB\nA\tC\n\nD\tB\n").unwrap();
        assert_eq!(q["A"].len(), 2);
        assert_eq!(q["D"].len(), 1);
        assert!(parse_qrels("A B\n").is_err());
    }

    #[test]
    fn unknown_qrels_ids_are_listed() {
        let cases = vec![Case::new("A", "x").unwrap(), Case::new("B", "y").unwrap()];
        let qrels = parse_qrels("A\tZ\nY\tB\n").unwrap();
        let err = Collection::from_cases(cases, qrels, None).unwrap_err().to_string();
        assert!(err.contains('Z') && err.contains('Y'), "{err}");
    }

    #[test]
    fn stats_of_unlabeled_collection() {
        let cases = vec![
            Case::new("A", "one two three four five six seven eight nine ten").unwrap(),
            Case::new("B", "a b c d e f g h i j k l m n o p q r s t").unwrap(),
        ];
        let c = Collection::from_cases(cases, Qrels::new(), None).unwrap();
        let s = collection_stats(&c);
        assert_eq!(s.total_cases, 2);
        assert_eq!(s.query_cases, 0);
        let t = s.tokens_per_document.unwrap();
        assert_eq!((t.max, t.median, t.mean), (20.0, 15.0, 15.0));
        assert!(s.notice_cases_per_query.is_none());
    }

    proptest! {
        #[test]
        fn resplitting_joined_passages_is_stable(
            paras in prop::collection::vec("[a-z]{1,8}( [a-z]{1,8}){0,5}(\n[a-z ]{1,10}){0,2}", 1..8)
        ) {
            let text = paras.join("\n\n");
            let first = split_passages(&text);
            let second = split_passages(&first.join("\n\n"));
            prop_assert_eq!(&first, &second);
            let total: usize = first.iter().map(String::len).sum();
            prop_assert!(total <= text.len());
        }
    }
}

//! Query construction, unit search and reciprocal rank fusion.
//!
//! Passage-level retrieval issues one query per passage of the query case and
//! fuses the passage rankings into a case ranking:
//!
//! ```text
//! rrf(c) = Σ_r  1 / (k_rrf + r(c)) * p_b(r)
//! ```
//!
//! where `r(c)` is the 1-based rank of the best passage of case `c` in ranking
//! `r`, and `p_b(r)` is the passage boost of the query passage that produced `r`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Case, Collection};
use crate::error::{Error, Result};
use crate::index::{Field, Granularity, Index};
use crate::scoring::{self, Bm25Params, FieldScore, Scorer};
use crate::textproc::Analyzer;

/// Case-level result depth.
pub const DEFAULT_DEPTH: usize = 100;
pub const DEFAULT_K_RRF: f64 = 60.0;

/// Where query-term extraction takes document frequencies from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DfSource {
    /// Retrieval units of the searched index.
    #[default]
    Units,
    /// Distinct cases, whatever the index granularity.
    Cases,
}

impl std::str::FromStr for DfSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "units" => Ok(DfSource::Units),
            "cases" => Ok(DfSource::Cases),
            other => Err(Error::Argument(format!("unknown df source {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionParams {
    pub k_rrf: f64,
    /// Boost applied to rankings of query passages citing at least one section.
    pub passage_boost: f64,
    /// Weight of the statute-field score.
    pub statute_boost: f64,
    pub passage_depth: usize,
}

impl Default for FusionParams {
    fn default() -> Self {
        FusionParams {
            k_rrf: DEFAULT_K_RRF,
            passage_boost: 1.0,
            statute_boost: 0.0,
            passage_depth: DEFAULT_DEPTH,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_rrf > 0.0 && self.k_rrf.is_finite()) {
            return Err(Error::Argument(format!("k_rrf must be positive, got {}", self.k_rrf)));
        }
        if !(self.passage_boost >= 0.0 && self.passage_boost.is_finite()) {
            return Err(Error::Argument(format!("P_b must be >= 0, got {}", self.passage_boost)));
        }
        if !(self.statute_boost >= 0.0 && self.statute_boost.is_finite()) {
            return Err(Error::Argument(format!("s_b must be >= 0, got {}", self.statute_boost)));
        }
        if self.passage_depth == 0 {
            return Err(Error::Argument("passage depth must be at least 1".into()));
        }
        Ok(())
    }
}

/// Everything that shapes a retrieval run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub scorer: Scorer,
    /// Top-T query terms by TF-IDF; `None` keeps every distinct term.
    pub max_terms: Option<usize>,
    pub fusion: FusionParams,
    pub depth: usize,
    /// Parameters of the statute-field BM25.
    pub statute_bm25: Bm25Params,
    pub df_source: DfSource,
    /// Drop every query case from result lists, not only the one being searched.
    pub exclude_all_queries: bool,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            scorer: Scorer::LmJm(scoring::LmParams { lambda: 0.56 }),
            max_terms: None,
            fusion: FusionParams::default(),
            depth: DEFAULT_DEPTH,
            statute_bm25: Bm25Params::default(),
            df_source: DfSource::Units,
            exclude_all_queries: true,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<()> {
        self.scorer.validate()?;
        self.fusion.validate()?;
        self.statute_bm25.validate()?;
        if self.depth == 0 || self.depth > DEFAULT_DEPTH {
            return Err(Error::Argument(format!(
                "depth must be in 1..={DEFAULT_DEPTH}, got {}",
                self.depth
            )));
        }
        if self.max_terms == Some(0) {
            return Err(Error::Argument("T must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageQuery {
    pub case_id: String,
    pub passage_index: usize,
    /// Distinct body terms.
    pub terms: Vec<String>,
    pub statute_terms: Vec<String>,
    /// Number of statute-section refs on the passage.
    pub s_n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredUnit {
    pub unit_id: u32,
    pub score: FieldScore,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CaseRanking {
    pub query_id: String,
    /// Descending score, ties by ascending case id.
    pub results: Vec<(String, f64)>,
}

impl CaseRanking {
    pub fn case_ids(&self) -> Vec<String> {
        self.results.iter().map(|(c, _)| c.clone()).collect()
    }
}

fn by_score_then_id<K: Ord>(a: (f64, &K), b: (f64, &K)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

/// Terms in first-appearance order with duplicates removed.
pub fn distinct_terms(terms: &[String]) -> Vec<String> {
    let mut seen = HashSet::new();
    terms.iter().filter(|t| seen.insert(t.as_str())).cloned().collect()
}

/// Ranks the distinct terms of `terms` by TF-IDF (tf within `terms`) and keeps
/// the top `max_terms`; ties go to the lexicographically smaller term. With
/// `max_terms = None` every distinct term is returned in that order.
pub fn top_terms(terms: &[String], index: &Index, max_terms: Option<usize>, df_source: DfSource) -> Vec<String> {
    let mut tf: HashMap<&str, u32> = HashMap::new();
    for t in terms {
        *tf.entry(t.as_str()).or_default() += 1;
    }
    let n = match df_source {
        DfSource::Units => index.unit_count() as u32,
        DfSource::Cases => index.case_count() as u32,
    };
    let mut weighted: Vec<(f64, &str)> = tf
        .into_iter()
        .map(|(term, count)| {
            let df = match df_source {
                DfSource::Units => index.df(Field::Body, term),
                DfSource::Cases => index.case_df(Field::Body, term),
            };
            (scoring::tfidf_weight(count, df, n), term)
        })
        .collect();
    weighted.sort_by(|a, b| by_score_then_id((a.0, &a.1), (b.0, &b.1)));
    let keep = max_terms.unwrap_or(usize::MAX);
    weighted.into_iter().take(keep).map(|(_, t)| t.to_string()).collect()
}

/// Query terms of a whole case.
pub fn extract_query_terms(case: &Case, index: &Index, max_terms: Option<usize>, df_source: DfSource) -> Result<Vec<String>> {
    let analyzer = Analyzer::new(index.pipeline().clone())?;
    let terms: Vec<String> = case.passages.iter().flat_map(|p| analyzer.analyze(&p.text)).collect();
    if terms.is_empty() {
        log::warn!("case {} has no query terms after normalization", case.case_id);
    }
    Ok(top_terms(&terms, index, max_terms, df_source))
}

/// Scores units against body terms (with `scorer`) and statute terms (always
/// BM25), combining them as `s_body + s_statute * s_b`. Returns the top `depth`
/// units with a positive total, skipping units for which `exclude` is true.
#[allow(clippy::too_many_arguments)]
pub fn search_units(
    index: &Index,
    terms: &[String],
    statute_terms: &[String],
    scorer: Scorer,
    statute_bm25: Bm25Params,
    s_b: f64,
    depth: usize,
    exclude: &dyn Fn(u32) -> bool,
) -> Result<Vec<ScoredUnit>> {
    if depth == 0 {
        return Err(Error::Argument("depth must be at least 1".into()));
    }
    let n = index.unit_count();
    let mut body = vec![0.0f64; n];
    let mut statute = vec![0.0f64; n];
    let mut touched = vec![false; n];
    let mut hits: Vec<u32> = Vec::new();

    let body_stats = index.stats(Field::Body);
    for term in terms {
        let postings = index.lookup(Field::Body, term);
        if postings.is_empty() {
            continue;
        }
        let df = postings.len() as u32;
        let ctf = index.ctf(Field::Body, term);
        for p in postings {
            let len = index.unit(p.unit_id).field_len(Field::Body);
            let s = match scorer {
                Scorer::Bm25(params) => {
                    scoring::bm25_term_unchecked(p.tf, df, body_stats.units, len, body_stats.avg_len, params)
                }
                Scorer::LmJm(params) => {
                    scoring::lm_jm_term_unchecked(p.tf, len, ctf, body_stats.total_terms, params)
                }
            };
            let u = p.unit_id as usize;
            body[u] += s;
            if !touched[u] {
                touched[u] = true;
                hits.push(p.unit_id);
            }
        }
    }

    if s_b != 0.0 {
        let st = index.stats(Field::Statute);
        for term in statute_terms {
            let postings = index.lookup(Field::Statute, term);
            let df = postings.len() as u32;
            for p in postings {
                let len = index.unit(p.unit_id).field_len(Field::Statute);
                let u = p.unit_id as usize;
                statute[u] += scoring::bm25_term_unchecked(p.tf, df, st.units, len, st.avg_len, statute_bm25);
                if !touched[u] {
                    touched[u] = true;
                    hits.push(p.unit_id);
                }
            }
        }
    }

    let mut ranked: Vec<ScoredUnit> = hits
        .into_iter()
        .filter(|&u| !exclude(u))
        .map(|u| ScoredUnit {
            unit_id: u,
            score: FieldScore::new(body[u as usize], statute[u as usize], s_b),
        })
        .filter(|s| s.score.s_total > 0.0)
        .collect();
    ranked.sort_by(|a, b| by_score_then_id((a.score.s_total, &a.unit_id), (b.score.s_total, &b.unit_id)));
    ranked.truncate(depth);
    Ok(ranked)
}

/// `P_b` when the query passage carries at least one statute section, else 1.
pub fn passage_boost(s_n: usize, p_b: f64) -> f64 {
    if s_n >= 1 { p_b } else { 1.0 }
}

/// Fuses passage rankings into a case ranking. Each ranking lists the case id
/// of every retrieved passage in rank order and carries its passage boost.
/// A case absent from a ranking gets nothing from it. `query_id` is dropped.
pub fn rrf_fuse<R, S>(query_id: &str, rankings: &[(R, f64)], k_rrf: f64) -> CaseRanking
where
    R: AsRef<[S]>,
    S: AsRef<str>,
{
    let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
    for (ranking, p_b) in rankings {
        let mut seen: HashSet<&str> = HashSet::new();
        for (pos, case) in ranking.as_ref().iter().enumerate() {
            let case = case.as_ref();
            if case == query_id || !seen.insert(case) {
                continue;
            }
            let rank = (pos + 1) as f64;
            *scores.entry(case).or_default() += 1.0 / (k_rrf + rank) * p_b;
        }
    }
    let mut results: Vec<(String, f64)> = scores.into_iter().map(|(c, s)| (c.to_string(), s)).collect();
    results.sort_by(|a, b| by_score_then_id((a.1, &a.0), (b.1, &b.0)));
    CaseRanking {
        query_id: query_id.to_string(),
        results,
    }
}

/// Runs queries of one collection against an index.
pub struct Retriever<'a> {
    index: &'a Index,
    collection: &'a Collection,
    analyzer: Analyzer,
    config: RetrievalConfig,
    /// Units whose case is a query case.
    query_units: Vec<bool>,
}

impl<'a> Retriever<'a> {
    pub fn new(index: &'a Index, collection: &'a Collection, config: RetrievalConfig) -> Result<Self> {
        config.validate()?;
        let analyzer = Analyzer::new(index.pipeline().clone())?;
        let query_units = index
            .units()
            .iter()
            .map(|u| {
                config.exclude_all_queries && collection.cases.get(&u.case_id).is_some_and(|c| c.is_query)
            })
            .collect();
        Ok(Retriever {
            index,
            collection,
            analyzer,
            config,
            query_units,
        })
    }

    pub fn config(&self) -> &RetrievalConfig {
        &self.config
    }

    fn case(&self, case_id: &str) -> Result<&Case> {
        self.collection
            .cases
            .get(case_id)
            .ok_or_else(|| Error::Validation(format!("unknown query case {case_id}")))
    }

    /// Dispatches on the index granularity.
    pub fn retrieve(&self, query_id: &str) -> Result<CaseRanking> {
        match self.index.granularity() {
            Granularity::Document => self.retrieve_document_level(query_id),
            Granularity::Passage => self.retrieve_passage_level(query_id),
        }
    }

    /// Retrieves several queries in parallel; output order follows `query_ids`.
    pub fn retrieve_all(&self, query_ids: &[String]) -> Result<Vec<CaseRanking>> {
        query_ids.par_iter().map(|q| self.retrieve(q)).collect()
    }

    fn excluder(&self, query_id: &str) -> impl Fn(u32) -> bool + '_ {
        let own = self.index.units_of_case(query_id);
        move |u: u32| own.contains(&u) || self.query_units[u as usize]
    }

    pub fn retrieve_document_level(&self, query_id: &str) -> Result<CaseRanking> {
        if self.index.granularity() != Granularity::Document {
            return Err(Error::Argument("document-level retrieval needs a document index".into()));
        }
        let case = self.case(query_id)?;
        let terms = extract_query_terms(case, self.index, self.config.max_terms, self.config.df_source)?;
        let statute_terms: &[String] = match self.index.units_of_case(query_id) {
            r if !r.is_empty() => self.index.statute_terms(r.start),
            _ => &[],
        };
        let exclude = self.excluder(query_id);
        let ranked = search_units(
            self.index,
            &terms,
            statute_terms,
            self.config.scorer,
            self.config.statute_bm25,
            self.config.fusion.statute_boost,
            self.config.depth,
            &exclude,
        )?;
        Ok(CaseRanking {
            query_id: query_id.to_string(),
            results: ranked
                .into_iter()
                .map(|s| (self.index.unit(s.unit_id).case_id.clone(), s.score.s_total))
                .collect(),
        })
    }

    /// One query per passage of the case.
    pub fn passage_queries(&self, case: &Case) -> Vec<PassageQuery> {
        let units = self.index.units_of_case(&case.case_id);
        let passage_level = self.index.granularity() == Granularity::Passage;
        case.passages
            .iter()
            .map(|p| {
                let analyzed = self.analyzer.analyze(&p.text);
                let terms = match self.config.max_terms {
                    None => distinct_terms(&analyzed),
                    Some(_) => top_terms(&analyzed, self.index, self.config.max_terms, self.config.df_source),
                };
                let unit = units.start + p.passage_index as u32;
                let statute_terms = if passage_level && units.contains(&unit) {
                    self.index.statute_terms(unit).to_vec()
                } else {
                    Vec::new()
                };
                PassageQuery {
                    case_id: case.case_id.clone(),
                    passage_index: p.passage_index,
                    s_n: statute_terms.len(),
                    terms,
                    statute_terms,
                }
            })
            .collect()
    }

    pub fn retrieve_passage_level(&self, query_id: &str) -> Result<CaseRanking> {
        if self.index.granularity() != Granularity::Passage {
            return Err(Error::Argument("passage-level retrieval needs a passage index".into()));
        }
        let case = self.case(query_id)?;
        let queries = self.passage_queries(case);
        let fusion = self.config.fusion;
        let exclude = self.excluder(query_id);
        let rankings: Vec<(Vec<&str>, f64)> = queries
            .iter()
            .filter(|q| !q.terms.is_empty() || !q.statute_terms.is_empty())
            .map(|q| {
                let ranked = search_units(
                    self.index,
                    &q.terms,
                    &q.statute_terms,
                    self.config.scorer,
                    self.config.statute_bm25,
                    fusion.statute_boost,
                    fusion.passage_depth,
                    &exclude,
                )?;
                let cases: Vec<&str> = ranked
                    .iter()
                    .map(|s| self.index.unit(s.unit_id).case_id.as_str())
                    .collect();
                Ok((cases, passage_boost(q.s_n, fusion.passage_boost)))
            })
            .collect::<Result<_>>()?;
        if rankings.is_empty() {
            log::warn!("query case {query_id} produced no non-empty passage queries");
        }
        let mut fused = rrf_fuse(query_id, &rankings, fusion.k_rrf);
        fused.results.truncate(self.config.depth);
        Ok(fused)
    }
}

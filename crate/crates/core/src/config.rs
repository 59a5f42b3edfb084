//! Flat `key=value` experiment configuration.
//!
//! Recognised keys: `scorer`, `k1`, `b`, `lambda`, `T`, `k_rrf`, `P_b`, `s_b`,
//! `depth`, `passage_depth`, `granularity`, `stopwords_path`,
//! `placeholders_path`, `min_token_len`, `stemmer`, `df_source`, `statute_k1`,
//! `statute_b`, `exclude_all_queries`. Blank lines and `#` comments are ignored.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::Granularity;
use crate::retrieval::{DfSource, FusionParams, RetrievalConfig};
use crate::scoring::{Bm25Params, LmParams, Scorer};
use crate::textproc::{PipelineConfig, Stemmer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Bm25,
    Lm,
}

impl std::str::FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bm25" => Ok(ScorerKind::Bm25),
            "lm" | "lm_jm" => Ok(ScorerKind::Lm),
            other => Err(Error::Argument(format!("unknown scorer {other:?}"))),
        }
    }
}

impl std::fmt::Display for ScorerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScorerKind::Bm25 => "bm25",
            ScorerKind::Lm => "lm",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scorer: ScorerKind,
    pub k1: f64,
    pub b: f64,
    pub lambda: f64,
    pub max_terms: Option<usize>,
    pub k_rrf: f64,
    pub passage_boost: f64,
    pub statute_boost: f64,
    pub depth: usize,
    pub passage_depth: usize,
    pub granularity: Option<Granularity>,
    pub stopwords_path: Option<PathBuf>,
    pub placeholders_path: Option<PathBuf>,
    pub min_token_len: usize,
    pub stemmer: Stemmer,
    pub df_source: DfSource,
    pub statute_k1: f64,
    pub statute_b: f64,
    pub exclude_all_queries: bool,
}

impl Default for ExperimentConfig {
    /// Passage-level LM without statute boosts.
    fn default() -> Self {
        let statute = Bm25Params::default();
        ExperimentConfig {
            scorer: ScorerKind::Lm,
            k1: 0.66,
            b: 0.59,
            lambda: 0.56,
            max_terms: None,
            k_rrf: 60.0,
            passage_boost: 1.0,
            statute_boost: 0.0,
            depth: 100,
            passage_depth: 100,
            granularity: None,
            stopwords_path: None,
            placeholders_path: None,
            min_token_len: 3,
            stemmer: Stemmer::Porter,
            df_source: DfSource::Units,
            statute_k1: statute.k1,
            statute_b: statute.b,
            exclude_all_queries: true,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Argument(format!("config key {key}: cannot parse {value:?}")))
}

/// Parses `none` (or an empty value) as no limit.
pub fn parse_max_terms(value: &str) -> Result<Option<usize>> {
    match value {
        "none" | "" => Ok(None),
        v => {
            let t: usize = parse_num("T", v)?;
            if t == 0 {
                return Err(Error::Argument("T must be at least 1".into()));
            }
            Ok(Some(t))
        }
    }
}

impl ExperimentConfig {
    /// Applies one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "scorer" => self.scorer = value.parse()?,
            "k1" => self.k1 = parse_num(key, value)?,
            "b" => self.b = parse_num(key, value)?,
            "lambda" => self.lambda = parse_num(key, value)?,
            "T" => self.max_terms = parse_max_terms(value)?,
            "k_rrf" => self.k_rrf = parse_num(key, value)?,
            "P_b" => self.passage_boost = parse_num(key, value)?,
            "s_b" => self.statute_boost = parse_num(key, value)?,
            "depth" => self.depth = parse_num(key, value)?,
            "passage_depth" => self.passage_depth = parse_num(key, value)?,
            "granularity" => self.granularity = Some(value.parse()?),
            "stopwords_path" => self.stopwords_path = Some(PathBuf::from(value)),
            "placeholders_path" => self.placeholders_path = Some(PathBuf::from(value)),
            "min_token_len" => self.min_token_len = parse_num(key, value)?,
            "stemmer" => self.stemmer = value.parse()?,
            "df_source" => self.df_source = value.parse()?,
            "statute_k1" => self.statute_k1 = parse_num(key, value)?,
            "statute_b" => self.statute_b = parse_num(key, value)?,
            "exclude_all_queries" => self.exclude_all_queries = parse_num(key, value)?,
            other => return Err(Error::Argument(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Defaults tuned for one index granularity. Document-level runs keep the
    /// top 200 query terms and use their own scorer optimum; passage-level
    /// runs use [`ExperimentConfig::default`].
    pub fn defaults_for(granularity: Granularity) -> Self {
        match granularity {
            Granularity::Passage => ExperimentConfig::default(),
            Granularity::Document => ExperimentConfig {
                k1: 1.09,
                b: 0.99,
                lambda: 0.64,
                max_terms: Some(200),
                ..ExperimentConfig::default()
            },
        }
    }

    /// Reads a config file on top of `self`.
    pub fn with_file(mut self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text)?;
        Ok(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Argument(format!("config line {}: expected key=value", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Canonical text form; [`Self::parse`] reads it back unchanged.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("scorer", self.scorer.to_string());
        kv("k1", self.k1.to_string());
        kv("b", self.b.to_string());
        kv("lambda", self.lambda.to_string());
        kv("T", self.max_terms.map_or("none".into(), |t| t.to_string()));
        kv("k_rrf", self.k_rrf.to_string());
        kv("P_b", self.passage_boost.to_string());
        kv("s_b", self.statute_boost.to_string());
        kv("depth", self.depth.to_string());
        kv("passage_depth", self.passage_depth.to_string());
        if let Some(g) = self.granularity {
            kv("granularity", g.to_string());
        }
        if let Some(p) = &self.stopwords_path {
            kv("stopwords_path", p.display().to_string());
        }
        if let Some(p) = &self.placeholders_path {
            kv("placeholders_path", p.display().to_string());
        }
        kv("min_token_len", self.min_token_len.to_string());
        kv(
            "stemmer",
            match self.stemmer {
                Stemmer::Porter => "porter".into(),
                Stemmer::None => "none".into(),
            },
        );
        kv(
            "df_source",
            match self.df_source {
                DfSource::Units => "units".into(),
                DfSource::Cases => "cases".into(),
            },
        );
        kv("statute_k1", self.statute_k1.to_string());
        kv("statute_b", self.statute_b.to_string());
        kv("exclude_all_queries", self.exclude_all_queries.to_string());
        out
    }

    pub fn scorer(&self) -> Scorer {
        match self.scorer {
            ScorerKind::Bm25 => Scorer::Bm25(Bm25Params { k1: self.k1, b: self.b }),
            ScorerKind::Lm => Scorer::LmJm(LmParams { lambda: self.lambda }),
        }
    }

    pub fn retrieval_config(&self) -> Result<RetrievalConfig> {
        let cfg = RetrievalConfig {
            scorer: self.scorer(),
            max_terms: self.max_terms,
            fusion: FusionParams {
                k_rrf: self.k_rrf,
                passage_boost: self.passage_boost,
                statute_boost: self.statute_boost,
                passage_depth: self.passage_depth,
            },
            depth: self.depth,
            statute_bm25: Bm25Params {
                k1: self.statute_k1,
                b: self.statute_b,
            },
            df_source: self.df_source,
            exclude_all_queries: self.exclude_all_queries,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        let mut p = PipelineConfig {
            min_token_len: self.min_token_len,
            stemmer: self.stemmer,
            ..PipelineConfig::default()
        };
        if let Some(path) = &self.stopwords_path {
            p = p.with_stopwords_file(path)?;
        }
        if let Some(path) = &self.placeholders_path {
            p = p.with_placeholders_file(path)?;
        }
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_passage_lm_without_statutes() {
        let c = ExperimentConfig::default();
        assert_eq!(c.scorer, ScorerKind::Lm);
        assert_eq!(c.max_terms, None);
        assert_eq!((c.k_rrf, c.passage_boost, c.statute_boost), (60.0, 1.0, 0.0));
        assert_eq!(c.depth, 100);
    }

    #[test]
    fn text_roundtrip() {
        let mut c = ExperimentConfig::default();
        c.set("scorer", "bm25").unwrap();
        c.set("T", "200").unwrap();
        c.set("k1", "1.0900000000000001").unwrap();
        c.set("granularity", "passage").unwrap();
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("nonsense").is_err());
        assert!(ExperimentConfig::parse("colour=blue").is_err());
        assert!(ExperimentConfig::parse("T=0").is_err());
        assert!(ExperimentConfig::parse("scorer=bm25\nb=2").unwrap().retrieval_config().is_err());
        let c = ExperimentConfig::parse("# comment\n\nlambda = 0.3\n").unwrap();
        assert_eq!(c.lambda, 0.3);
    }
}

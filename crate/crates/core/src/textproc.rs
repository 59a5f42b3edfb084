//! Text normalization shared by indexing and query construction.
//!
//! The pipeline runs in a fixed order:
//!
//! 1. placeholder removal (case-insensitive)
//! 2. lowercasing
//! 3. stopword removal
//! 4. length filter (tokens shorter than `min_token_len` are dropped unless they
//!    look like a section number)
//! 5. number filter (numeric tokens are dropped unless they are section citations)
//! 6. stemming (section citations are never stemmed); stems shorter than
//!    `min_token_len` are dropped

use std::collections::{BTreeSet, HashSet};
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statutes;

/// Grammar of a statute section number: `18`, `18.1`, `18.1(4)`, `5(1)(a)`.
pub(crate) const SECTION_NUMBER: &str = r"[0-9]+(?:\.[0-9]+)?(?:\((?:[0-9]+|[A-Za-z]+)\))*";

static SECTION_TOKEN_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!("^{SECTION_NUMBER}$")).unwrap());
static SECTION_PREFIX_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!("^{SECTION_NUMBER}")).unwrap());

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");
const DEFAULT_PLACEHOLDERS: &str = include_str!("../data/placeholders.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Stemmer {
    #[default]
    Porter,
    None,
}

impl std::str::FromStr for Stemmer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "porter" => Ok(Stemmer::Porter),
            "none" => Ok(Stemmer::None),
            other => Err(Error::Argument(format!("unknown stemmer {other:?}"))),
        }
    }
}

/// Configuration of the normalization pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Lowercase stopwords.
    pub stopwords: BTreeSet<String>,
    /// Placeholder tokens, stored lowercase; matching is case-insensitive.
    pub placeholders: BTreeSet<String>,
    pub min_token_len: usize,
    pub stemmer: Stemmer,
    /// When analyzing raw text, keep only numbers that a section cue marks as a
    /// citation. Standalone [`normalize`] keeps every token matching the
    /// section grammar.
    pub cited_numbers_only: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stopwords: parse_word_list(DEFAULT_STOPWORDS, true),
            placeholders: parse_word_list(DEFAULT_PLACEHOLDERS, true),
            min_token_len: 3,
            stemmer: Stemmer::Porter,
            cited_numbers_only: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_token_len == 0 {
            return Err(Error::Argument("min_token_len must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_stopwords_file(mut self, path: &Path) -> Result<Self> {
        self.stopwords = load_word_list(path, true)?;
        Ok(self)
    }

    pub fn with_placeholders_file(mut self, path: &Path) -> Result<Self> {
        self.placeholders = load_word_list(path, true)?;
        Ok(self)
    }
}

/// Parses a one-token-per-line list. Blank lines and `#` comments are skipped.
pub fn parse_word_list(text: &str, lowercase: bool) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| if lowercase { l.to_lowercase() } else { l.to_string() })
        .collect()
}

pub fn load_word_list(path: &Path, lowercase: bool) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_word_list(&text, lowercase))
}

/// Splits text into raw tokens with their byte spans.
pub(crate) fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        if !c.is_alphanumeric() {
            chars.next();
            continue;
        }
        let mut end = None;
        if c.is_ascii_digit()
            && let Some(m) = SECTION_PREFIX_RE.find(&text[start..])
        {
            let e = start + m.end();
            let next_is_word = text[e..].chars().next().is_some_and(char::is_alphanumeric);
            if !next_is_word {
                end = Some(e);
            }
        }
        let end = end.unwrap_or_else(|| {
            text[start..]
                .char_indices()
                .find(|&(_, ch)| !ch.is_alphanumeric())
                .map_or(text.len(), |(i, _)| start + i)
        });
        spans.push((start, end));
        while chars.peek().is_some_and(|&(i, _)| i < end) {
            chars.next();
        }
    }
    spans
}

/// Splits on every character that is not a letter or digit. `.`, `(` and `)`
/// survive only inside a section number such as `18.1(4)`.
pub fn tokenize(text: &str) -> Vec<&str> {
    token_spans(text).into_iter().map(|(s, e)| &text[s..e]).collect()
}

/// True iff `token` matches the section-number grammar (digits, optional
/// `.digits`, then any number of parenthesised digit or letter groups).
pub fn is_section_citation_token(token: &str) -> bool {
    SECTION_TOKEN_RE.is_match(token)
}

fn is_numeric(token: &str) -> bool {
    token.chars().next().is_some_and(|c| c.is_ascii_digit())
}

/// Standalone normalization: any token passing the section grammar is kept.
pub fn normalize<S: AsRef<str>>(tokens: &[S], config: &PipelineConfig) -> Vec<String> {
    normalize_with_citations(tokens, config, None)
}

/// Normalization with passage context. When `cited` is given, numeric tokens
/// survive only if they appear in it (lowercase section strings).
pub fn normalize_with_citations<S: AsRef<str>>(
    tokens: &[S],
    config: &PipelineConfig,
    cited: Option<&HashSet<String>>,
) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    for token in tokens {
        let token = token.as_ref();
        if config.placeholders.contains(&token.to_lowercase()) {
            continue;
        }
        let lower = token.to_lowercase();
        if config.stopwords.contains(&lower) {
            continue;
        }
        let citation_like = is_section_citation_token(&lower);
        if lower.chars().count() < config.min_token_len && !citation_like {
            continue;
        }
        if is_numeric(&lower) {
            let keep = match cited {
                Some(set) => citation_like && set.contains(&lower),
                None => citation_like,
            };
            if !keep {
                continue;
            }
            out.push(lower);
            continue;
        }
        let term = match config.stemmer {
            Stemmer::Porter => porter_stemmer::stem(&lower),
            Stemmer::None => lower,
        };
        // stems such as "its" -> "it" can fall under the length floor
        if term.chars().count() >= config.min_token_len {
            out.push(term);
        }
    }
    out
}

/// Compiled form of a [`PipelineConfig`] that turns raw text into index terms.
#[derive(Debug, Clone)]
pub struct Analyzer {
    config: PipelineConfig,
    placeholder_re: Option<Regex>,
}

impl Analyzer {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let placeholder_re = if config.placeholders.is_empty() {
            None
        } else {
            let alts: Vec<String> = config.placeholders.iter().map(|p| regex::escape(p)).collect();
            let pattern = format!(r"(?i)\b(?:{})\b", alts.join("|"));
            Some(Regex::new(&pattern).map_err(|e| Error::Argument(e.to_string()))?)
        };
        Ok(Analyzer {
            config,
            placeholder_re,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Full pipeline over raw text. Placeholders are removed before
    /// tokenization since the tokenizer would split them on `_`.
    pub fn analyze(&self, text: &str) -> Vec<String> {
        let stripped;
        let text = match &self.placeholder_re {
            Some(re) if re.is_match(text) => {
                stripped = re.replace_all(text, " ");
                stripped.as_ref()
            }
            _ => text,
        };
        let tokens = tokenize(text);
        if self.config.cited_numbers_only {
            let cited: HashSet<String> = statutes::detect_section_numbers(text)
                .into_iter()
                .map(|(section, _)| section)
                .collect();
            normalize_with_citations(&tokens, &self.config, Some(&cited))
        } else {
            normalize(&tokens, &self.config)
        }
    }
}

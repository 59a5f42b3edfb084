//! Statute catalog, statute/section detection and section attribution.
//!
//! Sections found in a case are attributed to the statute they co-occur with
//! most often, counted over the passages of that case. The resulting
//! `(statute, section)` pairs annotate passages and feed the statute field of
//! the index.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::LazyLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{Case, Collection};
use crate::error::{Error, Result};
use crate::textproc::{SECTION_NUMBER, is_section_citation_token};

/// Statute id given to sections that never co-occur with a statute mention.
pub const UNKNOWN_STATUTE: &str = "UNKNOWN";

const TITLE_KEYWORDS: [&str; 4] = ["regulations", "order", "act", "rules"];

static NON_SPACE_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\S+").unwrap());

static SECTION_CUE_RE: LazyLock<Regex> = LazyLock::new(|| {
    let n = SECTION_NUMBER;
    Regex::new(&format!(
        r"(?i)\b(sections|section|subsections|subsection|ss\.|s\.)\s*({n}(?:\s*(?:,|\band\b|\bor\b|&)\s*{n})*)"
    ))
    .unwrap()
});

static SECTION_NUMBER_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(SECTION_NUMBER).unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatuteTitle {
    pub statute_id: String,
    pub raw_title: String,
    pub cleaned_title: String,
    pub acronym: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct StatuteCatalog {
    pub titles: Vec<StatuteTitle>,
    /// Lowercase cleaned title → statute id.
    pub title_index: BTreeMap<String, String>,
    pub acronym_index: BTreeMap<String, BTreeSet<String>>,
    /// First lowercase word → (lowercase word sequence, statute id).
    by_first_word: HashMap<String, Vec<(Vec<String>, String)>>,
}

impl StatuteCatalog {
    pub fn from_titles<I, S>(raw_titles: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut catalog = StatuteCatalog::default();
        for raw in raw_titles {
            let raw = raw.as_ref().trim();
            if raw.is_empty() {
                continue;
            }
            let cleaned = clean_title(raw);
            let words = lower_words(&cleaned);
            if words.len() == 1 && TITLE_KEYWORDS.contains(&words[0].as_str()) {
                log::debug!("skipping title {raw:?}: nothing left but a keyword");
                continue;
            }
            let statute_id = slug(&cleaned);
            if statute_id.is_empty() || catalog.titles.iter().any(|t| t.statute_id == statute_id) {
                continue;
            }
            let acronym = make_acronym(&cleaned);
            if let Some(a) = &acronym {
                catalog
                    .acronym_index
                    .entry(a.clone())
                    .or_default()
                    .insert(statute_id.clone());
            }
            catalog
                .title_index
                .insert(cleaned.to_lowercase(), statute_id.clone());
            catalog
                .by_first_word
                .entry(words[0].clone())
                .or_default()
                .push((words, statute_id.clone()));
            catalog.titles.push(StatuteTitle {
                statute_id,
                raw_title: raw.to_string(),
                cleaned_title: cleaned,
                acronym,
            });
        }
        catalog
    }

    pub fn len(&self) -> usize {
        self.titles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.titles.is_empty()
    }

    pub fn get(&self, statute_id: &str) -> Option<&StatuteTitle> {
        self.titles.iter().find(|t| t.statute_id == statute_id)
    }
}

/// Reads a titles file (one raw title per line).
pub fn load_statute_titles(path: &Path) -> Result<StatuteCatalog> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let catalog = StatuteCatalog::from_titles(text.lines());
    if catalog.is_empty() {
        log::warn!("statute titles file {} yielded no titles", path.display());
    }
    Ok(catalog)
}

/// Keeps text up to and including the first `regulations`, `order`, `act` or
/// `rules` token (case-insensitive). Returns the trimmed input when none occurs.
pub fn clean_title(raw_title: &str) -> String {
    let raw = raw_title.trim();
    for m in NON_SPACE_RE.find_iter(raw) {
        let token = m.as_str();
        let Some(core_start) = token.find(char::is_alphanumeric) else {
            continue;
        };
        let core_end = token
            .char_indices()
            .rev()
            .find(|(_, c)| c.is_alphanumeric())
            .map(|(i, c)| i + c.len_utf8())
            .unwrap();
        let core = &token[core_start..core_end];
        if TITLE_KEYWORDS.iter().any(|k| core.eq_ignore_ascii_case(k)) {
            return raw[..m.start() + core_end].to_string();
        }
    }
    raw.to_string()
}

/// First character of every whitespace token that starts with an uppercase
/// letter. Acronyms shorter than two letters are discarded.
pub fn make_acronym(cleaned_title: &str) -> Option<String> {
    let acronym: String = cleaned_title
        .split_whitespace()
        .filter_map(|t| t.chars().next())
        .filter(|c| c.is_uppercase())
        .collect();
    (acronym.chars().count() >= 2).then_some(acronym)
}

fn slug(title: &str) -> String {
    lower_words(title).join("-")
}

fn word_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

fn lower_words(text: &str) -> Vec<String> {
    word_spans(text)
        .into_iter()
        .map(|(s, e)| text[s..e].to_lowercase())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StatuteMention {
    pub statute_id: String,
    /// Byte span in the searched text.
    pub span: (usize, usize),
}

/// Finds statute titles (case-insensitive, longest match wins on overlap) and
/// acronyms (case-sensitive whole words). An acronym shared by several
/// statutes yields one mention per statute.
pub fn detect_statute_mentions(text: &str, catalog: &StatuteCatalog) -> Vec<StatuteMention> {
    let spans = word_spans(text);
    let lower: Vec<String> = spans.iter().map(|&(s, e)| text[s..e].to_lowercase()).collect();

    // (start word, word count, statute id)
    let mut candidates: Vec<(usize, usize, &str)> = Vec::new();
    for i in 0..lower.len() {
        let Some(seqs) = catalog.by_first_word.get(&lower[i]) else {
            continue;
        };
        for (seq, id) in seqs {
            if i + seq.len() <= lower.len() && lower[i..i + seq.len()] == seq[..] {
                candidates.push((i, seq.len(), id));
            }
        }
    }
    candidates.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)).then(a.2.cmp(b.2)));
    let mut taken = vec![false; lower.len()];
    let mut mentions = Vec::new();
    for (start, len, id) in candidates {
        if taken[start..start + len].iter().any(|&t| t) {
            continue;
        }
        taken[start..start + len].iter_mut().for_each(|t| *t = true);
        mentions.push(StatuteMention {
            statute_id: id.to_string(),
            span: (spans[start].0, spans[start + len - 1].1),
        });
    }

    for (i, &(s, e)) in spans.iter().enumerate() {
        if taken[i] {
            continue;
        }
        if let Some(ids) = catalog.acronym_index.get(&text[s..e]) {
            for id in ids {
                mentions.push(StatuteMention {
                    statute_id: id.clone(),
                    span: (s, e),
                });
            }
        }
    }
    mentions.sort_by(|a, b| a.span.cmp(&b.span).then(a.statute_id.cmp(&b.statute_id)));
    mentions
}

/// Finds cued section numbers ("section 18.1(4)", "s. 96", "ss. 96 and 97").
/// Bare numbers without a cue are ignored. Plural cues expand over lists
/// joined by commas, "and" or "or". Sections are returned lowercase.
pub fn detect_section_numbers(text: &str) -> Vec<(String, (usize, usize))> {
    let mut found = Vec::new();
    for caps in SECTION_CUE_RE.captures_iter(text) {
        let cue = caps[1].to_ascii_lowercase();
        let plural = matches!(cue.as_str(), "sections" | "subsections" | "ss.");
        let list = caps.get(2).unwrap();
        for m in SECTION_NUMBER_RE.find_iter(list.as_str()) {
            let (s, e) = (list.start() + m.start(), list.start() + m.end());
            if text[e..].chars().next().is_some_and(char::is_alphanumeric) {
                break;
            }
            found.push((m.as_str().to_lowercase(), (s, e)));
            if !plural {
                break;
            }
        }
    }
    found
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StatuteSectionRef {
    pub statute_id: String,
    pub section: String,
}

impl StatuteSectionRef {
    pub fn new(statute_id: impl Into<String>, section: impl Into<String>) -> Self {
        StatuteSectionRef {
            statute_id: statute_id.into(),
            section: section.into(),
        }
    }

    /// Single opaque term of the statute field: `statute_id#section`, lowercase.
    pub fn field_term(&self) -> String {
        format!("{}#{}", self.statute_id.to_lowercase(), self.section.to_lowercase())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassageMention {
    pub passage_index: usize,
    pub mention: StatuteMention,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PassageAnnotations {
    /// (case id, passage index) → refs, in order of first appearance in the passage.
    pub refs: BTreeMap<(String, usize), Vec<StatuteSectionRef>>,
    /// Case id → statute mentions found in its passages.
    pub mentions: BTreeMap<String, Vec<PassageMention>>,
}

impl PassageAnnotations {
    pub fn passage_refs(&self, case_id: &str, passage_index: usize) -> &[StatuteSectionRef] {
        self.refs
            .get(&(case_id.to_string(), passage_index))
            .map_or(&[], Vec::as_slice)
    }

    /// Refs of all passages of a case, deduplicated and sorted.
    pub fn case_refs(&self, case_id: &str) -> BTreeSet<StatuteSectionRef> {
        self.refs
            .range((case_id.to_string(), 0)..=(case_id.to_string(), usize::MAX))
            .flat_map(|(_, refs)| refs.iter().cloned())
            .collect()
    }

    pub fn merge(&mut self, other: PassageAnnotations) {
        self.refs.extend(other.refs);
        self.mentions.extend(other.mentions);
    }

    pub fn ref_count(&self) -> usize {
        self.refs.values().map(Vec::len).sum()
    }

    /// TSV `case_id<TAB>passage_index<TAB>statute_id<TAB>section`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for ((case_id, idx), refs) in &self.refs {
            for r in refs {
                let _ = writeln!(out, "{case_id}\t{idx}\t{}\t{}", r.statute_id, r.section);
            }
        }
        out
    }

    /// Parses the TSV written by [`Self::to_tsv`]. Mentions are not persisted.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut ann = PassageAnnotations::default();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = || Error::Format(format!("annotations line {}: malformed row", lineno + 1));
            if cols.len() != 4 {
                return Err(bad());
            }
            let idx: usize = cols[1].parse().map_err(|_| bad())?;
            if !is_section_citation_token(cols[3]) {
                return Err(bad());
            }
            ann.refs
                .entry((cols[0].to_string(), idx))
                .or_default()
                .push(StatuteSectionRef::new(cols[2], cols[3]));
        }
        Ok(ann)
    }

    /// Checks that every annotated passage exists in `collection`.
    pub fn validate(&self, collection: &Collection) -> Result<()> {
        for (case_id, idx) in self.refs.keys() {
            let ok = collection
                .cases
                .get(case_id)
                .is_some_and(|c| *idx < c.passages.len());
            if !ok {
                return Err(Error::Validation(format!(
                    "annotation refers to missing passage {case_id}:{idx}"
                )));
            }
        }
        Ok(())
    }
}

/// Attributes each section of a case to its most frequently co-occurring
/// statute (counted in passages), ties going to the smallest statute id.
pub fn map_sections_to_statutes(case: &Case, catalog: &StatuteCatalog) -> PassageAnnotations {
    let mut passage_sections: Vec<Vec<String>> = Vec::with_capacity(case.passages.len());
    let mut passage_statutes: Vec<BTreeSet<String>> = Vec::with_capacity(case.passages.len());
    let mut mentions = Vec::new();

    for p in &case.passages {
        let mut sections: Vec<String> = Vec::new();
        for (s, _) in detect_section_numbers(&p.text) {
            if !sections.contains(&s) {
                sections.push(s);
            }
        }
        let found = detect_statute_mentions(&p.text, catalog);
        passage_statutes.push(found.iter().map(|m| m.statute_id.clone()).collect());
        mentions.extend(found.into_iter().map(|mention| PassageMention {
            passage_index: p.passage_index,
            mention,
        }));
        passage_sections.push(sections);
    }

    // section → statute → number of passages with both
    let mut counts: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
    for (sections, statutes) in passage_sections.iter().zip(&passage_statutes) {
        for s in sections {
            let per_statute = counts.entry(s.as_str()).or_default();
            for t in statutes {
                *per_statute.entry(t.as_str()).or_default() += 1;
            }
        }
    }
    let assigned: BTreeMap<&str, &str> = counts
        .iter()
        .map(|(&section, per_statute)| {
            let mut best: Option<(&str, usize)> = None;
            for (&statute, &n) in per_statute {
                if best.is_none_or(|(_, m)| n > m) {
                    best = Some((statute, n));
                }
            }
            (section, best.map_or(UNKNOWN_STATUTE, |(s, _)| s))
        })
        .collect();

    let mut ann = PassageAnnotations::default();
    for (p, sections) in case.passages.iter().zip(&passage_sections) {
        if sections.is_empty() {
            continue;
        }
        let refs = sections
            .iter()
            .map(|s| StatuteSectionRef::new(assigned[s.as_str()], s.as_str()))
            .collect();
        ann.refs.insert((case.case_id.clone(), p.passage_index), refs);
    }
    if !mentions.is_empty() {
        ann.mentions.insert(case.case_id.clone(), mentions);
    }
    ann
}

/// Union of per-case attributions over the whole collection.
pub fn annotate_collection(collection: &Collection, catalog: &StatuteCatalog) -> PassageAnnotations {
    let per_case: Vec<PassageAnnotations> = collection
        .cases
        .par_iter()
        .map(|(_, case)| map_sections_to_statutes(case, catalog))
        .collect();
    let mut ann = PassageAnnotations::default();
    for a in per_case {
        ann.merge(a);
    }
    ann
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog() -> StatuteCatalog {
        StatuteCatalog::from_titles([
            "Immigration and Refugee Protection Act (S.C. 2001, c. 27)",
            "Federal Courts Act",
            "Federal Courts Rules",
            "Income Tax Act (R.S.C., 1985, c. 1) [Repealed]",
        ])
    }

    #[test]
    fn cleaning_truncates_after_keyword() {
        assert_eq!(clean_title("Income Tax Act (R.S.C., 1985, c. 1) [Repealed]"), "Income Tax Act");
        assert_eq!(clean_title("Federal Courts Rules"), "Federal Courts Rules");
        assert_eq!(clean_title("Canada Evidence"), "Canada Evidence");
        assert_eq!(clean_title("  Order Amending the Schedule "), "Order");
        assert_eq!(clean_title("Canada Labour Code Regulations, 1990"), "Canada Labour Code Regulations");
        // "Actual" is not the keyword
        assert_eq!(clean_title("Actual Facts Act"), "Actual Facts Act");
    }

    #[test]
    fn acronyms() {
        assert_eq!(make_acronym("Immigration and Refugee Protection Act").as_deref(), Some("IRPA"));
        assert_eq!(make_acronym("Federal Courts Act").as_deref(), Some("FCA"));
        assert_eq!(make_acronym("act"), None);
        assert_eq!(make_acronym("Evidence act"), None);
    }

    #[test]
    fn catalog_dedups_and_indexes() {
        let c = StatuteCatalog::from_titles([
            "Immigration and Refugee Protection Act",
            "Immigration and Refugee Protection Act (S.C. 2001, c. 27)",
            "Act",
            "",
        ]);
        assert_eq!(c.len(), 1);
        let t = &c.titles[0];
        assert_eq!(t.cleaned_title, "Immigration and Refugee Protection Act");
        assert_eq!(t.acronym.as_deref(), Some("IRPA"));
        assert_eq!(t.statute_id, "immigration-and-refugee-protection-act");
        assert!(c.acronym_index["IRPA"].contains(&t.statute_id));
        assert_eq!(
            c.title_index["immigration and refugee protection act"],
            t.statute_id
        );
    }

    #[test]
    fn title_and_acronym_mentions() {
        let c = catalog();
        let m = detect_statute_mentions("under the Immigration and Refugee Protection Act", &c);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].statute_id, "immigration-and-refugee-protection-act");
        assert_eq!(m[0].span, (10, 48));

        let m = detect_statute_mentions("IRPA s. 96", &c);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].statute_id, "immigration-and-refugee-protection-act");

        assert!(detect_statute_mentions("the irpa", &c).is_empty());
        // case-insensitive title match
        let m = detect_statute_mentions("the federal courts act applies", &c);
        assert_eq!(m[0].statute_id, "federal-courts-act");
    }

    #[test]
    fn shared_acronym_yields_one_mention_per_statute() {
        let c = catalog();
        // Federal Courts Act and Federal Courts Rules both abbreviate to FCA/FCR;
        // build a collision explicitly.
        let c2 = StatuteCatalog::from_titles(["Fisheries Control Act", "Federal Courts Act"]);
        let m = detect_statute_mentions("see FCA", &c2);
        assert_eq!(m.len(), 2);
        assert!(detect_statute_mentions("see FCR", &c).len() == 1);
    }

    #[test]
    fn longest_title_wins() {
        let c = StatuteCatalog::from_titles(["Courts Act", "Federal Courts Act"]);
        let m = detect_statute_mentions("the Federal Courts Act", &c);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].statute_id, "federal-courts-act");
    }

    #[test]
    fn section_numbers() {
        let s = detect_section_numbers("pursuant to section 18.1(4) of");
        assert_eq!(s, vec![("18.1(4)".to_string(), (20, 27))]);
        assert!(detect_section_numbers("in 1985 the applicant").is_empty());
        let s = detect_section_numbers("ss. 96 and 97");
        let secs: Vec<&str> = s.iter().map(|(x, _)| x.as_str()).collect();
        assert_eq!(secs, vec!["96", "97"]);
        assert_eq!(&"ss. 96 and 97"[s[1].1.0..s[1].1.1], "97");
        // singular cue does not expand
        let s = detect_section_numbers("s. 96 and 97");
        assert_eq!(s.len(), 1);
        let s = detect_section_numbers("Sections 5(1)(A), 7 or 12.");
        let secs: Vec<&str> = s.iter().map(|(x, _)| x.as_str()).collect();
        assert_eq!(secs, vec!["5(1)(a)", "7", "12"]);
        // "s." inside a word is not a cue
        assert!(detect_section_numbers("Acts. 12").is_empty());
        assert!(detect_section_numbers("section 12abc").is_empty());
    }

    fn case_of(passages: &[&str]) -> Case {
        Case::new("q1", passages.join("\n\n")).unwrap()
    }

    #[test]
    fn majority_statute_wins() {
        let c = catalog();
        let case = case_of(&[
            "IRPA s. 96 applies.",
            "Under the IRPA, s. 96 again.",
            "Immigration and Refugee Protection Act section 96.",
            "Federal Courts Act s. 96 mentioned.",
        ]);
        let ann = map_sections_to_statutes(&case, &c);
        assert_eq!(ann.refs.len(), 4);
        for refs in ann.refs.values() {
            assert_eq!(refs, &vec![StatuteSectionRef::new("immigration-and-refugee-protection-act", "96")]);
        }
    }

    #[test]
    fn orphan_section_is_unknown() {
        let ann = map_sections_to_statutes(&case_of(&["nothing but s. 96"]), &catalog());
        assert_eq!(ann.passage_refs("q1", 0), &[StatuteSectionRef::new(UNKNOWN_STATUTE, "96")]);
    }

    #[test]
    fn tie_goes_to_smallest_id() {
        let case = case_of(&[
            "IRPA s. 7",
            "IRPA s. 7 again",
            "Federal Courts Act s. 7",
            "Federal Courts Act s. 7 too",
        ]);
        let ann = map_sections_to_statutes(&case, &catalog());
        for refs in ann.refs.values() {
            assert_eq!(refs[0].statute_id, "federal-courts-act");
        }
    }

    #[test]
    fn tsv_roundtrip() {
        let case = case_of(&["IRPA ss. 96 and 97", "no cites", "Federal Courts Act s. 18.1(4)"]);
        let ann = map_sections_to_statutes(&case, &catalog());
        let back = PassageAnnotations::from_tsv(&ann.to_tsv()).unwrap();
        assert_eq!(back.refs, ann.refs);
        assert!(PassageAnnotations::from_tsv("a\tb\tc\n").is_err());
    }
}

//! Seeded synthetic case collections for tests and demos.
//!
//! Cases argue *issues*. An issue applies a legal test to a kind of facts
//! under one statute section, and its passages mix the vocabulary of the test
//! and of the aspect. Issues come in sibling pairs that share test and aspect
//! and differ only in the section they cite, so body text alone cannot tell
//! siblings apart. Candidate cases argue several issues, query cases raise one,
//! and a query's notice cases are the candidates arguing its issue. The
//! remaining passages recount the facts of the case in words private to it;
//! lowering `fact_share` pads them from a shared Zipf background instead.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Case, Collection, Qrels, write_qrels};
use crate::error::{Error, Result};
use crate::statutes::{clean_title, make_acronym};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub n_cases: usize,
    pub vocab_size: usize,
    /// Probability that an issue passage cites the issue's section.
    pub statute_density: f64,
    /// Defaults to a fifth of the cases.
    pub n_queries: Option<usize>,
    /// Inclusive range of passages per case.
    pub passages: (usize, usize),
    /// Inclusive range of words per passage.
    pub passage_words: (usize, usize),
    /// Inclusive range of passages spent on each issue.
    pub issue_passages: (usize, usize),
    /// Inclusive range of issues argued by a candidate case.
    pub issues_per_case: (usize, usize),
    /// Average number of candidates arguing one issue.
    pub cases_per_issue: usize,
    /// Words in each test or aspect pool.
    pub pool_words: usize,
    /// Share of issue-passage words drawn from the test and aspect pools.
    pub issue_share: f64,
    /// Size of each case's private vocabulary (party names, places, events).
    pub fact_words: usize,
    /// Share of fact-passage words drawn from the case's facts.
    pub fact_share: f64,
}

impl SyntheticConfig {
    pub fn new(seed: u64, n_cases: usize, vocab_size: usize, statute_density: f64) -> Self {
        SyntheticConfig {
            seed,
            n_cases,
            vocab_size,
            statute_density,
            n_queries: None,
            passages: (4, 20),
            passage_words: (25, 60),
            issue_passages: (2, 3),
            issues_per_case: (2, 4),
            cases_per_issue: 4,
            pool_words: 10,
            issue_share: 0.5,
            fact_words: 40,
            fact_share: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_cases < 2 {
            return Err(Error::Argument(format!("need at least 2 cases, got {}", self.n_cases)));
        }
        if !(0.0..=1.0).contains(&self.statute_density) {
            return Err(Error::Argument("statute density must be in [0, 1]".into()));
        }
        if self.vocab_size < 100 {
            return Err(Error::Argument("vocabulary must hold at least 100 words".into()));
        }
        let n_queries = self.query_count();
        if n_queries == 0 || n_queries >= self.n_cases {
            return Err(Error::Argument(format!(
                "query count {n_queries} must be in 1..{}",
                self.n_cases
            )));
        }
        let ranges = [self.passages, self.passage_words, self.issue_passages, self.issues_per_case];
        if ranges.iter().any(|&(lo, hi)| lo == 0 || lo > hi) {
            return Err(Error::Argument("ranges must satisfy 1 <= lo <= hi".into()));
        }
        for share in [self.issue_share, self.fact_share] {
            if !(0.0..=1.0).contains(&share) {
                return Err(Error::Argument("word shares must be in [0, 1]".into()));
            }
        }
        if self.fact_share > 0.0 && self.fact_words == 0 {
            return Err(Error::Argument("fact share needs a fact vocabulary".into()));
        }
        if self.cases_per_issue == 0 || self.pool_words == 0 {
            return Err(Error::Argument("cases per issue and pool words must be positive".into()));
        }
        Ok(())
    }

    pub fn query_count(&self) -> usize {
        self.n_queries.unwrap_or((self.n_cases / 5).max(1))
    }
}

/// A planted citation, named by the statute's cleaned title.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PlantedCitation {
    pub statute_title: String,
    pub section: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCollection {
    pub collection: Collection,
    /// Raw statute title lines, as a titles file would hold them.
    pub titles: Vec<String>,
    /// Issues argued by every case.
    pub issues: BTreeMap<String, BTreeSet<usize>>,
    /// Citation of each issue.
    pub issue_citations: Vec<PlantedCitation>,
    /// Citations actually written into each case.
    pub planted: BTreeMap<String, BTreeSet<PlantedCitation>>,
}

impl SyntheticCollection {
    /// Writes `cases/*.txt`, `qrels.tsv`, `queries.txt` and `titles.txt`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let cases = dir.join("cases");
        fs::create_dir_all(&cases).map_err(|e| Error::io(&cases, e))?;
        for case in self.collection.cases.values() {
            let path = cases.join(format!("{}.txt", case.case_id));
            fs::write(&path, &case.raw_text).map_err(|e| Error::io(&path, e))?;
        }
        let write = |name: &str, text: String| {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(&path, e))
        };
        write("qrels.tsv", write_qrels(&self.collection.qrels))?;
        write("queries.txt", lines(self.collection.query_ids()))?;
        write("titles.txt", lines(self.titles.iter().cloned()))?;
        Ok(())
    }
}

fn lines(items: impl IntoIterator<Item = String>) -> String {
    items.into_iter().fold(String::new(), |mut out, l| {
        let _ = writeln!(out, "{l}");
        out
    })
}

const ONSETS: [&str; 16] = [
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "t", "v", "z", "br", "tr", "gl",
];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
const CODAS: [&str; 6] = ["", "", "n", "r", "m", "k"];
const KEYWORDS: [&str; 5] = ["Act", "Act", "Act", "Regulations", "Rules"];
const JUNK: [&str; 3] = [" (S.C. 2001, c. 27)", " [Repealed]", " (R.S.C., 1985, c. F-7)"];
const PLACEHOLDERS: [&str; 2] = ["REFERENCE_SUPPRESSED", "FRAGMENT_SUPPRESSED"];

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.gen_range(2..=3);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS.choose(rng).unwrap());
        w.push_str(VOWELS.choose(rng).unwrap());
    }
    w.push_str(CODAS.choose(rng).unwrap());
    w
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

struct Issue {
    test: usize,
    aspect: usize,
    statute: usize,
    section: String,
}

struct Generator<'a> {
    cfg: &'a SyntheticConfig,
    rng: ChaCha8Rng,
    vocab: Vec<String>,
    background: WeightedIndex<f64>,
    tests: Vec<Vec<usize>>,
    aspects: Vec<Vec<usize>>,
    /// Display forms (cleaned title, optional acronym) per statute.
    statutes: Vec<(String, Option<String>)>,
    issues: Vec<Issue>,
    /// Private vocabulary of the case being written.
    facts: Vec<String>,
}

impl Generator<'_> {
    fn word(&mut self) -> String {
        let i = self.background.sample(&mut self.rng);
        self.vocab[i].clone()
    }

    fn pool_word(&mut self, issue: usize) -> String {
        let pool = if self.rng.gen_bool(0.5) {
            &self.tests[self.issues[issue].test]
        } else {
            &self.aspects[self.issues[issue].aspect]
        };
        self.vocab[*pool.choose(&mut self.rng).unwrap()].clone()
    }

    fn mention(&mut self, statute: usize) -> String {
        let (title, acronym) = self.statutes[statute].clone();
        match acronym {
            Some(a) if self.rng.gen_bool(0.4) => a,
            _ => format!("the {title}"),
        }
    }

    fn citation_sentence(&mut self, issue: usize) -> String {
        let statute = self.issues[issue].statute;
        let section = self.issues[issue].section.clone();
        let mention = self.mention(statute);
        match self.rng.gen_range(0..3) {
            0 => format!("The matter arises under section {section} of {mention}."),
            1 => format!("Counsel relied on s. {section} of {mention}."),
            _ => format!("Pursuant to {mention}, s. {section} governs this point."),
        }
    }

    fn sentences(&mut self, words: Vec<String>) -> String {
        let mut out = Vec::new();
        let mut rest = &words[..];
        while !rest.is_empty() {
            let n = self.rng.gen_range(6..=14).min(rest.len());
            let (head, tail) = rest.split_at(n);
            let mut s = capitalize(&head.join(" "));
            s.push('.');
            out.push(s);
            rest = tail;
        }
        out.join(" ")
    }

    fn passage(&mut self, issue: Option<usize>) -> String {
        let cfg = self.cfg;
        let n = self.rng.gen_range(cfg.passage_words.0..=cfg.passage_words.1);
        let words: Vec<String> = (0..n)
            .map(|_| match issue {
                Some(i) if self.rng.gen_bool(cfg.issue_share) => self.pool_word(i),
                None if !self.facts.is_empty() && self.rng.gen_bool(cfg.fact_share) => {
                    self.facts.choose(&mut self.rng).unwrap().clone()
                }
                _ => self.word(),
            })
            .collect();
        let mut text = self.sentences(words);
        if self.rng.gen_bool(0.1) {
            let p = PLACEHOLDERS.choose(&mut self.rng).unwrap();
            text.push_str(&format!(" See {p}."));
        }
        if self.rng.gen_bool(0.1) {
            let year = self.rng.gen_range(1970..2022);
            text.push_str(&format!(" Decided in {year}."));
        }
        text
    }

    /// Case text plus the issues whose section it cites.
    fn case_text(&mut self, issues: &BTreeSet<usize>) -> (String, BTreeSet<usize>) {
        let cfg = self.cfg;
        // two pseudo-words have at least four vowels, the shared vocabulary at most three
        self.facts = (0..cfg.fact_words)
            .map(|_| format!("{}{}", pseudo_word(&mut self.rng), pseudo_word(&mut self.rng)))
            .collect();
        let mut slots: Vec<Option<usize>> = Vec::new();
        for &issue in issues {
            let n = self.rng.gen_range(cfg.issue_passages.0..=cfg.issue_passages.1);
            slots.extend(std::iter::repeat_n(Some(issue), n));
        }
        let n = self.rng.gen_range(cfg.passages.0..=cfg.passages.1).max(slots.len());
        slots.resize(n, None);
        slots.shuffle(&mut self.rng);

        let mut cited = BTreeSet::new();
        let mut paragraphs = Vec::with_capacity(n);
        for (i, slot) in slots.into_iter().enumerate() {
            let mut text = self.passage(slot);
            if let Some(issue) = slot
                && self.rng.gen_bool(cfg.statute_density)
            {
                text.push(' ');
                text.push_str(&self.citation_sentence(issue));
                cited.insert(issue);
            }
            paragraphs.push(format!("[{}] {text}", i + 1));
        }
        let sep = if self.rng.gen_bool(0.5) { "\n" } else { "\n\n" };
        (paragraphs.join(sep), cited)
    }
}

/// Generates a collection with the default shape for `n_cases` cases.
pub fn generate_synthetic_collection(
    seed: u64,
    n_cases: usize,
    vocab_size: usize,
    statute_density: f64,
) -> Result<SyntheticCollection> {
    generate(&SyntheticConfig::new(seed, n_cases, vocab_size, statute_density))
}

fn make_statutes(rng: &mut ChaCha8Rng, n: usize) -> (Vec<String>, Vec<(String, Option<String>)>) {
    let mut titles = Vec::with_capacity(n);
    let mut statutes = Vec::with_capacity(n);
    let mut slugs = BTreeSet::new();
    while statutes.len() < n {
        let n_words = rng.gen_range(1..=3);
        let words: Vec<String> = (0..n_words).map(|_| capitalize(&pseudo_word(rng))).collect();
        let mut raw = format!("{} {}", words.join(" "), KEYWORDS.choose(rng).unwrap());
        if rng.gen_bool(0.3) {
            raw.push_str(JUNK.choose(rng).unwrap());
        }
        let cleaned = clean_title(&raw);
        if !slugs.insert(cleaned.to_lowercase()) {
            continue;
        }
        statutes.push((cleaned.clone(), make_acronym(&cleaned)));
        titles.push(raw);
    }
    (titles, statutes)
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticCollection> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut seen = BTreeSet::new();
    let mut vocab = Vec::with_capacity(cfg.vocab_size);
    while vocab.len() < cfg.vocab_size {
        let w = pseudo_word(&mut rng);
        if seen.insert(w.clone()) {
            vocab.push(w);
        }
    }
    let weights: Vec<f64> = (1..=vocab.len()).map(|r| 1.0 / r as f64).collect();
    let background = WeightedIndex::new(&weights).expect("positive weights");

    let n_queries = cfg.query_count();
    let n_candidates = cfg.n_cases - n_queries;
    let mean_issues = (cfg.issues_per_case.0 + cfg.issues_per_case.1) as f64 / 2.0;
    let n_issues = ((n_candidates as f64 * mean_issues / cfg.cases_per_issue as f64) as usize)
        .clamp(2, n_candidates.max(2));
    let n_cells = n_issues.div_ceil(2);
    let n_tests = (n_cells as f64).sqrt().ceil() as usize;
    let n_aspects = n_cells.div_ceil(n_tests);

    // Pools come from the less frequent half of the vocabulary.
    let tail: Vec<usize> = (vocab.len() / 2..vocab.len()).collect();
    let mut pools = |n: usize| -> Vec<Vec<usize>> {
        (0..n)
            .map(|_| tail.choose_multiple(&mut rng, cfg.pool_words.min(tail.len())).copied().collect())
            .collect()
    };
    let tests = pools(n_tests);
    let aspects = pools(n_aspects);

    let n_statutes = n_tests.max(3);
    let (titles, statutes) = make_statutes(&mut rng, n_statutes);

    let mut used_sections = BTreeSet::new();
    let mut issues = Vec::with_capacity(n_issues);
    for i in 0..n_issues {
        let cell = i / 2;
        let test = cell / n_aspects;
        let statute = if i % 2 == 0 {
            test % n_statutes
        } else {
            rng.gen_range(0..n_statutes)
        };
        let section = loop {
            let base = rng.gen_range(1..400);
            let s = match rng.gen_range(0..10) {
                0..=5 => base.to_string(),
                6..=8 => format!("{base}({})", rng.gen_range(1..6)),
                _ => format!("{base}.1"),
            };
            if used_sections.insert((statute, s.clone())) {
                break s;
            }
        };
        issues.push(Issue {
            test,
            aspect: cell % n_aspects,
            statute,
            section,
        });
    }

    // Every issue is argued by at least one candidate.
    let mut first: Vec<usize> = (0..n_candidates).map(|i| i % n_issues).collect();
    first.shuffle(&mut rng);
    let mut roles: Vec<(bool, BTreeSet<usize>)> = Vec::with_capacity(cfg.n_cases);
    for f in first {
        let k = rng.gen_range(cfg.issues_per_case.0..=cfg.issues_per_case.1).min(n_issues);
        let mut set = BTreeSet::from([f]);
        while set.len() < k {
            set.insert(rng.gen_range(0..n_issues));
        }
        roles.push((false, set));
    }
    for _ in 0..n_queries {
        roles.push((true, BTreeSet::from([rng.gen_range(0..n_issues)])));
    }
    roles.shuffle(&mut rng);

    let mut generator = Generator {
        cfg,
        rng,
        vocab,
        background,
        tests,
        aspects,
        statutes,
        issues,
        facts: Vec::new(),
    };

    let width = cfg.n_cases.to_string().len().max(4);
    let mut cases = Vec::with_capacity(cfg.n_cases);
    let mut issue_of = BTreeMap::new();
    let mut planted = BTreeMap::new();
    let mut by_issue: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    let mut queries = Vec::new();
    for (n, (is_query, set)) in roles.into_iter().enumerate() {
        let id = format!("case{:0width$}", n + 1);
        let (text, cited) = generator.case_text(&set);
        cases.push(Case::new(id.clone(), text)?);
        let citations: BTreeSet<PlantedCitation> = cited
            .into_iter()
            .map(|i| PlantedCitation {
                statute_title: generator.statutes[generator.issues[i].statute].0.clone(),
                section: generator.issues[i].section.clone(),
            })
            .collect();
        planted.insert(id.clone(), citations);
        if is_query {
            queries.push((id.clone(), *set.first().unwrap()));
        } else {
            for &i in &set {
                by_issue.entry(i).or_default().insert(id.clone());
            }
        }
        issue_of.insert(id, set);
    }

    let qrels: Qrels = queries
        .into_iter()
        .map(|(q, issue)| (q, by_issue.get(&issue).cloned().unwrap_or_default()))
        .collect();
    let issue_citations = generator
        .issues
        .iter()
        .map(|i| PlantedCitation {
            statute_title: generator.statutes[i.statute].0.clone(),
            section: i.section.clone(),
        })
        .collect();
    let collection = Collection::from_cases(cases, qrels, None)?;
    Ok(SyntheticCollection {
        collection,
        titles,
        issues: issue_of,
        issue_citations,
        planted,
    })
}

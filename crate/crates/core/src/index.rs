//! Two-field inverted index over retrieval units (whole cases or passages).
//!
//! The body field holds normalized text terms. The statute field holds one
//! opaque `statute_id#section` term per attributed section.
//!
//! On-disk layout is described in `docs/index-format.md`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Collection;
use crate::error::{Error, Result};
use crate::statutes::PassageAnnotations;
use crate::textproc::{Analyzer, PipelineConfig};

pub const INDEX_MAGIC: &[u8; 16] = b"LEXCOURT-IDX v1\n";
const MAGIC_PREFIX: &[u8] = b"LEXCOURT-IDX v";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Document,
    Passage,
}

impl std::str::FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "doc" | "document" => Ok(Granularity::Document),
            "passage" => Ok(Granularity::Passage),
            other => Err(Error::Argument(format!("unknown granularity {other:?}"))),
        }
    }
}

impl std::fmt::Display for Granularity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Granularity::Document => "document",
            Granularity::Passage => "passage",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Body,
    Statute,
}

impl Field {
    fn slot(self) -> usize {
        match self {
            Field::Body => 0,
            Field::Statute => 1,
        }
    }
}

impl std::str::FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "body" => Ok(Field::Body),
            "statute" => Ok(Field::Statute),
            other => Err(Error::Argument(format!("unknown field {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrievalUnit {
    pub unit_id: u32,
    pub case_id: String,
    /// `None` for document-level units.
    pub passage_index: Option<u32>,
    /// Term counts of the body and statute fields.
    pub field_lengths: [u32; 2],
}

impl RetrievalUnit {
    pub fn field_len(&self, field: Field) -> u32 {
        self.field_lengths[field.slot()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub unit_id: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct TermEntry {
    postings: Vec<Posting>,
    ctf: u64,
}

/// Collection statistics of one field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldStats {
    /// Units with at least one term in the field.
    pub units: u32,
    pub total_terms: u64,
    pub avg_len: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct FieldIndex {
    terms: BTreeMap<String, TermEntry>,
    stats: FieldStats,
}

impl FieldIndex {
    fn add(&mut self, unit_id: u32, terms: &[String]) -> u32 {
        let mut counts: HashMap<&str, u32> = HashMap::new();
        for t in terms {
            *counts.entry(t.as_str()).or_default() += 1;
        }
        for (term, tf) in counts {
            let entry = self.terms.entry(term.to_string()).or_default();
            entry.postings.push(Posting { unit_id, tf });
            entry.ctf += tf as u64;
        }
        terms.len() as u32
    }

    fn finish(&mut self, lengths: impl Iterator<Item = u32>) {
        for entry in self.terms.values_mut() {
            entry.postings.sort_unstable_by_key(|p| p.unit_id);
        }
        let mut stats = FieldStats::default();
        for len in lengths.filter(|&l| l > 0) {
            stats.units += 1;
            stats.total_terms += len as u64;
        }
        if stats.units > 0 {
            stats.avg_len = stats.total_terms as f64 / stats.units as f64;
        }
        self.stats = stats;
    }
}

/// Immutable inverted index.
#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    granularity: Granularity,
    pipeline: PipelineConfig,
    units: Vec<RetrievalUnit>,
    /// Statute-field terms of each unit, in first-appearance order.
    statute_terms: Vec<Vec<String>>,
    fields: [FieldIndex; 2],
    case_units: BTreeMap<String, Range<u32>>,
}

struct UnitDraft {
    case_id: String,
    passage_index: Option<u32>,
    body: Vec<String>,
    statute: Vec<String>,
}

/// Indexes every case of `collection` at the requested granularity.
/// Document-level units take the union of their passages' statute refs.
pub fn build_index(
    collection: &Collection,
    annotations: Option<&PassageAnnotations>,
    granularity: Granularity,
    pipeline: &PipelineConfig,
) -> Result<Index> {
    if collection.cases.is_empty() {
        return Err(Error::Validation("cannot index an empty collection".into()));
    }
    if let Some(ann) = annotations {
        ann.validate(collection)?;
    }
    let analyzer = Analyzer::new(pipeline.clone())?;
    let cases: Vec<_> = collection.cases.values().collect();
    let drafts: Vec<Vec<UnitDraft>> = cases
        .par_iter()
        .map(|case| {
            let passage_terms: Vec<Vec<String>> = case
                .passages
                .iter()
                .map(|p| analyzer.analyze(&p.text))
                .collect();
            let passage_statutes: Vec<Vec<String>> = case
                .passages
                .iter()
                .map(|p| {
                    let refs = annotations.map_or(&[][..], |a| a.passage_refs(&case.case_id, p.passage_index));
                    let mut terms: Vec<String> = Vec::new();
                    for r in refs {
                        let t = r.field_term();
                        if !terms.contains(&t) {
                            terms.push(t);
                        }
                    }
                    terms
                })
                .collect();
            match granularity {
                Granularity::Passage => passage_terms
                    .into_iter()
                    .zip(passage_statutes)
                    .enumerate()
                    .map(|(i, (body, statute))| UnitDraft {
                        case_id: case.case_id.clone(),
                        passage_index: Some(i as u32),
                        body,
                        statute,
                    })
                    .collect(),
                Granularity::Document => {
                    let mut statute: Vec<String> = Vec::new();
                    for t in passage_statutes.into_iter().flatten() {
                        if !statute.contains(&t) {
                            statute.push(t);
                        }
                    }
                    vec![UnitDraft {
                        case_id: case.case_id.clone(),
                        passage_index: None,
                        body: passage_terms.concat(),
                        statute,
                    }]
                }
            }
        })
        .collect();

    let mut index = Index {
        granularity,
        pipeline: pipeline.clone(),
        units: Vec::new(),
        statute_terms: Vec::new(),
        fields: Default::default(),
        case_units: BTreeMap::new(),
    };
    for draft in drafts.into_iter().flatten() {
        let unit_id = index.units.len() as u32;
        let body_len = index.fields[0].add(unit_id, &draft.body);
        let statute_len = index.fields[1].add(unit_id, &draft.statute);
        index.units.push(RetrievalUnit {
            unit_id,
            case_id: draft.case_id,
            passage_index: draft.passage_index,
            field_lengths: [body_len, statute_len],
        });
        index.statute_terms.push(draft.statute);
    }
    index.finish();
    Ok(index)
}

impl Index {
    fn finish(&mut self) {
        for slot in 0..2 {
            let lengths: Vec<u32> = self.units.iter().map(|u| u.field_lengths[slot]).collect();
            self.fields[slot].finish(lengths.into_iter());
        }
        self.case_units.clear();
        for u in &self.units {
            self.case_units
                .entry(u.case_id.clone())
                .and_modify(|r| r.end = u.unit_id + 1)
                .or_insert(u.unit_id..u.unit_id + 1);
        }
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn pipeline(&self) -> &PipelineConfig {
        &self.pipeline
    }

    pub fn units(&self) -> &[RetrievalUnit] {
        &self.units
    }

    pub fn unit(&self, unit_id: u32) -> &RetrievalUnit {
        &self.units[unit_id as usize]
    }

    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    /// Unit ids belonging to a case; empty when the case is not indexed.
    pub fn units_of_case(&self, case_id: &str) -> Range<u32> {
        self.case_units.get(case_id).cloned().unwrap_or(0..0)
    }

    pub fn case_count(&self) -> usize {
        self.case_units.len()
    }

    pub fn statute_terms(&self, unit_id: u32) -> &[String] {
        &self.statute_terms[unit_id as usize]
    }

    pub fn has_statute_field(&self) -> bool {
        self.fields[1].stats.total_terms > 0
    }

    pub fn stats(&self, field: Field) -> FieldStats {
        self.fields[field.slot()].stats
    }

    /// Postings of `term`, ascending by unit id. Unknown terms yield an empty slice.
    pub fn lookup(&self, field: Field, term: &str) -> &[Posting] {
        self.fields[field.slot()]
            .terms
            .get(term)
            .map_or(&[], |e| e.postings.as_slice())
    }

    /// String-keyed variant of [`Self::lookup`]; fails on an unknown field name.
    pub fn lookup_named(&self, field: &str, term: &str) -> Result<&[Posting]> {
        Ok(self.lookup(field.parse()?, term))
    }

    pub fn df(&self, field: Field, term: &str) -> u32 {
        self.lookup(field, term).len() as u32
    }

    pub fn ctf(&self, field: Field, term: &str) -> u64 {
        self.fields[field.slot()].terms.get(term).map_or(0, |e| e.ctf)
    }

    /// Number of distinct cases whose units contain `term` in `field`.
    pub fn case_df(&self, field: Field, term: &str) -> u32 {
        let mut n = 0;
        let mut last: Option<&str> = None;
        for p in self.lookup(field, term) {
            let case = self.units[p.unit_id as usize].case_id.as_str();
            if last != Some(case) {
                n += 1;
                last = Some(case);
            }
        }
        n
    }

    pub fn terms(&self, field: Field) -> impl Iterator<Item = &str> {
        self.fields[field.slot()].terms.keys().map(String::as_str)
    }

    pub fn vocabulary_size(&self, field: Field) -> usize {
        self.fields[field.slot()].terms.len()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Index> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Index::from_bytes(&bytes)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.u8(match self.granularity {
            Granularity::Document => 0,
            Granularity::Passage => 1,
        });
        w.str(&serde_json::to_string(&self.pipeline).expect("pipeline serializes"));
        w.u32(self.units.len() as u32);
        for (u, statute) in self.units.iter().zip(&self.statute_terms) {
            w.str(&u.case_id);
            w.u32(u.passage_index.unwrap_or(u32::MAX));
            w.u32(u.field_lengths[0]);
            w.u32(u.field_lengths[1]);
            w.u32(statute.len() as u32);
            for t in statute {
                w.str(t);
            }
        }
        for field in &self.fields {
            w.u32(field.terms.len() as u32);
            for (term, entry) in &field.terms {
                w.str(term);
                w.u32(entry.postings.len() as u32);
                for p in &entry.postings {
                    w.u32(p.unit_id);
                    w.u32(p.tf);
                }
            }
        }
        let payload = w.0;
        let mut out = Vec::with_capacity(payload.len() + 24);
        out.extend_from_slice(INDEX_MAGIC);
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&payload);
        out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Index> {
        let expected = "LEXCOURT-IDX v1";
        if bytes.len() < INDEX_MAGIC.len() || &bytes[..INDEX_MAGIC.len()] != INDEX_MAGIC {
            let what = if bytes.starts_with(MAGIC_PREFIX) {
                "unsupported index version"
            } else {
                "not an index file"
            };
            return Err(Error::Format(format!("{what}; expected {expected}")));
        }
        let rest = &bytes[INDEX_MAGIC.len()..];
        let corrupt = || Error::Format(format!("corrupted or truncated index ({expected})"));
        if rest.len() < 12 {
            return Err(corrupt());
        }
        let len = u64::from_le_bytes(rest[..8].try_into().unwrap()) as usize;
        if rest.len() != 8 + len + 4 {
            return Err(corrupt());
        }
        let payload = &rest[8..8 + len];
        let crc = u32::from_le_bytes(rest[8 + len..].try_into().unwrap());
        if crc32fast::hash(payload) != crc {
            return Err(corrupt());
        }

        let mut r = Reader { buf: payload, pos: 0 };
        let granularity = match r.u8()? {
            0 => Granularity::Document,
            1 => Granularity::Passage,
            _ => return Err(corrupt()),
        };
        let pipeline: PipelineConfig = serde_json::from_str(&r.str()?).map_err(|_| corrupt())?;
        let n_units = r.u32()? as usize;
        let mut units = Vec::with_capacity(n_units.min(1 << 24));
        let mut statute_terms = Vec::with_capacity(n_units.min(1 << 24));
        for unit_id in 0..n_units {
            let case_id = r.str()?;
            let passage_index = Some(r.u32()?).filter(|&p| p != u32::MAX);
            let field_lengths = [r.u32()?, r.u32()?];
            let n = r.u32()? as usize;
            let terms = (0..n).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
            units.push(RetrievalUnit {
                unit_id: unit_id as u32,
                case_id,
                passage_index,
                field_lengths,
            });
            statute_terms.push(terms);
        }
        let mut fields: [FieldIndex; 2] = Default::default();
        for field in &mut fields {
            let n_terms = r.u32()?;
            for _ in 0..n_terms {
                let term = r.str()?;
                let n = r.u32()? as usize;
                let mut entry = TermEntry::default();
                for _ in 0..n {
                    let p = Posting {
                        unit_id: r.u32()?,
                        tf: r.u32()?,
                    };
                    if p.unit_id as usize >= n_units || p.tf == 0 {
                        return Err(corrupt());
                    }
                    entry.ctf += p.tf as u64;
                    entry.postings.push(p);
                }
                field.terms.insert(term, entry);
            }
        }
        if r.pos != payload.len() {
            return Err(corrupt());
        }
        let mut index = Index {
            granularity,
            pipeline,
            units,
            statute_terms,
            fields,
            case_units: BTreeMap::new(),
        };
        index.finish();
        Ok(index)
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Format("truncated index payload".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Format("invalid UTF-8 in index".into()))
    }
}

//! Document model and streaming ingestion of pre-extracted legal texts.
//!
//! Input is line-delimited JSON, one [`RawDocument`] per line. Reading is
//! single pass: [`DocumentReader`] holds one line at a time, plus the id set
//! when duplicate detection is enabled.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::BufRead;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Kind of legal text a document was extracted as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DocKind {
    Notice,
    Rule,
    Transcript,
    Ruling,
    #[default]
    Other,
}

impl DocKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DocKind::Notice => "notice",
            DocKind::Rule => "rule",
            DocKind::Transcript => "transcript",
            DocKind::Ruling => "ruling",
            DocKind::Other => "other",
        }
    }

    /// Parses a kind name; anything unrecognised becomes [`DocKind::Other`].
    pub fn parse_lenient(s: &str) -> Self {
        match s.trim().to_ascii_lowercase().as_str() {
            "notice" => DocKind::Notice,
            "rule" => DocKind::Rule,
            "transcript" => DocKind::Transcript,
            "ruling" => DocKind::Ruling,
            _ => DocKind::Other,
        }
    }
}

impl fmt::Display for DocKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for DocKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for DocKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        Ok(DocKind::parse_lenient(&raw))
    }
}

/// One source legal text with its provenance metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    #[serde(default)]
    pub source: String,
    #[serde(default)]
    pub region: String,
    #[serde(default)]
    pub doc_kind: DocKind,
    #[serde(default)]
    pub language_hint: Option<String>,
    #[serde(default)]
    pub published_date: Option<NaiveDate>,
    pub text: String,
}

impl RawDocument {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        RawDocument {
            id: id.into(),
            source: String::new(),
            region: String::new(),
            doc_kind: DocKind::Other,
            language_hint: None,
            published_date: None,
            text: text.into(),
        }
    }

    pub fn with_region(mut self, region: impl Into<String>) -> Self {
        self.region = region.into();
        self
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if let Some(hint) = &self.language_hint {
            if hint.chars().count() != 2 || !hint.chars().all(|c| c.is_ascii_alphabetic()) {
                return Err(format!("language_hint `{hint}` is not a 2-letter code"));
            }
        }
        Ok(())
    }
}

/// Maximum number of skipped line numbers remembered by a lenient reader.
const MAX_RECORDED_SKIPS: usize = 1024;

/// Streaming reader over line-delimited [`RawDocument`] records.
///
/// In lenient mode malformed lines are skipped and counted. In strict mode
/// the first malformed line or repeated id ends the stream with an error.
pub struct DocumentReader<R> {
    reader: R,
    buf: String,
    line_no: usize,
    strict: bool,
    seen: Option<HashSet<String>>,
    skipped: usize,
    skipped_lines: Vec<usize>,
    done: bool,
}

impl<R: BufRead> DocumentReader<R> {
    pub fn new(reader: R, strict: bool) -> Self {
        DocumentReader {
            reader,
            buf: String::new(),
            line_no: 0,
            strict,
            seen: strict.then(HashSet::new),
            skipped: 0,
            skipped_lines: Vec::new(),
            done: false,
        }
    }

    /// Number of malformed lines skipped so far (lenient mode only).
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// Line numbers (1-based) of the first skipped records.
    pub fn skipped_lines(&self) -> &[usize] {
        &self.skipped_lines
    }

    fn parse_line(&mut self) -> Option<Result<RawDocument>> {
        let line = self.buf.trim_end_matches(['\n', '\r']);
        if line.trim().is_empty() {
            return None;
        }
        let parsed = serde_json::from_str::<RawDocument>(line)
            .map_err(|e| e.to_string())
            .and_then(|doc| doc.validate().map(|_| doc));
        match parsed {
            Ok(doc) => {
                if let Some(seen) = self.seen.as_mut() {
                    if !seen.insert(doc.id.clone()) {
                        return Some(Err(Error::DuplicateId(doc.id)));
                    }
                }
                Some(Ok(doc))
            }
            Err(reason) => {
                let err = Error::MalformedRecord {
                    line: self.line_no,
                    reason,
                };
                if self.strict {
                    Some(Err(err))
                } else {
                    log::warn!("skipping {err}");
                    self.skipped += 1;
                    if self.skipped_lines.len() < MAX_RECORDED_SKIPS {
                        self.skipped_lines.push(self.line_no);
                    }
                    None
                }
            }
        }
    }
}

impl<R: BufRead> Iterator for DocumentReader<R> {
    type Item = Result<RawDocument>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => self.done = true,
                Ok(_) => {
                    self.line_no += 1;
                    if let Some(item) = self.parse_line() {
                        if item.is_err() {
                            self.done = true;
                        }
                        return Some(item);
                    }
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
        }
        None
    }
}

/// Convenience wrapper around [`DocumentReader::new`].
pub fn ingest_stream<R: BufRead>(reader: R, strict: bool) -> DocumentReader<R> {
    DocumentReader::new(reader, strict)
}

/// Size statistics of a document collection.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub document_count: u64,
    pub total_bytes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_tokens: Option<u64>,
    pub per_region_counts: BTreeMap<String, u64>,
}

impl CorpusStats {
    pub fn push(&mut self, doc: &RawDocument) {
        self.document_count += 1;
        self.total_bytes += doc.text.len() as u64;
        *self.per_region_counts.entry(doc.region.clone()).or_insert(0) += 1;
    }

    pub fn push_with_tokens(&mut self, doc: &RawDocument, tokens: u64) {
        self.push(doc);
        *self.total_tokens.get_or_insert(0) += tokens;
    }

    /// Combines the statistics of two shards. Associative and commutative.
    pub fn merge(mut self, other: CorpusStats) -> CorpusStats {
        self.document_count += other.document_count;
        self.total_bytes += other.total_bytes;
        self.total_tokens = match (self.total_tokens, other.total_tokens) {
            (None, None) => None,
            (a, b) => Some(a.unwrap_or(0) + b.unwrap_or(0)),
        };
        for (region, count) in other.per_region_counts {
            *self.per_region_counts.entry(region).or_insert(0) += count;
        }
        self
    }
}

pub fn compute_stats<'a, I>(docs: I) -> CorpusStats
where
    I: IntoIterator<Item = &'a RawDocument>,
{
    let mut stats = CorpusStats::default();
    for doc in docs {
        stats.push(doc);
    }
    stats
}

/// Draws `n` positions uniformly without replacement from a stream of
/// unknown length using reservoir sampling. Returns sorted indices.
pub fn reservoir_indices<I: Iterator>(items: I, n: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reservoir = Vec::with_capacity(n);
    let mut seen = 0usize;
    for (i, _) in items.enumerate() {
        seen = i + 1;
        if i < n {
            reservoir.push(i);
        } else if n > 0 {
            let j = rng.gen_range(0..=i);
            if j < n {
                reservoir[j] = i;
            }
        }
    }
    if seen < n {
        return Err(Error::InsufficientDocuments {
            requested: n,
            available: seen,
        });
    }
    reservoir.sort_unstable();
    Ok(reservoir)
}

/// Splits `docs` into `(train, validation)` with exactly `n` validation items.
/// Both halves keep input order.
pub fn split_validation<T>(docs: Vec<T>, n: usize, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    let picked = reservoir_indices(docs.iter(), n, seed)?;
    let mut train = Vec::with_capacity(docs.len() - n);
    let mut validation = Vec::with_capacity(n);
    let mut next = picked.iter().peekable();
    for (i, doc) in docs.into_iter().enumerate() {
        if next.peek() == Some(&&i) {
            next.next();
            validation.push(doc);
        } else {
            train.push(doc);
        }
    }
    Ok((train, validation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn read_all(input: &str, strict: bool) -> (Vec<Result<RawDocument>>, usize) {
        let mut reader = ingest_stream(Cursor::new(input.as_bytes()), strict);
        let items: Vec<_> = reader.by_ref().collect();
        (items, reader.skipped())
    }

    #[test]
    fn single_line_passes_through() {
        let (docs, skipped) = read_all(r#"{"id":"boe-2020-1","text":"Ley 1/2020."}"#, false);
        assert_eq!(skipped, 0);
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].as_ref().unwrap().id, "boe-2020-1");
    }

    #[test]
    fn empty_input_is_empty_stream() {
        let (docs, skipped) = read_all("", true);
        assert!(docs.is_empty());
        assert_eq!(skipped, 0);
    }

    #[test]
    fn lenient_mode_skips_and_counts() {
        let input = "{\"id\":\"a\",\"text\":\"uno\"}\n{not json\n{\"id\":\"b\",\"text\":\"dos\"}\n";
        let mut reader = ingest_stream(Cursor::new(input.as_bytes()), false);
        let docs: Vec<_> = reader.by_ref().map(|d| d.unwrap().id).collect();
        assert_eq!(docs, vec!["a", "b"]);
        assert_eq!(reader.skipped(), 1);
        assert_eq!(reader.skipped_lines(), &[2]);
    }

    #[test]
    fn strict_mode_aborts_on_malformed_line() {
        let input = "{\"id\":\"a\",\"text\":\"uno\"}\n{not json\n{\"id\":\"b\",\"text\":\"dos\"}\n";
        let (items, _) = read_all(input, true);
        assert_eq!(items.len(), 2);
        assert!(matches!(items[1], Err(Error::MalformedRecord { line: 2, .. })));
    }

    #[test]
    fn strict_mode_rejects_duplicate_ids() {
        let input = "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n";
        let (items, _) = read_all(input, true);
        assert!(matches!(&items[1], Err(Error::DuplicateId(id)) if id == "a"));
        let (items, _) = read_all(input, false);
        assert!(items.iter().all(|d| d.is_ok()));
    }

    #[test]
    fn empty_id_is_malformed() {
        let (items, _) = read_all("{\"id\":\"  \",\"text\":\"x\"}", true);
        assert!(matches!(items[0], Err(Error::MalformedRecord { .. })));
    }

    #[test]
    fn unknown_kind_maps_to_other() {
        let line = r#"{"id":"x","doc_kind":"edicto","text":"","published_date":"2021-03-04"}"#;
        let doc: RawDocument = serde_json::from_str(line).unwrap();
        assert_eq!(doc.doc_kind, DocKind::Other);
        assert_eq!(doc.published_date, NaiveDate::from_ymd_opt(2021, 3, 4));
        let doc: RawDocument =
            serde_json::from_str(r#"{"id":"x","doc_kind":"Ruling","text":""}"#).unwrap();
        assert_eq!(doc.doc_kind, DocKind::Ruling);
    }

    #[test]
    fn stats_on_two_documents() {
        let docs = vec![
            RawDocument::new("1", "ab").with_region("A"),
            RawDocument::new("2", "cde").with_region("B"),
        ];
        let stats = compute_stats(&docs);
        assert_eq!(stats.document_count, 2);
        assert_eq!(stats.total_bytes, 5);
        assert_eq!(stats.per_region_counts.get("A"), Some(&1));
        assert_eq!(stats.per_region_counts.get("B"), Some(&1));
        assert_eq!(compute_stats(&[]), CorpusStats::default());
    }

    #[test]
    fn stats_count_utf8_bytes() {
        let stats = compute_stats(&[RawDocument::new("1", "núm.")]);
        assert_eq!(stats.total_bytes, 5);
    }

    #[test]
    fn split_edge_cases() {
        let docs: Vec<u32> = (0..10).collect();
        let (train, val) = split_validation(docs.clone(), 0, 1).unwrap();
        assert_eq!(train, docs);
        assert!(val.is_empty());
        let (train, val) = split_validation(docs.clone(), 10, 1).unwrap();
        assert!(train.is_empty());
        assert_eq!(val, docs);
        assert!(matches!(
            split_validation(docs, 11, 1),
            Err(Error::InsufficientDocuments { requested: 11, available: 10 })
        ));
    }

    #[test]
    fn split_is_deterministic() {
        let docs: Vec<u32> = (0..10).collect();
        let (_, a) = split_validation(docs.clone(), 3, 7).unwrap();
        let (_, b) = split_validation(docs, 3, 7).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a, b);
    }
}

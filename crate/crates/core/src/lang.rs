//! Character n-gram language identification and the Spanish gate.
//!
//! Profiles are ranked lists of the most frequent 1..5-grams of a language,
//! compared to a document's own ranking by out-of-place distance. The
//! identifier trait lets an external model stand in for the bundled one.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::corpus::RawDocument;
use crate::error::{Error, Result};

pub const MAX_NGRAM: usize = 5;
pub const DEFAULT_TOP_K: usize = 400;
/// Language code of the gate's target language.
pub const SPANISH: &str = "es";
/// Sentinel language for documents that could not be identified.
pub const UNDETERMINED: &str = "und";

const BUNDLED_SEEDS: &[(&str, &str)] = &[
    ("ca", include_str!("../data/seeds/ca.txt")),
    ("en", include_str!("../data/seeds/en.txt")),
    ("es", include_str!("../data/seeds/es.txt")),
    ("eu", include_str!("../data/seeds/eu.txt")),
    ("fr", include_str!("../data/seeds/fr.txt")),
    ("gl", include_str!("../data/seeds/gl.txt")),
    ("pt", include_str!("../data/seeds/pt.txt")),
];

/// Ranked n-gram profile of one language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageProfile {
    pub language: String,
    pub ngram_ranks: Vec<String>,
}

impl LanguageProfile {
    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidProfile {
            language: self.language.clone(),
            reason,
        };
        if self.language.len() != 2 || !self.language.chars().all(|c| c.is_ascii_lowercase()) {
            return Err(invalid("language must be a 2-letter lowercase code".into()));
        }
        if self.ngram_ranks.len() > DEFAULT_TOP_K {
            return Err(invalid(format!(
                "{} n-grams exceed the limit of {DEFAULT_TOP_K}",
                self.ngram_ranks.len()
            )));
        }
        let mut seen = HashSet::with_capacity(self.ngram_ranks.len());
        for gram in &self.ngram_ranks {
            if !seen.insert(gram.as_str()) {
                return Err(invalid(format!("duplicate n-gram `{gram}`")));
            }
        }
        Ok(())
    }
}

/// Outcome of identifying a text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageVerdict {
    pub language: String,
    pub confidence: f64,
}

impl LanguageVerdict {
    pub fn undetermined() -> Self {
        LanguageVerdict {
            language: UNDETERMINED.to_string(),
            confidence: 0.0,
        }
    }
}

/// Anything that can label a text with a language and a confidence in [0, 1].
pub trait LanguageIdentifier: Send + Sync {
    fn identify(&self, text: &str) -> Result<LanguageVerdict>;
}

/// Counts padded character n-grams (1..=5) of the alphabetic words in `text`.
pub fn count_ngrams(text: &str) -> HashMap<String, u64> {
    let mut counts = HashMap::new();
    let lowered = text.to_lowercase();
    for word in lowered.split(|c: char| !c.is_alphabetic()) {
        if word.is_empty() {
            continue;
        }
        let padded: Vec<char> = std::iter::once('_')
            .chain(word.chars())
            .chain(std::iter::once('_'))
            .collect();
        for n in 1..=MAX_NGRAM {
            for window in padded.windows(n) {
                if window.iter().all(|&c| c == '_') {
                    continue;
                }
                *counts.entry(window.iter().collect::<String>()).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Most frequent n-grams first; ties broken lexicographically.
fn rank_ngrams(counts: HashMap<String, u64>, top_k: usize) -> Vec<String> {
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(top_k);
    ranked.into_iter().map(|(gram, _)| gram).collect()
}

pub fn build_profile(language: &str, text: &str, top_k: usize) -> Result<LanguageProfile> {
    let profile = LanguageProfile {
        language: language.to_string(),
        ngram_ranks: rank_ngrams(count_ngrams(text), top_k.min(DEFAULT_TOP_K)),
    };
    profile.validate()?;
    if profile.ngram_ranks.is_empty() {
        return Err(Error::InvalidProfile {
            language: language.to_string(),
            reason: "seed text has no alphabetic content".into(),
        });
    }
    Ok(profile)
}

/// Profiles built from the seed texts shipped with the crate
/// (es, ca, gl, eu, en, pt, fr).
pub fn bundled_profiles() -> &'static [LanguageProfile] {
    static PROFILES: OnceLock<Vec<LanguageProfile>> = OnceLock::new();
    PROFILES.get_or_init(|| {
        BUNDLED_SEEDS
            .iter()
            .map(|(lang, text)| {
                build_profile(lang, text, DEFAULT_TOP_K).expect("bundled seed text is valid")
            })
            .collect()
    })
}

/// Builds profiles from a seed directory. Each language is either a file
/// `<code>.txt` or a directory `<code>/` whose `.txt` files are concatenated
/// in name order.
pub fn profiles_from_seed_dir(dir: &Path, top_k: usize) -> Result<Vec<LanguageProfile>> {
    let mut seeds: Vec<(String, String)> = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(dir, e))?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let path = entry.path();
        if path.is_dir() {
            let lang = entry.file_name().to_string_lossy().into_owned();
            let mut files: Vec<_> = std::fs::read_dir(&path)
                .map_err(|e| Error::io(&path, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "txt"))
                .collect();
            files.sort();
            let mut text = String::new();
            for file in files {
                text.push_str(&std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?);
                text.push('\n');
            }
            seeds.push((lang, text));
        } else if path.extension().is_some_and(|x| x == "txt") {
            let lang = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            seeds.push((lang, text));
        }
    }
    seeds
        .iter()
        .map(|(lang, text)| build_profile(lang, text, top_k))
        .collect()
}

pub fn read_profiles<R: std::io::BufRead>(reader: R) -> Result<Vec<LanguageProfile>> {
    let mut profiles = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let profile: LanguageProfile = serde_json::from_str(&line)?;
        profile.validate()?;
        profiles.push(profile);
    }
    Ok(profiles)
}

/// Rank-distance identifier over a fixed set of profiles.
#[derive(Debug, Clone)]
pub struct NgramIdentifier {
    languages: Vec<String>,
    ranks: Vec<HashMap<String, usize>>,
    penalties: Vec<usize>,
}

impl NgramIdentifier {
    pub fn new(profiles: &[LanguageProfile]) -> Result<Self> {
        if profiles.len() < 2 {
            return Err(Error::NoProfiles(profiles.len()));
        }
        let mut ordered: Vec<&LanguageProfile> = profiles.iter().collect();
        ordered.sort_by(|a, b| a.language.cmp(&b.language));
        for p in &ordered {
            p.validate()?;
        }
        Ok(NgramIdentifier {
            languages: ordered.iter().map(|p| p.language.clone()).collect(),
            ranks: ordered
                .iter()
                .map(|p| {
                    p.ngram_ranks
                        .iter()
                        .enumerate()
                        .map(|(rank, gram)| (gram.clone(), rank))
                        .collect()
                })
                .collect(),
            penalties: ordered.iter().map(|p| p.ngram_ranks.len().max(1)).collect(),
        })
    }

    pub fn bundled() -> &'static NgramIdentifier {
        static IDENT: OnceLock<NgramIdentifier> = OnceLock::new();
        IDENT.get_or_init(|| NgramIdentifier::new(bundled_profiles()).expect("bundled profiles"))
    }

    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    /// Out-of-place distance from `text` to every profile, in profile order.
    pub fn distances(&self, text: &str) -> Vec<(String, u64)> {
        let doc_ranks = rank_ngrams(count_ngrams(text), DEFAULT_TOP_K);
        self.languages
            .iter()
            .zip(self.ranks.iter().zip(&self.penalties))
            .map(|(lang, (ranks, &penalty))| {
                let d: u64 = doc_ranks
                    .iter()
                    .enumerate()
                    .map(|(doc_rank, gram)| match ranks.get(gram) {
                        Some(&r) => r.abs_diff(doc_rank) as u64,
                        None => penalty as u64,
                    })
                    .sum();
                (lang.clone(), d)
            })
            .collect()
    }
}

impl LanguageIdentifier for NgramIdentifier {
    fn identify(&self, text: &str) -> Result<LanguageVerdict> {
        if text.trim().is_empty() {
            return Err(Error::EmptyText);
        }
        let mut scored = self.distances(text);
        // Stable sort keeps the alphabetical profile order on ties.
        scored.sort_by_key(|(_, d)| *d);
        let scale = self.penalties.iter().copied().max().unwrap_or(1) as f64;
        Ok(LanguageVerdict {
            language: scored[0].0.clone(),
            confidence: posterior_margin(&scored, scale),
        })
    }
}

/// Confidence of the best-ranked language: the gap between the two largest
/// posteriors of a softmax over `-distance / scale`, so that each missing
/// n-gram's worth of extra distance is one nat of evidence. Ties give 0,
/// a decisive winner approaches 1. `scored` must be sorted by distance.
fn posterior_margin(scored: &[(String, u64)], scale: f64) -> f64 {
    let best = scored[0].1;
    let weights: Vec<f64> = scored
        .iter()
        .map(|(_, d)| (-((d - best) as f64) / scale).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let margin = (weights[0] - weights[1]) / total;
    margin.clamp(0.0, 1.0)
}

/// Identifies `text` against an ad-hoc profile set.
pub fn identify_language(text: &str, profiles: &[LanguageProfile]) -> Result<LanguageVerdict> {
    if text.trim().is_empty() {
        return Err(Error::EmptyText);
    }
    NgramIdentifier::new(profiles)?.identify(text)
}

/// A document the gate turned away, with the verdict that decided it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedDocument {
    #[serde(flatten)]
    pub document: RawDocument,
    pub verdict_language: String,
    pub verdict_confidence: f64,
}

#[derive(Debug, Default)]
pub struct GateOutcome {
    pub kept: Vec<RawDocument>,
    pub rejected: Vec<RejectedDocument>,
}

/// Whether a verdict passes the Spanish gate. The threshold is strict.
pub fn passes_gate(verdict: &LanguageVerdict, threshold: f64) -> bool {
    verdict.language == SPANISH && verdict.confidence > threshold
}

/// Verdict for one document; empty text yields the undetermined sentinel.
pub fn judge(identifier: &dyn LanguageIdentifier, doc: &RawDocument) -> Result<LanguageVerdict> {
    match identifier.identify(&doc.text) {
        Err(Error::EmptyText) => Ok(LanguageVerdict::undetermined()),
        other => other,
    }
}

/// Keeps documents identified as Spanish with confidence above `threshold`.
pub fn filter_spanish<I>(
    docs: I,
    identifier: &dyn LanguageIdentifier,
    threshold: f64,
) -> Result<GateOutcome>
where
    I: IntoIterator<Item = RawDocument>,
{
    check_threshold(threshold)?;
    let mut outcome = GateOutcome::default();
    for doc in docs {
        let verdict = judge(identifier, &doc)?;
        route(&mut outcome, doc, verdict, threshold);
    }
    Ok(outcome)
}

pub(crate) fn check_threshold(threshold: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidConfig(format!(
            "threshold {threshold} is outside [0, 1]"
        )));
    }
    Ok(())
}

pub(crate) fn route(
    outcome: &mut GateOutcome,
    doc: RawDocument,
    verdict: LanguageVerdict,
    threshold: f64,
) {
    if passes_gate(&verdict, threshold) {
        outcome.kept.push(doc);
    } else {
        outcome.rejected.push(RejectedDocument {
            document: doc,
            verdict_language: verdict.language,
            verdict_confidence: verdict.confidence,
        });
    }
}

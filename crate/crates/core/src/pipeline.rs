//! Manifest-driven end-to-end run: ingest, then the configured stages in
//! order, each stage's stream written to the output directory along with a
//! summary of counts.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chunk::{chunk_document, Chunk, DEFAULT_MAX_TOKENS};
use crate::clean::{clean_text, CleanPolicy};
use crate::corpus::{compute_stats, ingest_stream, CorpusStats, RawDocument};
use crate::error::{Error, Result};
use crate::io::{create_output, open_input, write_jsonl};
use crate::lang::{self, GateOutcome, LanguageIdentifier, NgramIdentifier};
use crate::mask::{mask_chunk, MaskingConfig, MlmExample};
use crate::tokenizer::{Tokenizer, WordPieceTokenizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    FilterLang,
    Clean,
    Chunk,
    Mask,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::FilterLang => "filter-lang",
            Stage::Clean => "clean",
            Stage::Chunk => "chunk",
            Stage::Mask => "mask",
        }
    }

    fn works_on_documents(self) -> bool {
        matches!(self, Stage::FilterLang | Stage::Clean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterLangConfig {
    pub threshold: f64,
    /// Profile file (line-delimited); the bundled profiles when absent.
    pub profiles: Option<PathBuf>,
}

impl Default for FilterLangConfig {
    fn default() -> Self {
        FilterLangConfig {
            threshold: 0.95,
            profiles: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChunkConfig {
    pub max_tokens: usize,
    /// Vocabulary file; the bundled vocabulary when absent.
    pub tokenizer: Option<PathBuf>,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        ChunkConfig {
            max_tokens: DEFAULT_MAX_TOKENS,
            tokenizer: None,
        }
    }
}

fn default_seed() -> u64 {
    42
}

/// Description of a run. Relative paths resolve against the manifest's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineManifest {
    pub input_path: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub stages: Vec<Stage>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub filter_lang: FilterLangConfig,
    #[serde(default)]
    pub clean: CleanPolicy,
    #[serde(default)]
    pub chunk: ChunkConfig,
    /// The run's `seed` replaces `mask.seed`.
    #[serde(default)]
    pub mask: MaskingConfig,
}

impl PipelineManifest {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Manifest(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest = Self::from_toml_str(&text)?;
        if let Some(base) = path.parent() {
            manifest.resolve_relative_to(base);
        }
        Ok(manifest)
    }

    pub fn resolve_relative_to(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.input_path);
        fix(&mut self.output_dir);
        if let Some(p) = self.filter_lang.profiles.as_mut() {
            fix(p);
        }
        if let Some(p) = self.chunk.tokenizer.as_mut() {
            fix(p);
        }
    }

    /// Checks stage order: document stages precede chunking, chunking
    /// precedes masking, clean precedes chunk, no stage repeats.
    pub fn validate(&self) -> Result<()> {
        let pos = |s: Stage| self.stages.iter().position(|&x| x == s);
        for (i, s) in self.stages.iter().enumerate() {
            if self.stages[..i].contains(s) {
                return Err(Error::Manifest(format!("stage `{}` listed twice", s.name())));
            }
        }
        if let Some(chunk) = pos(Stage::Chunk) {
            if let Some(bad) = self.stages[chunk..].iter().find(|s| s.works_on_documents()) {
                return Err(Error::Manifest(format!(
                    "stage `{}` must run before `chunk`",
                    bad.name()
                )));
            }
        }
        if let Some(mask) = pos(Stage::Mask) {
            if !pos(Stage::Chunk).is_some_and(|c| c < mask) {
                return Err(Error::Manifest("`mask` requires an earlier `chunk` stage".into()));
            }
        }
        lang::check_threshold(self.filter_lang.threshold)?;
        let mask = MaskingConfig {
            seed: self.seed,
            ..self.mask
        };
        mask.validate()?;
        Ok(())
    }
}

/// Per-stage counts. For every stage `items_in = passed + rejected`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: String,
    pub items_in: u64,
    pub passed: u64,
    pub rejected: u64,
    pub items_out: u64,
    pub output_file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejected_file: Option<String>,
}

impl StageSummary {
    pub fn is_balanced(&self) -> bool {
        self.items_in == self.passed + self.rejected
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub documents_read: u64,
    pub malformed_skipped: u64,
    pub stages: Vec<StageSummary>,
    pub stats_before: CorpusStats,
    pub stats_after: CorpusStats,
    pub final_output: String,
}

enum Stream {
    Documents(Vec<RawDocument>),
    Chunks(Vec<Chunk>),
    Examples,
}

struct Runner<'a> {
    manifest: &'a PipelineManifest,
    tokenizer: Option<WordPieceTokenizer>,
    identifier: Option<NgramIdentifier>,
}

impl Runner<'_> {
    fn tokenizer(&self) -> &dyn Tokenizer {
        match &self.tokenizer {
            Some(t) => t,
            None => WordPieceTokenizer::bundled(),
        }
    }

    fn identifier(&self) -> &dyn LanguageIdentifier {
        match &self.identifier {
            Some(i) => i,
            None => NgramIdentifier::bundled(),
        }
    }

    fn file_name(index: usize, stage: &str, suffix: &str) -> String {
        format!("{index:02}-{stage}{suffix}.jsonl")
    }

    fn write<T: Serialize>(&self, name: &str, items: &[T]) -> Result<()> {
        let path = self.manifest.output_dir.join(name);
        write_jsonl(create_output(&path)?, items)?;
        Ok(())
    }

    fn run_stage(&self, index: usize, stage: Stage, input: Stream) -> Result<(Stream, StageSummary)> {
        let out_name = Self::file_name(index, stage.name(), "");
        match (stage, input) {
            (Stage::FilterLang, Stream::Documents(docs)) => {
                let threshold = self.manifest.filter_lang.threshold;
                let ident = self.identifier();
                let verdicts: Vec<_> = docs
                    .par_iter()
                    .map(|d| lang::judge(ident, d))
                    .collect::<Result<_>>()?;
                let items_in = docs.len() as u64;
                let mut outcome = GateOutcome::default();
                for (doc, verdict) in docs.into_iter().zip(verdicts) {
                    lang::route(&mut outcome, doc, verdict, threshold);
                }
                let rejected_name = Self::file_name(index, stage.name(), ".rejected");
                self.write(&out_name, &outcome.kept)?;
                self.write(&rejected_name, &outcome.rejected)?;
                let summary = StageSummary {
                    stage: stage.name().into(),
                    items_in,
                    passed: outcome.kept.len() as u64,
                    rejected: outcome.rejected.len() as u64,
                    items_out: outcome.kept.len() as u64,
                    output_file: out_name,
                    rejected_file: Some(rejected_name),
                };
                Ok((Stream::Documents(outcome.kept), summary))
            }
            (Stage::Clean, Stream::Documents(mut docs)) => {
                let policy = self.manifest.clean;
                docs.par_iter_mut()
                    .for_each(|d| d.text = clean_text(&d.text, &policy));
                self.write(&out_name, &docs)?;
                let n = docs.len() as u64;
                let summary = StageSummary {
                    stage: stage.name().into(),
                    items_in: n,
                    passed: n,
                    rejected: 0,
                    items_out: n,
                    output_file: out_name,
                    rejected_file: None,
                };
                Ok((Stream::Documents(docs), summary))
            }
            (Stage::Chunk, Stream::Documents(docs)) => {
                let tokenizer = self.tokenizer();
                let max_tokens = self.manifest.chunk.max_tokens;
                let per_doc: Vec<Vec<Chunk>> = docs
                    .par_iter()
                    .map(|d| chunk_document(d, tokenizer, max_tokens))
                    .collect::<Result<_>>()?;
                let passed = per_doc.iter().filter(|c| !c.is_empty()).count() as u64;
                let chunks: Vec<Chunk> = per_doc.into_iter().flatten().collect();
                let records: Vec<_> = chunks.iter().map(Chunk::record).collect();
                self.write(&out_name, &records)?;
                let summary = StageSummary {
                    stage: stage.name().into(),
                    items_in: docs.len() as u64,
                    passed,
                    rejected: docs.len() as u64 - passed,
                    items_out: chunks.len() as u64,
                    output_file: out_name,
                    rejected_file: None,
                };
                Ok((Stream::Chunks(chunks), summary))
            }
            (Stage::Mask, Stream::Chunks(chunks)) => {
                let tokenizer = self.tokenizer();
                let config = MaskingConfig {
                    seed: self.manifest.seed,
                    ..self.manifest.mask
                };
                let examples: Vec<MlmExample> = chunks
                    .par_iter()
                    .map(|c| mask_chunk(c, &config, tokenizer))
                    .collect::<Result<_>>()?;
                self.write(&out_name, &examples)?;
                let n = examples.len() as u64;
                let summary = StageSummary {
                    stage: stage.name().into(),
                    items_in: chunks.len() as u64,
                    passed: n,
                    rejected: chunks.len() as u64 - n,
                    items_out: n,
                    output_file: out_name,
                    rejected_file: None,
                };
                Ok((Stream::Examples, summary))
            }
            (stage, _) => Err(Error::Manifest(format!(
                "stage `{}` received the wrong kind of input",
                stage.name()
            ))),
        }
    }
}

/// Executes `manifest` on a pool of `jobs` threads (0 = one per core).
pub fn run_pipeline(manifest: &PipelineManifest, jobs: usize) -> Result<RunSummary> {
    manifest.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    pool.install(|| run_in_pool(manifest))
}

fn run_in_pool(manifest: &PipelineManifest) -> Result<RunSummary> {
    let runner = Runner {
        manifest,
        tokenizer: manifest
            .chunk
            .tokenizer
            .as_deref()
            .map(WordPieceTokenizer::from_file)
            .transpose()
            .map_err(|e| e.in_stage("chunk"))?,
        identifier: manifest
            .filter_lang
            .profiles
            .as_deref()
            .map(|p| {
                lang::read_profiles(open_input(p)?).and_then(|profiles| NgramIdentifier::new(&profiles))
            })
            .transpose()
            .map_err(|e| e.in_stage("filter-lang"))?,
    };
    std::fs::create_dir_all(&manifest.output_dir)
        .map_err(|e| Error::io(&manifest.output_dir, e))?;

    let mut reader = ingest_stream(open_input(&manifest.input_path)?, manifest.strict);
    let docs: Vec<RawDocument> = reader
        .by_ref()
        .collect::<Result<_>>()
        .map_err(|e| e.in_stage("ingest"))?;
    let stats_before = compute_stats(&docs);
    let documents_read = docs.len() as u64;
    let malformed_skipped = reader.skipped() as u64;

    let mut stream = Stream::Documents(docs);
    let mut stages = Vec::new();
    let mut stats_after = stats_before.clone();
    let mut final_output = Runner::file_name(0, "ingest", "");
    if manifest.stages.is_empty() {
        if let Stream::Documents(docs) = &stream {
            runner.write(&final_output, docs)?;
        }
    }
    for (i, &stage) in manifest.stages.iter().enumerate() {
        log::info!("running stage {}", stage.name());
        let (next, summary) = runner
            .run_stage(i + 1, stage, stream)
            .map_err(|e| e.in_stage(stage.name()))?;
        if let Stream::Documents(docs) = &next {
            stats_after = compute_stats(docs);
        }
        if let Stream::Chunks(chunks) = &next {
            stats_after.total_tokens = Some(chunks.iter().map(|c| c.token_count as u64).sum());
        }
        final_output = summary.output_file.clone();
        stages.push(summary);
        stream = next;
    }

    let summary = RunSummary {
        seed: manifest.seed,
        documents_read,
        malformed_skipped,
        stages,
        stats_before,
        stats_after,
        final_output,
    };
    let summary_path = manifest.output_dir.join("summary.json");
    let mut out = create_output(&summary_path)?;
    serde_json::to_writer_pretty(&mut out, &summary)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(summary)
}

//! Corpus construction and MLM dataset preparation for domain-adaptive
//! pretraining on Spanish legal text.
//!
//! The pipeline runs ingest, language gate, cleaning, sentence chunking and
//! whole-word masking over line-delimited JSON documents. Alongside it sit
//! the warmup + cosine learning-rate schedule and the benchmark scorer
//! (F1, max-F1 and F1-vs-epochs area).

pub mod chunk;
pub mod clean;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod io;
pub mod lang;
pub mod mask;
pub mod pipeline;
pub mod schedule;
pub mod sentence;
pub mod tokenizer;

pub use chunk::{chunk_document, pack_chunks, Chunk, ChunkRecord};
pub use clean::{clean_text, CleanPolicy};
pub use corpus::{compute_stats, ingest_stream, split_validation, CorpusStats, DocKind, RawDocument};
pub use error::{Error, Result};
pub use eval::{build_report, curve_auc, f1_scores, max_f1, Averaging, BenchmarkReport, LearningCurve, PredictionRecord};
pub use lang::{filter_spanish, identify_language, LanguageIdentifier, LanguageProfile, LanguageVerdict, NgramIdentifier};
pub use mask::{apply_mask, mask_chunk, select_words, MaskingConfig, MlmExample};
pub use pipeline::{run_pipeline, PipelineManifest, RunSummary, Stage};
pub use schedule::{effective_batch, emit_schedule, lr_at, TrainConfig};
pub use sentence::split_sentences;
pub use tokenizer::{Token, TokenId, Tokenizer, WordPieceTokenizer};

//! Greedy sentence packing into token-budgeted chunks.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::corpus::RawDocument;
use crate::error::{Error, Result};
use crate::sentence::split_sentences;
use crate::tokenizer::{Token, TokenId, Tokenizer};

pub const DEFAULT_MAX_TOKENS: usize = 512;

/// Serialized form of a chunk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkRecord {
    pub doc_id: String,
    pub seq: usize,
    pub text: String,
    pub token_count: usize,
}

/// A packed training unit with its tokens and word layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chunk {
    pub doc_id: String,
    pub seq: usize,
    pub text: String,
    pub token_count: usize,
    pub token_ids: Vec<TokenId>,
    /// One range per word; together they partition `0..token_count`.
    pub word_boundaries: Vec<Range<usize>>,
}

/// Groups token positions into words. The first token always opens a word.
pub fn word_boundaries(tokens: &[Token]) -> Vec<Range<usize>> {
    let mut words = Vec::new();
    let mut start = 0;
    for (i, tok) in tokens.iter().enumerate().skip(1) {
        if tok.is_word_start {
            words.push(start..i);
            start = i;
        }
    }
    if !tokens.is_empty() {
        words.push(start..tokens.len());
    }
    words
}

impl Chunk {
    fn from_tokens(doc_id: &str, seq: usize, text: String, tokens: &[Token]) -> Self {
        Chunk {
            doc_id: doc_id.to_string(),
            seq,
            text,
            token_count: tokens.len(),
            token_ids: tokens.iter().map(|t| t.id).collect(),
            word_boundaries: word_boundaries(tokens),
        }
    }

    pub fn record(&self) -> ChunkRecord {
        ChunkRecord {
            doc_id: self.doc_id.clone(),
            seq: self.seq,
            text: self.text.clone(),
            token_count: self.token_count,
        }
    }

    /// Re-tokenizes a serialized chunk, checking the stored token count.
    pub fn rehydrate(record: ChunkRecord, tokenizer: &dyn Tokenizer) -> Result<Self> {
        let tokens = tokenizer.tokenize(&record.text).map_err(|e| Error::TokenizerFailure {
            doc_id: record.doc_id.clone(),
            sentence: record.seq,
            reason: e.0,
        })?;
        if tokens.len() != record.token_count {
            return Err(Error::InvalidConfig(format!(
                "chunk {}#{} declares {} tokens but the tokenizer produces {}",
                record.doc_id,
                record.seq,
                record.token_count,
                tokens.len()
            )));
        }
        Ok(Chunk::from_tokens(&record.doc_id, record.seq, record.text, &tokens))
    }
}

/// Content-token budget once the tokenizer's per-sequence specials are set aside.
pub fn content_budget(tokenizer: &dyn Tokenizer, max_tokens: usize) -> Result<usize> {
    let reserved = tokenizer.reserved_per_sequence();
    if max_tokens <= reserved {
        return Err(Error::InvalidConfig(format!(
            "max_tokens {max_tokens} leaves no room after {reserved} reserved special tokens"
        )));
    }
    Ok(max_tokens - reserved)
}

struct Packer<'a> {
    doc_id: &'a str,
    tokenizer: &'a dyn Tokenizer,
    budget: usize,
    chunks: Vec<Chunk>,
    current: Option<(String, Vec<Token>)>,
}

impl<'a> Packer<'a> {
    fn tokenize(&self, text: &str, sentence: usize) -> Result<Vec<Token>> {
        self.tokenizer.tokenize(text).map_err(|e| Error::TokenizerFailure {
            doc_id: self.doc_id.to_string(),
            sentence,
            reason: e.0,
        })
    }

    fn emit(&mut self, text: String, tokens: &[Token]) {
        let seq = self.chunks.len();
        self.chunks.push(Chunk::from_tokens(self.doc_id, seq, text, tokens));
    }

    fn flush(&mut self) {
        if let Some((text, tokens)) = self.current.take() {
            self.emit(text, &tokens);
        }
    }

    fn push_sentence(&mut self, sentence: &str, index: usize) -> Result<()> {
        let tokens = self.tokenize(sentence, index)?;
        if tokens.is_empty() {
            return Ok(());
        }
        if let Some((text, _)) = &self.current {
            let candidate = format!("{text} {sentence}");
            let joined = self.tokenize(&candidate, index)?;
            if joined.len() <= self.budget {
                self.current = Some((candidate, joined));
                return Ok(());
            }
            self.flush();
        }
        if tokens.len() <= self.budget {
            self.current = Some((sentence.to_string(), tokens));
        } else {
            self.hard_split(sentence, &tokens, index)?;
        }
        Ok(())
    }

    /// Cuts an oversized sentence into maximal pieces, at word ends where a
    /// word fits, otherwise at token boundaries. The last piece stays open.
    fn hard_split(&mut self, sentence: &str, tokens: &[Token], index: usize) -> Result<()> {
        let mut from = 0;
        while from < tokens.len() {
            let limit = (from + self.budget).min(tokens.len());
            let mut to = if limit == tokens.len() {
                limit
            } else {
                (from + 1..=limit)
                    .rev()
                    .find(|&i| tokens[i].is_word_start)
                    .unwrap_or(limit)
            };
            let (text, piece) = loop {
                let text = sentence[tokens[from].start..tokens[to - 1].end].to_string();
                let piece = self.tokenize(&text, index)?;
                if piece.len() <= self.budget || to == from + 1 {
                    break (text, piece);
                }
                to -= 1;
            };
            if piece.len() > self.budget {
                return Err(Error::TokenizerFailure {
                    doc_id: self.doc_id.to_string(),
                    sentence: index,
                    reason: "a single token re-tokenizes beyond the budget".into(),
                });
            }
            if to == tokens.len() {
                self.current = Some((text, piece));
            } else {
                self.emit(text, &piece);
            }
            from = to;
        }
        Ok(())
    }
}

/// Packs sentences left to right into chunks of at most `max_tokens` tokens
/// (less the tokenizer's reserved specials). Token counts always come from
/// tokenizing the whole candidate chunk text.
pub fn pack_chunks(
    doc_id: &str,
    sentences: &[String],
    tokenizer: &dyn Tokenizer,
    max_tokens: usize,
) -> Result<Vec<Chunk>> {
    let mut packer = Packer {
        doc_id,
        tokenizer,
        budget: content_budget(tokenizer, max_tokens)?,
        chunks: Vec::new(),
        current: None,
    };
    for (i, sentence) in sentences.iter().enumerate() {
        packer.push_sentence(sentence, i)?;
    }
    packer.flush();
    Ok(packer.chunks)
}

/// Splits a (cleaned) document into sentences and packs them.
pub fn chunk_document(
    doc: &RawDocument,
    tokenizer: &dyn Tokenizer,
    max_tokens: usize,
) -> Result<Vec<Chunk>> {
    pack_chunks(&doc.id, &split_sentences(&doc.text), tokenizer, max_tokens)
}

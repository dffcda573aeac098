//! Whole-word masking for MLM training examples.
//!
//! Words are drawn without replacement until the selected tokens reach
//! `ceil(mask_rate * maskable_tokens)`; every token of a selected word is
//! then independently replaced by the mask token, by a random non-special
//! token, or left as is. Each chunk gets its own RNG stream derived from
//! `(seed, doc_id, seq)`, so results do not depend on processing order.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chunk::Chunk;
use crate::error::{Error, Result};
use crate::tokenizer::{TokenId, Tokenizer};

/// Label value at positions that are not predicted.
pub const IGNORE_LABEL: i64 = -100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskingConfig {
    pub mask_rate: f64,
    pub p_mask: f64,
    pub p_random: f64,
    pub p_keep: f64,
    pub seed: u64,
}

impl Default for MaskingConfig {
    fn default() -> Self {
        MaskingConfig {
            mask_rate: 0.15,
            p_mask: 0.80,
            p_random: 0.10,
            p_keep: 0.10,
            seed: 0,
        }
    }
}

impl MaskingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mask_rate > 0.0 && self.mask_rate <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "mask_rate {} is outside (0, 1]",
                self.mask_rate
            )));
        }
        let probs = [self.p_mask, self.p_random, self.p_keep];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidConfig("branch probabilities must lie in [0, 1]".into()));
        }
        if (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "p_mask + p_random + p_keep = {} must equal 1",
                probs.iter().sum::<f64>()
            )));
        }
        Ok(())
    }
}

/// A masked training pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlmExample {
    pub doc_id: String,
    pub seq: usize,
    pub input_ids: Vec<TokenId>,
    /// Original id at selected positions, [`IGNORE_LABEL`] elsewhere.
    pub labels: Vec<i64>,
    #[serde(skip)]
    pub selected_word_ranges: Vec<Range<usize>>,
}

/// Which replacement a selected position received.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Mask,
    Random,
    Keep,
}

/// Deterministic RNG for one chunk.
pub fn chunk_rng(seed: u64, doc_id: &str, seq: usize) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((doc_id.len() as u64).to_le_bytes());
    hasher.update(doc_id.as_bytes());
    hasher.update((seq as u64).to_le_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// `ceil(rate * n)`, ignoring floating error below 1e-9 (0.15 * 20 is 3).
pub fn target_token_count(mask_rate: f64, maskable: usize) -> usize {
    let exact = mask_rate * maskable as f64;
    ((exact - 1e-9).ceil().max(0.0) as usize).min(maskable)
}

/// Words that contain no special tokens.
fn candidate_words(chunk: &Chunk, tokenizer: &dyn Tokenizer) -> Vec<Range<usize>> {
    chunk
        .word_boundaries
        .iter()
        .filter(|w| chunk.token_ids[(*w).clone()].iter().all(|&id| !tokenizer.is_special(id)))
        .cloned()
        .collect()
}

/// Picks whole words for masking. Returned ranges are in position order.
pub fn select_words<R: Rng>(
    chunk: &Chunk,
    config: &MaskingConfig,
    tokenizer: &dyn Tokenizer,
    rng: &mut R,
) -> Vec<Range<usize>> {
    let mut words = candidate_words(chunk, tokenizer);
    let maskable: usize = words.iter().map(|w| w.len()).sum();
    let target = target_token_count(config.mask_rate, maskable);
    words.shuffle(rng);
    let mut covered = 0;
    let mut picked = Vec::new();
    for word in words {
        if covered >= target {
            break;
        }
        covered += word.len();
        picked.push(word);
    }
    picked.sort_by_key(|w| w.start);
    picked
}

fn draw_branch<R: Rng>(config: &MaskingConfig, rng: &mut R) -> Branch {
    let u: f64 = rng.gen();
    if u < config.p_mask {
        Branch::Mask
    } else if u < config.p_mask + config.p_random {
        Branch::Random
    } else {
        Branch::Keep
    }
}

/// Non-special ids, the pool for random replacement.
pub fn replacement_pool(tokenizer: &dyn Tokenizer) -> Vec<TokenId> {
    (0..tokenizer.vocab_size() as TokenId)
        .filter(|&id| !tokenizer.is_special(id))
        .collect()
}

/// Applies the replacement branches to the selected positions.
pub fn apply_mask<R: Rng>(
    chunk: &Chunk,
    selection: &[Range<usize>],
    config: &MaskingConfig,
    tokenizer: &dyn Tokenizer,
    rng: &mut R,
) -> Result<MlmExample> {
    apply_mask_traced(chunk, selection, config, tokenizer, rng).map(|(ex, _)| ex)
}

/// [`apply_mask`] that also reports the branch taken at each selected position.
pub fn apply_mask_traced<R: Rng>(
    chunk: &Chunk,
    selection: &[Range<usize>],
    config: &MaskingConfig,
    tokenizer: &dyn Tokenizer,
    rng: &mut R,
) -> Result<(MlmExample, Vec<Branch>)> {
    let mut input_ids = chunk.token_ids.clone();
    let mut labels = vec![IGNORE_LABEL; input_ids.len()];
    let pool = if config.p_random > 0.0 && !selection.is_empty() {
        let pool = replacement_pool(tokenizer);
        if pool.is_empty() {
            return Err(Error::VocabularyTooSmall);
        }
        pool
    } else {
        Vec::new()
    };
    let mut branches = Vec::new();
    for range in selection {
        if range.end > input_ids.len() || range.start >= range.end {
            return Err(Error::InvalidConfig(format!(
                "selection {range:?} lies outside chunk {}#{}",
                chunk.doc_id, chunk.seq
            )));
        }
        for pos in range.clone() {
            labels[pos] = chunk.token_ids[pos] as i64;
            let branch = draw_branch(config, rng);
            match branch {
                Branch::Mask => input_ids[pos] = tokenizer.mask_token_id(),
                Branch::Random => input_ids[pos] = pool[rng.gen_range(0..pool.len())],
                Branch::Keep => {}
            }
            branches.push(branch);
        }
    }
    Ok((
        MlmExample {
            doc_id: chunk.doc_id.clone(),
            seq: chunk.seq,
            input_ids,
            labels,
            selected_word_ranges: selection.to_vec(),
        },
        branches,
    ))
}

/// Selection plus replacement on the chunk's own RNG stream.
pub fn mask_chunk(
    chunk: &Chunk,
    config: &MaskingConfig,
    tokenizer: &dyn Tokenizer,
) -> Result<MlmExample> {
    let mut rng = chunk_rng(config.seed, &chunk.doc_id, chunk.seq);
    let selection = select_words(chunk, config, tokenizer, &mut rng);
    apply_mask(chunk, &selection, config, tokenizer, &mut rng)
}

//! Tokenizer interface used for chunk budgeting and masking, plus a small
//! deterministic word-piece tokenizer over a bundled vocabulary.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub type TokenId = u32;

/// One token and the byte span of the input it was produced from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub id: TokenId,
    pub is_word_start: bool,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("{0}")]
pub struct TokenizeError(pub String);

/// What the chunker and masker need from a tokenizer.
///
/// Implementations must tolerate concurrent read-only use.
pub trait Tokenizer: Send + Sync {
    /// Tokenizes `text`; the empty string yields no tokens.
    fn tokenize(&self, text: &str) -> Result<Vec<Token>, TokenizeError>;

    fn vocab_size(&self) -> usize;

    fn mask_token_id(&self) -> TokenId;

    /// Ids that are never selected for masking nor drawn as random
    /// replacements. Sorted ascending.
    fn special_token_ids(&self) -> &[TokenId];

    /// Special tokens added around each training sequence; they count
    /// against the chunk budget.
    fn reserved_per_sequence(&self) -> usize {
        0
    }

    fn is_special(&self, id: TokenId) -> bool {
        self.special_token_ids().binary_search(&id).is_ok()
    }
}

const BUNDLED_VOCAB: &str = include_str!("../data/vocab.txt");
const CONTINUATION: &str = "##";

/// Greedy longest-match word-piece tokenizer.
///
/// Text is split on whitespace; inside a whitespace-delimited span, runs of
/// alphanumerics form words and every other character is a word of its own.
/// Each word is matched against the vocabulary piece by piece (continuations
/// carry a `##` prefix); characters with no match become `<unk>`. Lookup is
/// lowercased. Special tokens are written `<name>` or `[NAME]` in the
/// vocabulary and are never produced from text.
#[derive(Debug, Clone)]
pub struct WordPieceTokenizer {
    vocab: Vec<String>,
    index: HashMap<String, TokenId>,
    specials: Vec<TokenId>,
    unk: TokenId,
    mask: TokenId,
    max_piece_chars: usize,
    reserved: usize,
}

fn is_special_form(token: &str) -> bool {
    token.len() > 2
        && ((token.starts_with('<') && token.ends_with('>'))
            || (token.starts_with('[') && token.ends_with(']')))
}

impl WordPieceTokenizer {
    pub fn from_vocab_lines<'a, I>(lines: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut vocab = Vec::new();
        let mut index = HashMap::new();
        for line in lines {
            let token = line.trim_end_matches(['\r', '\n']);
            if token.is_empty() {
                continue;
            }
            if index.contains_key(token) {
                return Err(Error::InvalidConfig(format!("duplicate vocabulary entry `{token}`")));
            }
            index.insert(token.to_string(), vocab.len() as TokenId);
            vocab.push(token.to_string());
        }
        let find = |names: &[&str]| names.iter().find_map(|n| index.get(*n).copied());
        let unk = find(&["<unk>", "[UNK]"])
            .ok_or_else(|| Error::InvalidConfig("vocabulary lacks an unknown token".into()))?;
        let mask = find(&["<mask>", "[MASK]"])
            .ok_or_else(|| Error::InvalidConfig("vocabulary lacks a mask token".into()))?;
        let mut specials: Vec<TokenId> = vocab
            .iter()
            .enumerate()
            .filter(|(_, t)| is_special_form(t))
            .map(|(i, _)| i as TokenId)
            .collect();
        specials.sort_unstable();
        let max_piece_chars = vocab
            .iter()
            .map(|t| t.trim_start_matches(CONTINUATION).chars().count())
            .max()
            .unwrap_or(1);
        Ok(WordPieceTokenizer {
            vocab,
            index,
            specials,
            unk,
            mask,
            max_piece_chars,
            reserved: 0,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_vocab_lines(text.lines())
    }

    /// The tokenizer over the vocabulary shipped with the crate.
    pub fn bundled() -> &'static WordPieceTokenizer {
        static TOK: OnceLock<WordPieceTokenizer> = OnceLock::new();
        TOK.get_or_init(|| {
            WordPieceTokenizer::from_vocab_lines(BUNDLED_VOCAB.lines()).expect("bundled vocab")
        })
    }

    /// Sets how many special tokens each sequence reserves in the budget.
    pub fn with_reserved(mut self, reserved: usize) -> Self {
        self.reserved = reserved;
        self
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.vocab.get(id as usize).map(String::as_str)
    }

    pub fn id_of(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    fn lookup(&self, piece: &str, continuation: bool) -> Option<TokenId> {
        let id = if continuation {
            self.index.get(&format!("{CONTINUATION}{piece}"))
        } else {
            self.index.get(piece)
        }
        .copied()?;
        (!self.specials.contains(&id)).then_some(id)
    }

    fn encode_word(&self, text: &str, offset: usize, out: &mut Vec<Token>) {
        // One lowercased char per source char keeps byte spans aligned.
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let lowered: Vec<char> = chars
            .iter()
            .map(|(_, c)| c.to_lowercase().next().unwrap_or(*c))
            .collect();
        let byte_at = |i: usize| chars.get(i).map_or(text.len(), |(b, _)| *b);
        let mut pos = 0;
        let mut piece = String::new();
        while pos < chars.len() {
            let continuation = pos > 0;
            let mut matched = None;
            let max_end = (pos + self.max_piece_chars).min(chars.len());
            for end in (pos + 1..=max_end).rev() {
                piece.clear();
                piece.extend(&lowered[pos..end]);
                if let Some(id) = self.lookup(&piece, continuation) {
                    matched = Some((id, end));
                    break;
                }
            }
            let (id, end) = matched.unwrap_or((self.unk, pos + 1));
            out.push(Token {
                id,
                is_word_start: pos == 0,
                start: offset + byte_at(pos),
                end: offset + byte_at(end),
            });
            pos = end;
        }
    }
}

impl Tokenizer for WordPieceTokenizer {
    fn tokenize(&self, text: &str) -> Result<Vec<Token>, TokenizeError> {
        let mut out = Vec::new();
        let mut word_start: Option<usize> = None;
        for (i, c) in text.char_indices() {
            if c.is_alphanumeric() {
                word_start.get_or_insert(i);
                continue;
            }
            if let Some(s) = word_start.take() {
                self.encode_word(&text[s..i], s, &mut out);
            }
            if !c.is_whitespace() {
                self.encode_word(&text[i..i + c.len_utf8()], i, &mut out);
            }
        }
        if let Some(s) = word_start {
            self.encode_word(&text[s..], s, &mut out);
        }
        Ok(out)
    }

    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn mask_token_id(&self) -> TokenId {
        self.mask
    }

    fn special_token_ids(&self) -> &[TokenId] {
        &self.specials
    }

    fn reserved_per_sequence(&self) -> usize {
        self.reserved
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok() -> &'static WordPieceTokenizer {
        WordPieceTokenizer::bundled()
    }

    #[test]
    fn empty_text_has_no_tokens() {
        assert!(tok().tokenize("").unwrap().is_empty());
        assert!(tok().tokenize(" \n ").unwrap().is_empty());
    }

    #[test]
    fn specials_are_recognised() {
        let t = tok();
        assert_eq!(t.special_token_ids(), &[0, 1, 2, 3, 4]);
        assert_eq!(t.token(t.mask_token_id()), Some("<mask>"));
        assert!(t.is_special(t.mask_token_id()));
        assert!(!t.is_special(10));
    }

    #[test]
    fn special_strings_in_text_are_not_special_tokens() {
        let toks = tok().tokenize("<mask>").unwrap();
        assert!(toks.iter().all(|t| !tok().is_special(t.id)));
    }

    #[test]
    fn words_split_into_pieces_with_word_start_flags() {
        let text = "Inconstitucionalidad de la ley.";
        let toks = tok().tokenize(text).unwrap();
        let starts: Vec<&str> = toks
            .iter()
            .filter(|t| t.is_word_start)
            .map(|t| &text[t.start..t.end])
            .collect();
        assert_eq!(starts.len(), 5);
        assert_eq!(starts[1], "de");
        assert_eq!(starts[4], ".");
        assert!(toks.len() > 5);
        // Spans tile each word exactly.
        let rebuilt: String = toks.iter().map(|t| &text[t.start..t.end]).collect();
        assert_eq!(rebuilt, "Inconstitucionalidaddelaley.");
    }

    #[test]
    fn unknown_characters_map_to_unk() {
        let toks = tok().tokenize("日本").unwrap();
        assert_eq!(toks.len(), 2);
        assert!(toks.iter().all(|t| t.id == 3));
        assert!(toks[0].is_word_start && !toks[1].is_word_start);
    }

    #[test]
    fn concatenation_stable_across_whitespace() {
        let a = tok().tokenize("Visto el art. 5").unwrap();
        let b = tok().tokenize("Se acuerda.").unwrap();
        let ab = tok().tokenize("Visto el art. 5 Se acuerda.").unwrap();
        let ids = |v: &[Token]| v.iter().map(|t| t.id).collect::<Vec<_>>();
        assert_eq!(ids(&ab), [ids(&a), ids(&b)].concat());
    }

    #[test]
    fn vocabulary_requires_mask_and_unk() {
        assert!(WordPieceTokenizer::from_vocab_lines(["<unk>", "a"]).is_err());
        assert!(WordPieceTokenizer::from_vocab_lines(["<mask>", "a"]).is_err());
        assert!(WordPieceTokenizer::from_vocab_lines(["<unk>", "<mask>", "a", "a"]).is_err());
        let t = WordPieceTokenizer::from_vocab_lines(["[UNK]", "[MASK]", "a", "##a"]).unwrap();
        let toks = t.tokenize("aaa b").unwrap();
        assert_eq!(toks.iter().map(|t| t.id).collect::<Vec<_>>(), vec![2, 3, 3, 0]);
    }
}

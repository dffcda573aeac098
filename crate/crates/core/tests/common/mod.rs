#![allow(dead_code)]

use proptest::prelude::*;

use lexcorpus::chunk::{pack_chunks, Chunk};
use lexcorpus::{Tokenizer, WordPieceTokenizer};

pub fn tok() -> &'static WordPieceTokenizer {
    WordPieceTokenizer::bundled()
}

pub const COMMON_WORDS: &[&str] = &[
    "de", "la", "el", "ley", "art", "se", "que", "por", "del", "en", "y", "los", "las",
    "resolución", "sentencia", "recurso", "tribunal", "publicación",
];

/// A lowercase word: either a frequent vocabulary word or random letters
/// (usually several word pieces).
pub fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => prop::sample::select(COMMON_WORDS).prop_map(str::to_string),
        1 => "[a-zñáéíóú]{1,12}",
        1 => "[0-9]{1,4}",
    ]
}

pub fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(word(), 1..40).prop_map(|words| {
        let mut s = words.join(" ");
        s.push('.');
        s
    })
}

pub fn sentences(max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(sentence(), 1..max)
}

pub fn ids(text: &str) -> Vec<u32> {
    tok().tokenize(text).unwrap().iter().map(|t| t.id).collect()
}

pub fn chunks_of(sentences: &[String], max_tokens: usize) -> Vec<Chunk> {
    pack_chunks("doc", sentences, tok(), max_tokens).unwrap()
}

/// `n` words of one token each followed by a period, `n + 1` tokens in all.
pub fn flat_sentence(n: usize) -> String {
    let mut s = vec!["de"; n].join(" ");
    s.push_str(" .");
    s
}

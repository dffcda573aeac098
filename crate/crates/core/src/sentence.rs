//! Rule-based sentence segmentation for Spanish legal prose.

/// Abbreviations that end in a period but do not end a sentence.
/// Compared case-insensitively.
const ABBREVIATIONS: &[&str] = &[
    "art.", "arts.", "núm.", "núms.", "nº.", "sr.", "sra.", "sres.", "sras.", "srta.", "d.",
    "dña.", "dª.", "pág.", "págs.", "excmo.", "excma.", "excmos.", "ilmo.", "ilma.", "ilmos.",
    "apdo.", "apdos.", "cap.", "disp.", "adic.", "transit.", "prov.", "vid.", "cfr.", "op.",
    "cit.", "ed.", "vol.", "etc.", "ej.", "p.ej.", "ud.", "uds.", "av.", "avda.", "c.", "ctra.",
    "dr.", "dra.", "lic.", "prof.", "sto.", "sta.", "s.a.", "s.l.", "tel.", "ss.", "fdo.",
    "rdo.", "dcho.", "izq.", "aprox.", "máx.", "mín.", "nro.", "ref.", "sec.", "boe.", "lo.",
];

fn is_sentence_final(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '…')
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | '»' | '”' | '’' | ')' | ']')
}

fn is_opening(c: char) -> bool {
    matches!(c, '¿' | '¡' | '«' | '"' | '“' | '‘' | '(' | '[' | '—' | '-')
}

/// Whether the word ending at a period is a known abbreviation, an initial
/// (`J.`), a dotted acronym (`B.O.E.`) or an ordinal (`1.º.`).
fn is_abbreviation(word: &str) -> bool {
    let word = word.trim_start_matches(|c: char| is_opening(c) || is_closing(c));
    let lower = word.to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return true;
    }
    let body = &word[..word.len() - 1];
    let mut chars = body.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        if c.is_alphabetic() && c.is_uppercase() {
            return true;
        }
    }
    // Dotted acronyms: every segment a single letter.
    if body.contains('.')
        && body
            .split('.')
            .all(|seg| seg.chars().count() == 1 && seg.chars().all(char::is_alphabetic))
    {
        return true;
    }
    body.ends_with(".º") || body.ends_with(".ª") || body.ends_with('º') || body.ends_with('ª')
}

fn split_line(line: &str, out: &mut Vec<String>) {
    let chars: Vec<(usize, char)> = line.char_indices().collect();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (_, c) = chars[i];
        if !is_sentence_final(c) {
            i += 1;
            continue;
        }
        // Absorb runs like "?!" or "..." and closing quotes/brackets.
        let mut end = i + 1;
        while end < chars.len() && (is_sentence_final(chars[end].1) || is_closing(chars[end].1)) {
            end += 1;
        }
        let ws_end = {
            let mut j = end;
            while j < chars.len() && chars[j].1.is_whitespace() {
                j += 1;
            }
            j
        };
        let boundary = ws_end > end
            && ws_end < chars.len()
            && {
                let next = chars[ws_end].1;
                next.is_uppercase() || is_opening(next)
            }
            && !(c == '.' && end == i + 1 && {
                let word_start = chars[..i]
                    .iter()
                    .rposition(|(_, ch)| ch.is_whitespace())
                    .map_or(0, |p| p + 1);
                let from = chars[word_start].0;
                let to = chars[i].0 + c.len_utf8();
                is_abbreviation(&line[from..to])
            });
        if boundary {
            let byte_end = chars.get(end).map_or(line.len(), |(b, _)| *b);
            let sentence = line[start..byte_end].trim();
            if !sentence.is_empty() {
                out.push(sentence.to_string());
            }
            start = chars[ws_end].0;
            i = ws_end;
        } else {
            i = end;
        }
    }
    let tail = line[start..].trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
}

/// Splits cleaned text into sentences. Line breaks always end a sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.split('\n') {
        split_line(line, &mut out);
    }
    out
}

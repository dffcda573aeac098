//! Whitespace normalisation and control-character removal.

use serde::{Deserialize, Serialize};

/// Which cleaning rules to apply. All rules are on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleanPolicy {
    /// Collapse horizontal whitespace runs to a single space and drop
    /// horizontal whitespace next to line breaks.
    pub collapse_spaces: bool,
    /// Collapse runs of two or more line breaks (blank lines) to one.
    pub collapse_newlines: bool,
    /// Remove control characters other than `\n` and `\t`.
    pub strip_control: bool,
    /// Trim leading and trailing whitespace.
    pub trim_ends: bool,
}

impl Default for CleanPolicy {
    fn default() -> Self {
        CleanPolicy {
            collapse_spaces: true,
            collapse_newlines: true,
            strip_control: true,
            trim_ends: true,
        }
    }
}

fn is_stripped_control(c: char) -> bool {
    c.is_control() && c != '\n' && c != '\t'
}

/// Cleans `text` according to `policy`. Total and idempotent.
pub fn clean_text(text: &str, policy: &CleanPolicy) -> String {
    let mut out = String::with_capacity(text.len());
    // Current whitespace run: its raw text and the number of line breaks in it.
    let mut run = String::new();
    let mut breaks = 0usize;

    let flush = |out: &mut String, run: &mut String, breaks: &mut usize| {
        if run.is_empty() {
            return;
        }
        if *breaks == 0 {
            if policy.collapse_spaces {
                out.push(' ');
            } else {
                out.push_str(run);
            }
        } else if *breaks >= 2 && policy.collapse_newlines {
            out.push('\n');
        } else if policy.collapse_spaces {
            out.extend(std::iter::repeat('\n').take(*breaks));
        } else {
            out.push_str(run);
        }
        run.clear();
        *breaks = 0;
    };

    for c in text.chars() {
        if policy.strip_control && is_stripped_control(c) {
            continue;
        }
        if c.is_whitespace() {
            if c == '\n' {
                breaks += 1;
            }
            run.push(c);
        } else {
            flush(&mut out, &mut run, &mut breaks);
            out.push(c);
        }
    }
    flush(&mut out, &mut run, &mut breaks);

    if policy.trim_ends {
        let trimmed = out.trim();
        if trimmed.len() != out.len() {
            return trimmed.to_string();
        }
    }
    out
}

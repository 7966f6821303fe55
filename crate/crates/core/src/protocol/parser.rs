//! Deterministic action grammar for reasoner output.
//!
//! Markers are recognised case-insensitively at the start of a line, with an
//! optional `Action:` prefix:
//!
//! ```text
//! Thought: <free text>
//! My question is: <query>
//! The answer is: <answer>
//! ```
//!
//! When several action markers occur, the last one wins. No marker at all, or
//! a marker followed by nothing, yields `Action::Malformed`.

use alloc::string::ToString;
use alloc::vec::Vec;

use super::{Action, ParsedStep};

pub const THOUGHT_MARKER: &str = "Thought:";
pub const QUERY_MARKER: &str = "My question is:";
pub const ANSWER_MARKER: &str = "The answer is:";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Marker {
    Thought,
    Query,
    Answer,
}

struct Hit {
    marker: Marker,
    /// Byte offset where the marker's content starts.
    content_start: usize,
    /// Byte offset of the start of the marker's line.
    line_start: usize,
}

fn strip_prefix_ci<'a>(s: &'a str, prefix: &str) -> Option<&'a str> {
    if s.len() >= prefix.len() && s.is_char_boundary(prefix.len()) && s[..prefix.len()].eq_ignore_ascii_case(prefix) {
        Some(&s[prefix.len()..])
    } else {
        None
    }
}

fn scan(raw: &str) -> Vec<Hit> {
    let mut hits = Vec::new();
    let mut line_start = 0;
    for line in raw.split_inclusive('\n') {
        let lead = line.len() - line.trim_start().len();
        let mut rest = &line[lead..];
        if let Some(r) = strip_prefix_ci(rest, "Action:") {
            rest = r.trim_start();
        }
        let offset_of = |r: &str| line_start + (line.len() - r.len());
        for (marker, text) in [
            (Marker::Thought, THOUGHT_MARKER),
            (Marker::Query, QUERY_MARKER),
            (Marker::Answer, ANSWER_MARKER),
        ] {
            if let Some(after) = strip_prefix_ci(rest, text) {
                hits.push(Hit { marker, content_start: offset_of(after), line_start });
                break;
            }
        }
        line_start += line.len();
    }
    hits
}

fn strip_quotes(s: &str) -> &str {
    for (open, close) in [('"', '"'), ('\u{201c}', '\u{201d}'), ('\'', '\'')] {
        if s.len() >= 2 && s.starts_with(open) && s.ends_with(close) {
            return s[open.len_utf8()..s.len() - close.len_utf8()].trim();
        }
    }
    s
}

/// Splits raw reasoner text into thought and action. Pure and total.
pub fn parse_reasoner_output(raw: &str) -> ParsedStep {
    let hits = scan(raw);
    let section_end = |i: usize| hits.get(i + 1).map_or(raw.len(), |h| h.line_start);

    let action_idx = hits.iter().rposition(|h| h.marker != Marker::Thought);
    let thought = {
        let limit = action_idx.unwrap_or(hits.len());
        hits[..limit]
            .iter()
            .rposition(|h| h.marker == Marker::Thought)
            .map(|i| raw[hits[i].content_start..section_end(i)].trim().to_string())
            .unwrap_or_default()
    };

    let action = match action_idx {
        None => Action::Malformed(raw.to_string()),
        Some(i) => {
            let text = strip_quotes(raw[hits[i].content_start..section_end(i)].trim());
            match (hits[i].marker, text.is_empty()) {
                (_, true) => Action::Malformed(raw.to_string()),
                (Marker::Query, false) => Action::Query(text.to_string()),
                (_, false) => Action::Answer(text.to_string()),
            }
        }
    };

    ParsedStep { thought, action, raw: raw.to_string() }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '\u{2019}'
}

/// Finds the first standalone option letter in an answer, as `(B)` or a bare
/// `B`/`b`. Returns its 0-based index when it is one of the first `n_options`
/// letters.
///
/// A bare lowercase `a` or uppercase `I` directly followed by another word is
/// read as English ("a zebra", "I think") and skipped.
pub fn extract_option_letter(answer_text: &str, n_options: usize) -> Option<usize> {
    let chars: Vec<char> = answer_text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_ascii_alphabetic() {
            continue;
        }
        let before = if i > 0 { Some(chars[i - 1]) } else { None };
        let after = chars.get(i + 1).copied();
        if before.is_some_and(is_word_char) || after.is_some_and(is_word_char) {
            continue;
        }
        let parenthesized = before == Some('(') && after == Some(')');
        if !parenthesized && (c == 'a' || c == 'I') {
            let next_word = chars[i + 1..].iter().find(|ch| !ch.is_whitespace());
            if after.is_some_and(char::is_whitespace) && next_word.is_some_and(|ch| ch.is_alphabetic()) {
                continue;
            }
        }
        let index = (c.to_ascii_uppercase() as u8 - b'A') as usize;
        if index < n_options {
            return Some(index);
        }
    }
    None
}

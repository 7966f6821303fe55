use alloc::string::String;
use alloc::vec::Vec;

use crate::protocol::extract_option_letter;

/// Optional last-resort mapper from free text to an option, usually backed by
/// a small model. Failures degrade to "no match".
pub trait Canonicalizer: Send + Sync {
    fn canonicalize(&self, raw: &str, options: &[String]) -> Option<usize>;
}

/// Lowercase, punctuation to spaces, collapsed whitespace.
pub fn normalize_text(text: &str) -> String {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '\'' { c } else { ' ' })
        .collect();
    let words: Vec<&str> = cleaned.split_whitespace().collect();
    words.join(" ")
}

/// Option text matching: normalized equality first, then whole-word
/// containment when exactly one option (not counting options nested inside
/// another match) occurs in the text.
pub fn match_option_text(raw: &str, options: &[String]) -> Option<usize> {
    let norm = normalize_text(raw);
    if norm.is_empty() {
        return None;
    }
    let normalized: Vec<String> = options.iter().map(|o| normalize_text(o)).collect();
    if let Some(i) = normalized.iter().position(|o| *o == norm) {
        return Some(i);
    }
    let padded = alloc::format!(" {norm} ");
    let hits: Vec<usize> = normalized
        .iter()
        .enumerate()
        .filter(|(_, o)| !o.is_empty() && padded.contains(&alloc::format!(" {o} ")))
        .map(|(i, _)| i)
        .collect();
    let maximal: Vec<usize> = hits
        .iter()
        .copied()
        .filter(|&i| !hits.iter().any(|&j| j != i && normalized[j].len() > normalized[i].len() && normalized[j].contains(&normalized[i])))
        .collect();
    match maximal.as_slice() {
        [one] => Some(*one),
        _ => None,
    }
}

/// Maps a raw prediction onto an option index, trying the option letter, then
/// option text, then the optional canonicalizer.
pub fn canonicalize_answer(raw: &str, options: &[String], fallback: Option<&dyn Canonicalizer>) -> Option<usize> {
    extract_option_letter(raw, options.len())
        .or_else(|| match_option_text(raw, options))
        .or_else(|| fallback.and_then(|c| c.canonicalize(raw, options)).filter(|&i| i < options.len()))
}

/// Text after the last "the answer is" (case-insensitive), or the whole text.
pub fn strip_answer_prefix(raw: &str) -> &str {
    let lowered = raw.to_lowercase();
    match lowered.rfind("the answer is") {
        // Lowercasing can change byte lengths for non-ASCII text; only slice
        // when the offsets are guaranteed to line up.
        Some(at) if lowered.len() == raw.len() => {
            raw[at + "the answer is".len()..].trim_start_matches([':', ' ']).trim()
        }
        _ => raw.trim(),
    }
}

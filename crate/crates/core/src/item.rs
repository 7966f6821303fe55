//! Multiple-choice question items.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

pub const MIN_OPTIONS: usize = 2;
pub const MAX_OPTIONS: usize = 26;

/// One multiple-choice visual question. The image is an opaque reference that
/// only sensors know how to resolve.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McqItem {
    pub id: String,
    pub image_ref: String,
    pub question: String,
    pub options: Vec<String>,
    pub gold_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ItemError {
    #[error("item `{id}`: expected {MIN_OPTIONS}..={MAX_OPTIONS} options, got {count}")]
    OptionCount { id: String, count: usize },
    #[error("item `{id}`: gold_index {gold} out of range for {count} options")]
    GoldOutOfRange { id: String, gold: usize, count: usize },
    #[error("item `{id}`: duplicate option text `{text}`")]
    DuplicateOption { id: String, text: String },
    #[error("item has an empty id")]
    EmptyId,
}

impl McqItem {
    pub fn validate(&self) -> Result<(), ItemError> {
        if self.id.is_empty() {
            return Err(ItemError::EmptyId);
        }
        let count = self.options.len();
        if !(MIN_OPTIONS..=MAX_OPTIONS).contains(&count) {
            return Err(ItemError::OptionCount { id: self.id.clone(), count });
        }
        if self.gold_index >= count {
            return Err(ItemError::GoldOutOfRange { id: self.id.clone(), gold: self.gold_index, count });
        }
        for (i, a) in self.options.iter().enumerate() {
            if self.options[..i].contains(a) {
                return Err(ItemError::DuplicateOption { id: self.id.clone(), text: a.clone() });
            }
        }
        Ok(())
    }

    /// "(A) first (B) second ..." on one line.
    pub fn options_line(&self) -> String {
        let mut out = String::new();
        for (i, opt) in self.options.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&format!("({}) {}", option_letter(i), opt));
        }
        out
    }
}

/// `0 -> 'A'`, `25 -> 'Z'`.
pub fn option_letter(index: usize) -> char {
    debug_assert!(index < MAX_OPTIONS);
    (b'A' + index as u8) as char
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn item(options: &[&str], gold: usize) -> McqItem {
        McqItem {
            id: "q1".into(),
            image_ref: "img".into(),
            question: "Which?".into(),
            options: options.iter().map(|s| s.to_string()).collect(),
            gold_index: gold,
            category: None,
        }
    }

    #[test]
    fn validation_rules() {
        assert!(item(&["a", "b"], 1).validate().is_ok());
        assert!(matches!(item(&["a"], 0).validate(), Err(ItemError::OptionCount { .. })));
        assert!(matches!(item(&["a", "b"], 2).validate(), Err(ItemError::GoldOutOfRange { .. })));
        assert!(matches!(item(&["a", "a"], 0).validate(), Err(ItemError::DuplicateOption { .. })));
        let many: Vec<String> = (0..27).map(|i| format!("o{i}")).collect();
        let refs: Vec<&str> = many.iter().map(|s| s.as_str()).collect();
        assert!(item(&refs, 0).validate().is_err());
    }

    #[test]
    fn options_line_format() {
        assert_eq!(item(&["one", "two", "zero"], 0).options_line(), "(A) one (B) two (C) zero");
        assert_eq!(vec![option_letter(0), option_letter(25)], vec!['A', 'Z']);
    }
}

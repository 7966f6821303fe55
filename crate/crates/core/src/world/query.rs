//! Template grammar for perception queries.
//!
//! Supported shapes (case-insensitive, trailing `?`/`.` ignored):
//!
//! ```text
//! what is in the image                  Overview
//! is there a/an N | are there any Ns    Existence
//! how many Ns ...                       Counting
//! what color|size is the N [wearing]    Property
//! is the N [wearing] <color|size>       Property (yes/no)
//! is/are the N <pose>                   Activity (yes/no)
//! what is the N doing                   Activity
//! what is <left of|right of|on|under|near> the N    Spatial
//! what is the N holding                 Spatial (holding)
//! what does the N say                   Text
//! ```
//!
//! Anything else is not a perception query. Pronoun targets ("it", "they")
//! cannot be grounded and are ambiguous.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use serde::{Deserialize, Serialize};

use super::scene::Predicate;
use super::vocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QueryCategory {
    Existence,
    Property,
    Spatial,
    Activity,
    Text,
    Counting,
    Overview,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Color,
    Size,
}

impl AttributeKind {
    pub fn name(self) -> &'static str {
        match self {
            AttributeKind::Color => "color",
            AttributeKind::Size => "size",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryArgument {
    Attribute(AttributeKind),
    AttributeIs(AttributeKind, String),
    Relation(Predicate),
    Doing,
    DoingIs(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PerceptionQuery {
    pub category: QueryCategory,
    /// Singular head noun; empty for an overview.
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argument: Option<QueryArgument>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Interpretation {
    Perception(PerceptionQuery),
    NotPerception,
    AmbiguousReferent,
}

impl PerceptionQuery {
    pub fn new(category: QueryCategory, target: &str, argument: Option<QueryArgument>) -> Self {
        Self { category, target: target.to_string(), argument }
    }

    pub fn overview() -> Self {
        Self::new(QueryCategory::Overview, "", None)
    }

    /// Canonical English form; `interpret_query` maps it back to `self`.
    pub fn to_text(&self) -> String {
        let n = self.target.as_str();
        let article = if n.starts_with(['a', 'e', 'i', 'o', 'u']) { "an" } else { "a" };
        match (&self.category, &self.argument) {
            (QueryCategory::Overview, _) => "What is in the image?".to_string(),
            (QueryCategory::Existence, _) => format!("Is there {article} {n}?"),
            (QueryCategory::Counting, _) => format!("How many {} are in the image?", plural(n)),
            (QueryCategory::Text, _) => format!("What does the {n} say?"),
            (_, Some(QueryArgument::Attribute(kind))) => {
                if *kind == AttributeKind::Color && vocab::is_person(n) {
                    format!("What color is the {n} wearing?")
                } else {
                    format!("What {} is the {n}?", kind.name())
                }
            }
            (_, Some(QueryArgument::AttributeIs(AttributeKind::Color, v))) if vocab::is_person(n) => {
                format!("Is the {n} wearing {v}?")
            }
            (_, Some(QueryArgument::AttributeIs(_, v))) => format!("Is the {n} {v}?"),
            (_, Some(QueryArgument::Relation(Predicate::Holding))) => format!("What is the {n} holding?"),
            (_, Some(QueryArgument::Relation(p))) => format!("What is {} the {n}?", p.phrase()),
            (_, Some(QueryArgument::Doing)) => format!("What is the {n} doing?"),
            (_, Some(QueryArgument::DoingIs(v))) => format!("Is the {n} {v}?"),
            (_, None) => format!("Is there {article} {n}?"),
        }
    }
}

fn plural(noun: &str) -> String {
    match noun {
        "person" => "people".to_string(),
        "man" => "men".to_string(),
        "woman" => "women".to_string(),
        "child" => "children".to_string(),
        "knife" => "knives".to_string(),
        "brush" => "brushes".to_string(),
        other => format!("{other}s"),
    }
}

const PRONOUNS: [&str; 7] = ["it", "they", "them", "this", "that", "he", "she"];
const DETERMINERS: [&str; 6] = ["the", "a", "an", "any", "this", "that"];

fn normalize(text: &str) -> Vec<String> {
    let lowered = text.trim().to_lowercase();
    let cleaned: String = lowered
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '\'' || c == ' ' { c } else { ' ' })
        .collect();
    cleaned.split_whitespace().map(str::to_string).collect()
}

enum NounPhrase {
    Noun(String),
    Pronoun,
    Invalid,
}

/// Reads a noun phrase such as "the red road sign" down to its head noun.
fn noun_phrase(words: &[String]) -> NounPhrase {
    let mut rest: Vec<&str> = words.iter().map(String::as_str).collect();
    if rest.len() == 1 && PRONOUNS.contains(&rest[0]) {
        return NounPhrase::Pronoun;
    }
    while let Some(first) = rest.first() {
        if DETERMINERS.contains(first) {
            rest.remove(0);
        } else {
            break;
        }
    }
    match rest.last() {
        None => NounPhrase::Invalid,
        Some(w) if PRONOUNS.contains(w) => NounPhrase::Pronoun,
        Some(w) => NounPhrase::Noun(vocab::singular(w).to_string()),
    }
}

fn with_noun(words: &[String], build: impl FnOnce(String) -> PerceptionQuery) -> Interpretation {
    match noun_phrase(words) {
        NounPhrase::Noun(n) => Interpretation::Perception(build(n)),
        NounPhrase::Pronoun => Interpretation::AmbiguousReferent,
        NounPhrase::Invalid => Interpretation::NotPerception,
    }
}

fn starts_with(words: &[String], prefix: &[&str]) -> bool {
    words.len() >= prefix.len() && words.iter().zip(prefix).all(|(w, p)| w == p)
}

fn attribute_value(word: &str) -> Option<(AttributeKind, &'static str)> {
    if let Some(c) = vocab::COLORS.iter().find(|c| **c == word) {
        return Some((AttributeKind::Color, c));
    }
    vocab::SIZES.iter().find(|s| **s == word).map(|s| (AttributeKind::Size, *s))
}

fn pose(word: &str) -> Option<&'static str> {
    vocab::PERSON_POSES.iter().chain(vocab::ANIMAL_POSES.iter()).find(|p| **p == word).copied()
}

const SPATIAL_PHRASES: [(&[&str], Predicate); 9] = [
    (&["to", "the", "left", "of"], Predicate::LeftOf),
    (&["left", "of"], Predicate::LeftOf),
    (&["to", "the", "right", "of"], Predicate::RightOf),
    (&["right", "of"], Predicate::RightOf),
    (&["next", "to"], Predicate::Near),
    (&["near"], Predicate::Near),
    (&["on", "top", "of"], Predicate::On),
    (&["on"], Predicate::On),
    (&["under"], Predicate::Under),
];

const PHRASE_STOPS: [&str; 12] = ["are", "is", "in", "on", "under", "near", "holding", "wearing", "with", "at", "can", "there"];

/// End of the noun phrase starting at `start`: the first stop word after it.
fn phrase_end(words: &[String], start: usize) -> usize {
    words[start..]
        .iter()
        .position(|w| PHRASE_STOPS.contains(&w.as_str()))
        .map_or(words.len(), |i| start + i)
}

/// Classifies free text against the template grammar.
pub fn interpret_query(text: &str) -> Interpretation {
    use QueryCategory::*;
    let w = normalize(text);
    let s = |range: core::ops::Range<usize>| &w[range];

    if w.is_empty() {
        return Interpretation::NotPerception;
    }
    for overview in [
        &["what", "is", "in", "the", "image"][..],
        &["what", "is", "in", "this", "image"],
        &["what", "do", "you", "see"],
        &["describe", "the", "image"],
    ] {
        if w.len() == overview.len() && starts_with(&w, overview) {
            return Interpretation::Perception(PerceptionQuery::overview());
        }
    }
    if (starts_with(&w, &["is", "there"]) || starts_with(&w, &["are", "there"])) && w.len() > 2 {
        let end = phrase_end(&w, 2);
        return with_noun(s(2..end), |n| PerceptionQuery::new(Existence, &n, None));
    }
    if starts_with(&w, &["how", "many"]) && w.len() > 2 {
        let end = phrase_end(&w, 2);
        return with_noun(s(2..end), |n| PerceptionQuery::new(Counting, &n, None));
    }
    for (word, kind) in [("color", AttributeKind::Color), ("colour", AttributeKind::Color), ("size", AttributeKind::Size)] {
        if starts_with(&w, &["what", word, "is"]) && w.len() > 3 {
            let end = if w.last().is_some_and(|x| x == "wearing") { w.len() - 1 } else { w.len() };
            if end <= 3 {
                return Interpretation::NotPerception;
            }
            return with_noun(s(3..end), |n| PerceptionQuery::new(Property, &n, Some(QueryArgument::Attribute(kind))));
        }
    }
    if (starts_with(&w, &["is", "the"]) || starts_with(&w, &["are", "the"])) && w.len() >= 4 {
        let last = w[w.len() - 1].as_str();
        let mut end = w.len() - 1;
        if end > 2 && w[end - 1] == "wearing" {
            end -= 1;
        }
        if let Some((kind, value)) = attribute_value(last) {
            return with_noun(s(1..end), |n| {
                PerceptionQuery::new(Property, &n, Some(QueryArgument::AttributeIs(kind, value.to_string())))
            });
        }
        if let Some(p) = pose(last) {
            return with_noun(s(1..w.len() - 1), |n| {
                PerceptionQuery::new(Activity, &n, Some(QueryArgument::DoingIs(p.to_string())))
            });
        }
        return Interpretation::NotPerception;
    }
    if starts_with(&w, &["what", "does"]) && w.last().is_some_and(|x| x == "say") && w.len() > 3 {
        return with_noun(s(2..w.len() - 1), |n| PerceptionQuery::new(Text, &n, None));
    }
    if starts_with(&w, &["what", "is"]) && w.len() > 3 {
        let tail = &w[2..];
        if tail.last().is_some_and(|x| x == "holding") {
            return with_noun(&tail[..tail.len() - 1], |n| {
                PerceptionQuery::new(Spatial, &n, Some(QueryArgument::Relation(Predicate::Holding)))
            });
        }
        if tail.last().is_some_and(|x| x == "doing") {
            return with_noun(&tail[..tail.len() - 1], |n| PerceptionQuery::new(Activity, &n, Some(QueryArgument::Doing)));
        }
        for (phrase, predicate) in SPATIAL_PHRASES {
            if starts_with(tail, phrase) && tail.len() > phrase.len() {
                return with_noun(&tail[phrase.len()..], |n| {
                    PerceptionQuery::new(Spatial, &n, Some(QueryArgument::Relation(predicate)))
                });
            }
        }
    }
    Interpretation::NotPerception
}

/// Every query the template grammar can express over the world vocabulary.
/// Used by property tests and by the random exploration reasoner.
pub fn all_canonical_queries() -> Vec<PerceptionQuery> {
    use QueryCategory::*;
    let mut nouns: Vec<&str> = vec![vocab::PERSON_HYPERNYM];
    nouns.extend(vocab::PERSONS);
    nouns.extend(vocab::OBJECTS);
    let mut out = vec![PerceptionQuery::overview()];
    for n in nouns {
        out.push(PerceptionQuery::new(Existence, n, None));
        out.push(PerceptionQuery::new(Counting, n, None));
        out.push(PerceptionQuery::new(Text, n, None));
        out.push(PerceptionQuery::new(Property, n, Some(QueryArgument::Attribute(AttributeKind::Color))));
        out.push(PerceptionQuery::new(Property, n, Some(QueryArgument::Attribute(AttributeKind::Size))));
        for c in vocab::COLORS {
            out.push(PerceptionQuery::new(Property, n, Some(QueryArgument::AttributeIs(AttributeKind::Color, c.into()))));
        }
        for p in Predicate::SPATIAL {
            out.push(PerceptionQuery::new(Spatial, n, Some(QueryArgument::Relation(p))));
        }
        out.push(PerceptionQuery::new(Spatial, n, Some(QueryArgument::Relation(Predicate::Holding))));
        out.push(PerceptionQuery::new(Activity, n, Some(QueryArgument::Doing)));
        for p in vocab::PERSON_POSES {
            out.push(PerceptionQuery::new(Activity, n, Some(QueryArgument::DoingIs(p.into()))));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perception(text: &str) -> PerceptionQuery {
        match interpret_query(text) {
            Interpretation::Perception(q) => q,
            other => panic!("{text:?} -> {other:?}"),
        }
    }

    #[test]
    fn taxonomy_examples() {
        assert_eq!(perception("Is there a bicycle?"), PerceptionQuery::new(QueryCategory::Existence, "bicycle", None));
        assert_eq!(
            perception("What is left of the sofa?"),
            PerceptionQuery::new(QueryCategory::Spatial, "sofa", Some(QueryArgument::Relation(Predicate::LeftOf)))
        );
        assert_eq!(
            perception("Is the mug red?"),
            PerceptionQuery::new(
                QueryCategory::Property,
                "mug",
                Some(QueryArgument::AttributeIs(AttributeKind::Color, "red".into()))
            )
        );
        assert_eq!(perception("How many cups are on the table?"), PerceptionQuery::new(QueryCategory::Counting, "cup", None));
        assert_eq!(perception("How many red cups?"), PerceptionQuery::new(QueryCategory::Counting, "cup", None));
        assert_eq!(perception("Is there a man holding a knife?"), PerceptionQuery::new(QueryCategory::Existence, "man", None));
        assert_eq!(perception("What does the road sign say?"), PerceptionQuery::new(QueryCategory::Text, "sign", None));
        assert_eq!(perception("what is in the image?"), PerceptionQuery::overview());
        assert_eq!(
            perception("What color is the man wearing?"),
            PerceptionQuery::new(QueryCategory::Property, "man", Some(QueryArgument::Attribute(AttributeKind::Color)))
        );
        assert_eq!(
            perception("Are the people sitting?"),
            PerceptionQuery::new(QueryCategory::Activity, "person", Some(QueryArgument::DoingIs("sitting".into())))
        );
    }

    #[test]
    fn non_perception() {
        for q in [
            "Why is the man sad?",
            "What is the man about to do?",
            "What kind of place is this?",
            "Is the scene dangerous?",
            "",
            "Is the man happy?",
        ] {
            assert_eq!(interpret_query(q), Interpretation::NotPerception, "{q}");
        }
    }

    #[test]
    fn pronouns_are_ambiguous() {
        assert_eq!(interpret_query("What color is it?"), Interpretation::AmbiguousReferent);
        assert_eq!(interpret_query("What are they holding?"), Interpretation::NotPerception);
        assert_eq!(interpret_query("What is it holding?"), Interpretation::AmbiguousReferent);
    }

    #[test]
    fn canonical_text_round_trips() {
        for q in all_canonical_queries() {
            assert_eq!(interpret_query(&q.to_text()), Interpretation::Perception(q.clone()), "{}", q.to_text());
        }
    }
}

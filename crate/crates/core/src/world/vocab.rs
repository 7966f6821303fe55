//! Closed vocabularies of the synthetic world.
//!
//! Everything the oracle sensor can say is drawn from these lists, which keeps
//! the reply alphabet finite and small.

pub const PERSONS: [&str; 3] = ["man", "woman", "child"];
const PERSON_PLURALS: [&str; 3] = ["men", "women", "children"];

/// Hypernym that matches every person category.
pub const PERSON_HYPERNYM: &str = "person";
const PERSON_HYPERNYM_PLURAL: &str = "people";

/// Non-person nouns. The tools at the end are only ever held.
pub const OBJECTS: [&str; 14] = [
    "dog", "cat", "cup", "mug", "table", "sofa", "bicycle", "sign", "surfboard", "knife", "book", "ball", "guitar",
    "brush",
];
const OBJECT_PLURALS: [&str; 14] = [
    "dogs", "cats", "cups", "mugs", "tables", "sofas", "bicycles", "signs", "surfboards", "knives", "books", "balls",
    "guitars", "brushes",
];

/// Objects that may appear as free-standing distractors.
pub const DISTRACTORS: [&str; 8] = ["dog", "cat", "cup", "mug", "table", "sofa", "bicycle", "sign"];
pub const ANIMALS: [&str; 2] = ["dog", "cat"];

pub const COLORS: [&str; 8] = ["red", "blue", "green", "yellow", "black", "white", "orange", "purple"];
pub const SIZES: [&str; 3] = ["small", "medium", "large"];
pub const PERSON_POSES: [&str; 3] = ["standing", "sitting", "walking"];
pub const ANIMAL_POSES: [&str; 3] = ["sitting", "sleeping", "running"];
pub const TEXT_LABELS: [&str; 5] = ["stop", "exit", "open", "sale", "welcome"];

/// A tool, the activity it is used for (the option text), and the scene type
/// that typically co-occurs with that activity (the spurious cue).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Purpose {
    pub tool: &'static str,
    pub activity: &'static str,
    pub scene: &'static str,
}

pub const PURPOSES: [Purpose; 6] = [
    Purpose { tool: "surfboard", activity: "go surfing", scene: "beach" },
    Purpose { tool: "knife", activity: "cook a meal", scene: "kitchen" },
    Purpose { tool: "book", activity: "study for an exam", scene: "library" },
    Purpose { tool: "ball", activity: "play soccer", scene: "field" },
    Purpose { tool: "guitar", activity: "play music", scene: "stage" },
    Purpose { tool: "brush", activity: "paint a picture", scene: "studio" },
];

pub fn purpose_by_tool(tool: &str) -> Option<&'static Purpose> {
    PURPOSES.iter().find(|p| p.tool == tool)
}

pub fn purpose_by_activity(activity: &str) -> Option<&'static Purpose> {
    PURPOSES.iter().find(|p| p.activity == activity)
}

pub fn purpose_by_scene(scene: &str) -> Option<&'static Purpose> {
    PURPOSES.iter().find(|p| p.scene == scene)
}

pub fn is_person(category: &str) -> bool {
    PERSONS.contains(&category)
}

/// Maps a surface noun (singular or plural, including "person"/"people") to
/// its singular form. Unknown words pass through unchanged.
pub fn singular(word: &str) -> &str {
    if word == PERSON_HYPERNYM_PLURAL {
        return PERSON_HYPERNYM;
    }
    if let Some(i) = PERSON_PLURALS.iter().position(|p| *p == word) {
        return PERSONS[i];
    }
    if let Some(i) = OBJECT_PLURALS.iter().position(|p| *p == word) {
        return OBJECTS[i];
    }
    word
}

/// Whether an object of `category` is a referent of the noun `noun`.
pub fn noun_matches(noun: &str, category: &str) -> bool {
    noun == category || (noun == PERSON_HYPERNYM && is_person(category))
}

pub fn is_known_noun(noun: &str) -> bool {
    noun == PERSON_HYPERNYM || PERSONS.contains(&noun) || OBJECTS.contains(&noun)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plurals_round_trip() {
        for (s, p) in PERSONS.iter().zip(PERSON_PLURALS) {
            assert_eq!(singular(p), *s);
        }
        for (s, p) in OBJECTS.iter().zip(OBJECT_PLURALS) {
            assert_eq!(singular(p), *s);
        }
        assert_eq!(singular("people"), "person");
        assert_eq!(singular("unicorn"), "unicorn");
    }

    #[test]
    fn purposes_are_consistent() {
        for p in PURPOSES {
            assert!(OBJECTS.contains(&p.tool));
            assert!(!DISTRACTORS.contains(&p.tool));
            assert_eq!(purpose_by_scene(p.scene), Some(&p));
        }
    }
}

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::vocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    LeftOf,
    RightOf,
    On,
    Under,
    Near,
    Holding,
}

impl Predicate {
    pub const SPATIAL: [Predicate; 5] =
        [Predicate::LeftOf, Predicate::RightOf, Predicate::On, Predicate::Under, Predicate::Near];

    pub fn as_str(self) -> &'static str {
        match self {
            Predicate::LeftOf => "left_of",
            Predicate::RightOf => "right_of",
            Predicate::On => "on",
            Predicate::Under => "under",
            Predicate::Near => "near",
            Predicate::Holding => "holding",
        }
    }

    /// English phrase used in query templates ("What is left of the sofa?").
    pub fn phrase(self) -> &'static str {
        match self {
            Predicate::LeftOf => "left of",
            Predicate::RightOf => "right of",
            Predicate::On => "on",
            Predicate::Under => "under",
            Predicate::Near => "near",
            Predicate::Holding => "holding",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub category: String,
    /// `color`, `size`, and for people and animals `activity`.
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_label: Option<String>,
}

impl SceneObject {
    pub fn attribute(&self, name: &str) -> Option<&str> {
        self.attributes.get(name).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub subject: String,
    pub predicate: Predicate,
    pub object: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneGraph {
    pub objects: Vec<SceneObject>,
    pub relations: Vec<Relation>,
    pub scene_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SceneError {
    #[error("object `{0}` has a category outside the vocabulary")]
    UnknownCategory(String),
    #[error("object `{id}` has attribute {name}={value} outside its domain")]
    BadAttribute { id: String, name: String, value: String },
    #[error("relation endpoint `{0}` does not exist")]
    DanglingRelation(String),
    #[error("duplicate object id `{0}`")]
    DuplicateId(String),
}

fn attribute_domain(name: &str) -> Option<&'static [&'static str]> {
    match name {
        "color" => Some(&vocab::COLORS),
        "size" => Some(&vocab::SIZES),
        _ => None,
    }
}

impl SceneGraph {
    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Objects that `noun` can refer to, in id order.
    pub fn referents<'a>(&'a self, noun: &'a str) -> impl Iterator<Item = &'a SceneObject> + 'a {
        self.objects.iter().filter(move |o| vocab::noun_matches(noun, &o.category))
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        for (i, o) in self.objects.iter().enumerate() {
            if self.objects[..i].iter().any(|p| p.id == o.id) {
                return Err(SceneError::DuplicateId(o.id.clone()));
            }
            if !vocab::is_person(&o.category) && !vocab::OBJECTS.contains(&o.category.as_str()) {
                return Err(SceneError::UnknownCategory(o.id.clone()));
            }
            for (name, value) in &o.attributes {
                let ok = match name.as_str() {
                    "activity" => vocab::PERSON_POSES.contains(&value.as_str()) || vocab::ANIMAL_POSES.contains(&value.as_str()),
                    other => attribute_domain(other).is_some_and(|d| d.contains(&value.as_str())),
                };
                if !ok {
                    return Err(SceneError::BadAttribute { id: o.id.clone(), name: name.clone(), value: value.clone() });
                }
            }
        }
        for r in &self.relations {
            for end in [&r.subject, &r.object] {
                if self.object(end).is_none() {
                    return Err(SceneError::DanglingRelation(end.clone()));
                }
            }
        }
        Ok(())
    }
}

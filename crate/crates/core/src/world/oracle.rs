//! Ground-truth sensor over scene graphs.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::query::{interpret_query, Interpretation, PerceptionQuery, QueryArgument, QueryCategory};
use super::scene::{Predicate, SceneGraph, SceneObject};
use super::task::TaskInstance;
use super::vocab;
use crate::sensor::{RejectKind, Sensor, SensorConfig, SensorError, SensorReply};
use crate::util::{number_word, number_words};

const YES: &str = "yes";
const NO: &str = "no";
const NOTHING: &str = "nothing";
const MANY: &str = "more than ten";

fn count_phrase(n: usize, singular: &str, plural: &str) -> String {
    let word = number_word(n).unwrap_or(MANY);
    if n == 1 {
        format!("{word} {singular}")
    } else {
        format!("{word} {plural}")
    }
}

fn overview(scene: &SceneGraph) -> String {
    let people = scene.objects.iter().filter(|o| vocab::is_person(&o.category)).count();
    let things = scene.objects.len() - people;
    format!(
        "A scene with {} and {}.",
        count_phrase(people, "person", "people"),
        count_phrase(things, "object", "objects")
    )
}

fn yes_no(b: bool) -> SensorReply {
    SensorReply::Answer(if b { YES } else { NO }.to_string())
}

fn answer(s: &str) -> SensorReply {
    SensorReply::Answer(s.to_string())
}

/// Scripted reply of an unconstrained sensor to a high-level query: it answers
/// from the scene type, which is exactly the spurious cue.
fn leak(scene: &SceneGraph, query: &str) -> SensorReply {
    let lowered = query.to_lowercase();
    let asks_place = ["place", "where", "location", "setting"].iter().any(|k| lowered.contains(k));
    if asks_place {
        return answer(&scene.scene_type);
    }
    match vocab::purpose_by_scene(&scene.scene_type) {
        Some(p) => answer(p.activity),
        None => answer(NOTHING),
    }
}

enum Referent<'a> {
    Unique(&'a SceneObject),
    Missing,
    Multiple(&'a SceneObject),
}

fn resolve<'a>(scene: &'a SceneGraph, noun: &'a str) -> Referent<'a> {
    let mut it = scene.referents(noun);
    match (it.next(), it.next()) {
        (Some(o), None) => Referent::Unique(o),
        (None, _) => Referent::Missing,
        (Some(o), Some(_)) => Referent::Multiple(o),
    }
}

fn answer_about(scene: &SceneGraph, query: &PerceptionQuery, object: &SceneObject, reject: bool) -> SensorReply {
    match &query.argument {
        Some(QueryArgument::Attribute(kind)) => answer(object.attribute(kind.name()).unwrap_or(NOTHING)),
        Some(QueryArgument::AttributeIs(kind, value)) => yes_no(object.attribute(kind.name()) == Some(value.as_str())),
        Some(QueryArgument::Doing) => answer(object.attribute("activity").unwrap_or(NOTHING)),
        Some(QueryArgument::DoingIs(value)) => yes_no(object.attribute("activity") == Some(value.as_str())),
        Some(QueryArgument::Relation(Predicate::Holding)) => {
            let held: Vec<&str> = scene
                .relations
                .iter()
                .filter(|r| r.predicate == Predicate::Holding && r.subject == object.id)
                .filter_map(|r| scene.object(&r.object).map(|o| o.category.as_str()))
                .collect();
            match held.as_slice() {
                [] => answer(NOTHING),
                [one] => answer(one),
                _ if reject => SensorReply::Reject(RejectKind::Ambiguous),
                [first, ..] => answer(first),
            }
        }
        Some(QueryArgument::Relation(p)) => {
            let subjects: Vec<&str> = scene
                .relations
                .iter()
                .filter(|r| r.predicate == *p && r.object == object.id)
                .filter_map(|r| scene.object(&r.subject).map(|o| o.category.as_str()))
                .collect();
            match subjects.as_slice() {
                [] => answer(NOTHING),
                [one] => answer(one),
                _ if reject => SensorReply::Reject(RejectKind::Ambiguous),
                [first, ..] => answer(first),
            }
        }
        None => match query.category {
            QueryCategory::Text => answer(object.text_label.as_deref().unwrap_or(NOTHING)),
            _ => yes_no(true),
        },
    }
}

/// Answers `query_text` from `scene`. With rejection disabled the oracle never
/// rejects: ambiguous referents resolve to the first match and high-level
/// queries get the scripted spurious-cue reply.
pub fn oracle_answer(scene: &SceneGraph, query_text: &str, config: &SensorConfig) -> SensorReply {
    let query = match interpret_query(query_text) {
        Interpretation::Perception(q) => q,
        Interpretation::NotPerception if config.rejection_enabled => {
            return SensorReply::Reject(RejectKind::NonPerception)
        }
        Interpretation::NotPerception => return leak(scene, query_text),
        Interpretation::AmbiguousReferent if config.rejection_enabled => {
            return SensorReply::Reject(RejectKind::Ambiguous)
        }
        Interpretation::AmbiguousReferent => {
            return match scene.objects.first() {
                Some(o) => answer(&o.category),
                None => answer(NOTHING),
            }
        }
    };

    match query.category {
        QueryCategory::Overview => answer(&overview(scene)),
        QueryCategory::Existence => yes_no(scene.referents(&query.target).next().is_some()),
        QueryCategory::Counting => answer(number_word(scene.referents(&query.target).count()).unwrap_or(MANY)),
        _ => match resolve(scene, &query.target) {
            Referent::Unique(o) => answer_about(scene, &query, o, config.rejection_enabled),
            Referent::Multiple(o) if !config.rejection_enabled => answer_about(scene, &query, o, false),
            Referent::Missing if !config.rejection_enabled => answer(NOTHING),
            Referent::Multiple(_) | Referent::Missing => SensorReply::Reject(RejectKind::Ambiguous),
        },
    }
}

/// Every answer string the oracle can produce under `config`: the finite
/// alphabet, without the two rejection phrases.
pub fn answer_alphabet(config: &SensorConfig) -> BTreeSet<String> {
    let mut sigma = BTreeSet::new();
    for s in [YES, NO, NOTHING, MANY] {
        sigma.insert(s.to_string());
    }
    let words = vocab::COLORS
        .iter()
        .chain(vocab::SIZES.iter())
        .chain(vocab::PERSON_POSES.iter())
        .chain(vocab::ANIMAL_POSES.iter())
        .chain(vocab::PERSONS.iter())
        .chain(vocab::OBJECTS.iter())
        .chain(vocab::TEXT_LABELS.iter())
        .chain(number_words().iter());
    for w in words {
        sigma.insert(w.to_string());
    }
    for people in 0..=11 {
        for things in 0..=11 {
            sigma.insert(format!(
                "A scene with {} and {}.",
                count_phrase(people, "person", "people"),
                count_phrase(things, "object", "objects")
            ));
        }
    }
    if !config.rejection_enabled {
        for p in vocab::PURPOSES {
            sigma.insert(p.scene.to_string());
            sigma.insert(p.activity.to_string());
        }
    }
    sigma
}

/// |Σ⊥|: answer alphabet plus the two rejection phrases.
pub fn reply_alphabet_size(config: &SensorConfig) -> usize {
    answer_alphabet(config).len() + 2
}

/// In-process sensor that resolves image references to known scenes.
#[derive(Debug, Clone, Default)]
pub struct OracleSensor {
    scenes: BTreeMap<String, SceneGraph>,
    config: SensorConfig,
}

impl OracleSensor {
    pub fn new(config: SensorConfig) -> Self {
        Self { scenes: BTreeMap::new(), config }
    }

    pub fn from_tasks<'a>(tasks: impl IntoIterator<Item = &'a TaskInstance>, config: SensorConfig) -> Self {
        let mut sensor = Self::new(config);
        for t in tasks {
            sensor.insert(t.item.image_ref.clone(), t.scene.clone());
        }
        sensor
    }

    pub fn insert(&mut self, image_ref: String, scene: SceneGraph) {
        self.scenes.insert(image_ref, scene);
    }

    pub fn config(&self) -> &SensorConfig {
        &self.config
    }

    pub fn scene(&self, image_ref: &str) -> Option<&SceneGraph> {
        self.scenes.get(image_ref)
    }
}

impl Sensor for OracleSensor {
    fn answer(&self, image_ref: &str, query: &str) -> Result<SensorReply, SensorError> {
        let scene = self
            .scenes
            .get(image_ref)
            .ok_or_else(|| SensorError::Unavailable(format!("unknown image reference `{image_ref}`")))?;
        Ok(oracle_answer(scene, query, &self.config))
    }
}

//! Synthetic tasks with a planted spurious correlation.
//!
//! Each scene holds two or three people wearing distinct colors, each holding
//! a tool. The question asks what the person wearing a given color is about to
//! do; the options are activities implied by tools. The causal route is: find
//! the person by color, ask what they hold, map the tool to its activity. The
//! scene type is the spurious cue. With probability `p` it is the setting of
//! the gold activity, otherwise the setting of a decoy option.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::query::{AttributeKind, PerceptionQuery, QueryArgument, QueryCategory};
use super::scene::{Predicate, Relation, SceneGraph, SceneObject};
use super::vocab::{self, Purpose};
use crate::item::McqItem;
use crate::util::seeded_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationSpec {
    /// Inclusive range of causal chain lengths, which equals the number of people.
    pub chain_len: (usize, usize),
    /// Inclusive range of option counts.
    pub options: (usize, usize),
    /// Probability that the scene type agrees with the gold answer.
    pub spurious_rate: f64,
    /// Inclusive range of distractor objects.
    pub distractors: (usize, usize),
    /// How many tool/activity/setting triples are in play (2..=6).
    pub n_purposes: usize,
    /// How many colors people may wear (3..=8).
    pub n_colors: usize,
}

impl Default for GenerationSpec {
    fn default() -> Self {
        Self {
            chain_len: (2, 3),
            options: (2, 4),
            spurious_rate: 0.9,
            distractors: (1, 3),
            n_purposes: vocab::PURPOSES.len(),
            n_colors: vocab::COLORS.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TaskError {
    #[error("invalid generation spec: {0}")]
    InvalidSpec(String),
}

impl GenerationSpec {
    pub fn validate(&self) -> Result<(), TaskError> {
        let bad = |m: &str| Err(TaskError::InvalidSpec(m.to_string()));
        if !(0.0..=1.0).contains(&self.spurious_rate) {
            return bad("spurious_rate must lie in [0, 1]");
        }
        let (lo, hi) = self.chain_len;
        if lo < 2 || hi < lo || hi > vocab::PERSONS.len() {
            return bad("chain_len must satisfy 2 <= min <= max <= 3");
        }
        let (olo, ohi) = self.options;
        if olo < 2 || ohi < olo {
            return bad("options must satisfy 2 <= min <= max");
        }
        if !(2..=vocab::PURPOSES.len()).contains(&self.n_purposes) || ohi > self.n_purposes {
            return bad("n_purposes must lie in 2..=6 and cover the largest option count");
        }
        if !(3..=vocab::COLORS.len()).contains(&self.n_colors) || hi > self.n_colors {
            return bad("n_colors must lie in 3..=8 and cover every person");
        }
        if self.distractors.1 < self.distractors.0 {
            return bad("distractors range is reversed");
        }
        Ok(())
    }
}

/// The planted cue: an attribute name, its value in this scene, and the
/// anti-correlated value a counterfactual swaps in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpuriousAttribute {
    pub name: String,
    pub value: String,
    pub counter_value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub scene: SceneGraph,
    pub item: McqItem,
    pub gold_index: usize,
    pub spurious_attribute: SpuriousAttribute,
    pub causal_chain: Vec<PerceptionQuery>,
    /// Whether the cue currently points at the gold option.
    pub aligned: bool,
}

fn color_query(person: &str) -> PerceptionQuery {
    PerceptionQuery::new(QueryCategory::Property, person, Some(QueryArgument::Attribute(AttributeKind::Color)))
}

fn holding_query(person: &str) -> PerceptionQuery {
    PerceptionQuery::new(QueryCategory::Spatial, person, Some(QueryArgument::Relation(Predicate::Holding)))
}

const QUESTION_PREFIX: &str = "What is the person wearing ";
const QUESTION_SUFFIX: &str = " about to do?";

/// Color named by a generated question.
pub fn question_color(question: &str) -> Option<&str> {
    question.strip_prefix(QUESTION_PREFIX)?.strip_suffix(QUESTION_SUFFIX)
}

fn range(rng: &mut impl Rng, (lo, hi): (usize, usize)) -> usize {
    rng.random_range(lo..=hi)
}

pub fn generate_task(seed: u64, spec: &GenerationSpec) -> Result<TaskInstance, TaskError> {
    spec.validate()?;
    let mut rng = seeded_rng(seed);
    let people = range(&mut rng, spec.chain_len);
    let n_options = range(&mut rng, spec.options);
    let aligned = rng.random_bool(spec.spurious_rate);

    let mut purposes: Vec<&Purpose> = vocab::PURPOSES[..spec.n_purposes].iter().collect();
    purposes.shuffle(&mut rng);
    let option_purposes = &purposes[..n_options];
    let gold_purpose = option_purposes[0];
    let decoy_purpose = option_purposes[1];

    let mut colors: Vec<&str> = vocab::COLORS[..spec.n_colors].to_vec();
    colors.shuffle(&mut rng);
    let target = rng.random_range(0..people);

    // Non-target people hold decoy-option tools first, then anything else.
    let mut other_tools = option_purposes[1..].iter().chain(purposes[n_options..].iter()).cycle();
    let mut objects = Vec::new();
    let mut relations = Vec::new();
    for (i, person) in vocab::PERSONS[..people].iter().enumerate() {
        let tool = if i == target { gold_purpose.tool } else { other_tools.next().map_or("ball", |p| p.tool) };
        let mut attributes = BTreeMap::new();
        attributes.insert("color".to_string(), colors[i].to_string());
        attributes.insert("size".to_string(), vocab::SIZES[rng.random_range(0..vocab::SIZES.len())].to_string());
        let pose = vocab::PERSON_POSES[rng.random_range(0..vocab::PERSON_POSES.len())];
        attributes.insert("activity".to_string(), pose.to_string());
        let pid = format!("p{i}");
        let tid = format!("t{i}");
        objects.push(SceneObject { id: pid.clone(), category: person.to_string(), attributes, text_label: None });
        let mut tool_attrs = BTreeMap::new();
        tool_attrs.insert("color".to_string(), vocab::COLORS[rng.random_range(0..vocab::COLORS.len())].to_string());
        objects.push(SceneObject { id: tid.clone(), category: tool.to_string(), attributes: tool_attrs, text_label: None });
        relations.push(Relation { subject: pid, predicate: Predicate::Holding, object: tid });
    }

    let n_distractors = range(&mut rng, spec.distractors);
    for d in 0..n_distractors {
        let category = vocab::DISTRACTORS[rng.random_range(0..vocab::DISTRACTORS.len())];
        let mut attributes = BTreeMap::new();
        attributes.insert("color".to_string(), vocab::COLORS[rng.random_range(0..vocab::COLORS.len())].to_string());
        attributes.insert("size".to_string(), vocab::SIZES[rng.random_range(0..vocab::SIZES.len())].to_string());
        if vocab::ANIMALS.contains(&category) {
            let pose = vocab::ANIMAL_POSES[rng.random_range(0..vocab::ANIMAL_POSES.len())];
            attributes.insert("activity".to_string(), pose.to_string());
        }
        let text_label = (category == "sign")
            .then(|| vocab::TEXT_LABELS[rng.random_range(0..vocab::TEXT_LABELS.len())].to_string());
        let id = format!("d{d}");
        let anchor = &objects[rng.random_range(0..objects.len())];
        let predicate = Predicate::SPATIAL[rng.random_range(0..Predicate::SPATIAL.len())];
        relations.push(Relation { subject: id.clone(), predicate, object: anchor.id.clone() });
        objects.push(SceneObject { id, category: category.to_string(), attributes, text_label });
    }

    let (value, counter_value) = if aligned {
        (gold_purpose.scene, decoy_purpose.scene)
    } else {
        (decoy_purpose.scene, gold_purpose.scene)
    };
    let scene = SceneGraph { objects, relations, scene_type: value.to_string() };

    let mut options: Vec<&Purpose> = option_purposes.to_vec();
    options.shuffle(&mut rng);
    let gold_index = options.iter().position(|p| p.tool == gold_purpose.tool).unwrap_or(0);

    let mut causal_chain: Vec<PerceptionQuery> = vocab::PERSONS[..people - 1].iter().map(|p| color_query(p)).collect();
    causal_chain.push(holding_query(vocab::PERSONS[target]));

    let id = format!("syn-{seed}");
    let item = McqItem {
        id: id.clone(),
        image_ref: format!("scene://{id}"),
        question: format!("{QUESTION_PREFIX}{}{QUESTION_SUFFIX}", colors[target]),
        options: options.iter().map(|p| p.activity.to_string()).collect(),
        gold_index,
        category: Some(format!("chain{people}")),
    };

    Ok(TaskInstance {
        scene,
        item,
        gold_index,
        spurious_attribute: SpuriousAttribute { name: "scene_type".to_string(), value: value.to_string(), counter_value: counter_value.to_string() },
        causal_chain,
        aligned,
    })
}

/// Generates `count` tasks with seeds `base_seed..base_seed + count`.
pub fn generate_suite(base_seed: u64, count: usize, spec: &GenerationSpec) -> Result<Vec<TaskInstance>, TaskError> {
    (0..count as u64).map(|i| generate_task(base_seed.wrapping_add(i), spec)).collect()
}

const FLIP_SUFFIX: &str = "-cf";

fn toggle_suffix(s: &str) -> String {
    match s.strip_suffix(FLIP_SUFFIX) {
        Some(base) => base.to_string(),
        None => format!("{s}{FLIP_SUFFIX}"),
    }
}

/// Swaps the spurious cue for its anti-correlated value. Causal evidence and
/// the gold answer are untouched; flipping twice restores the original.
pub fn counterfactual_flip(task: &TaskInstance) -> TaskInstance {
    let mut out = task.clone();
    let attr = &mut out.spurious_attribute;
    core::mem::swap(&mut attr.value, &mut attr.counter_value);
    out.scene.scene_type = attr.value.clone();
    out.aligned = !task.aligned;
    out.item.id = toggle_suffix(&task.item.id);
    out.item.image_ref = toggle_suffix(&task.item.image_ref);
    out
}

/// Applies the task's decision rule to the replies of its causal chain: the
/// person whose color matches the question (or the last one when none of the
/// earlier ones does) holds a tool whose activity is the answer.
pub fn decide_from_chain(item: &McqItem, chain: &[PerceptionQuery], replies: &[&str]) -> Option<usize> {
    if chain.len() != replies.len() || chain.is_empty() {
        return None;
    }
    let color = question_color(&item.question)?;
    let (holding, colors) = chain.split_last()?;
    let people = colors.len() + 1;
    let matched = colors.iter().zip(replies).position(|(_, r)| *r == color).unwrap_or(people - 1);
    if holding.target != vocab::PERSONS[matched] {
        return None;
    }
    let activity = vocab::purpose_by_tool(replies.last()?)?.activity;
    item.options.iter().position(|o| o == activity)
}

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::canon::{canonicalize_answer, strip_answer_prefix, Canonicalizer};
use super::shuffle::shuffle_options;
use super::vote::self_consistency;
use crate::item::McqItem;
use crate::protocol::{run_episode, DialogueBudget, Episode, EpisodeError, Reasoner, ReasonerError};
use crate::sensor::Sensor;
use crate::util::{derive_seed, seeded_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalMode {
    /// Reasoner/sensor dialogue.
    #[serde(rename = "dialogue")]
    Dialogue,
    /// One direct answer per sample from a model that sees the image.
    #[serde(rename = "e2e")]
    E2E,
    /// Direct answer with a think-step-by-step instruction.
    #[serde(rename = "e2e-cot")]
    E2ECoT,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub mode: EvalMode,
    pub k_samples: usize,
    /// Informational for the harness; reasoners own their sampling.
    pub reasoner_temperature: f64,
    /// 0 keeps the original option order.
    pub shuffle_seed: u64,
    pub budget: DialogueBudget,
    /// Seeds the per-sample RNG streams.
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            mode: EvalMode::Dialogue,
            k_samples: 11,
            reasoner_temperature: 1.0,
            shuffle_seed: 0,
            budget: DialogueBudget::default(),
            seed: 0,
        }
    }
}

/// A model that answers the question directly from the image.
pub trait DirectAnswerer: Send + Sync {
    fn answer(&self, item: &McqItem, chain_of_thought: bool, rng: &mut dyn RngCore) -> Result<String, ReasonerError>;
}

/// The components an evaluation may call. Only those the mode needs must be set.
#[derive(Clone, Copy, Default)]
pub struct Components<'a> {
    pub reasoner: Option<&'a dyn Reasoner>,
    pub sensor: Option<&'a dyn Sensor>,
    pub direct: Option<&'a dyn DirectAnswerer>,
    pub canonicalizer: Option<&'a dyn Canonicalizer>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("mode {0:?} needs a component that was not provided: {1}")]
    MissingComponent(EvalMode, &'static str),
    #[error("k_samples must be at least 1")]
    NoSamples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub item_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    /// `order[new] = old` as applied before evaluation.
    pub permutation: Vec<usize>,
    /// Gold index in the shuffled order.
    pub gold_index: usize,
    pub votes: Vec<Option<usize>>,
    pub prediction: Option<usize>,
    pub correct: bool,
    /// Transport failure: excluded from accuracy, reported separately.
    pub aborted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub episodes: Vec<Episode>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub raw_outputs: Vec<String>,
}

impl ItemRecord {
    pub fn rounds(&self) -> impl Iterator<Item = usize> + '_ {
        self.episodes.iter().map(|e| e.rounds)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: EvalMode,
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// Unanswerable predictions (no vote mapped to an option); scored incorrect.
    pub unanswered: usize,
    pub mean_rounds: f64,
    pub total_queries: usize,
    pub total_rejections: usize,
    pub rejection_rate: f64,
    pub per_category: BTreeMap<String, CategoryStats>,
    pub aborted: Vec<String>,
    pub items: Vec<ItemRecord>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

const UNCATEGORIZED: &str = "uncategorized";

/// Evaluates one item: shuffle, draw `k_samples` predictions, vote.
pub fn evaluate_item(item: &McqItem, config: &EvalConfig, components: &Components<'_>) -> Result<ItemRecord, EvalError> {
    if config.k_samples == 0 {
        return Err(EvalError::NoSamples);
    }
    let (shuffled, permutation) = shuffle_options(item, config.shuffle_seed);
    let mut record = ItemRecord {
        item_id: item.id.clone(),
        category: item.category.clone(),
        permutation,
        gold_index: shuffled.gold_index,
        votes: Vec::new(),
        prediction: None,
        correct: false,
        aborted: false,
        error: None,
        episodes: Vec::new(),
        raw_outputs: Vec::new(),
    };
    let canon = components.canonicalizer;
    for sample in 0..config.k_samples {
        let mut rng = seeded_rng(derive_seed(config.seed, &item.id, sample as u64));
        match config.mode {
            EvalMode::Dialogue => {
                let reasoner = components.reasoner.ok_or(EvalError::MissingComponent(config.mode, "reasoner"))?;
                let sensor = components.sensor.ok_or(EvalError::MissingComponent(config.mode, "sensor"))?;
                match run_episode(&shuffled, reasoner, sensor, &config.budget, &mut rng) {
                    Ok(ep) => {
                        let vote = ep.prediction_text().and_then(|t| canonicalize_answer(t, &shuffled.options, canon));
                        record.votes.push(vote);
                        record.episodes.push(ep);
                    }
                    Err(EpisodeError::InvalidBudget) => {
                        record.aborted = true;
                        record.error = Some(EpisodeError::InvalidBudget.to_string());
                        break;
                    }
                    Err(e) => {
                        record.aborted = true;
                        record.error = Some(e.to_string());
                        if let Some(ep) = e.episode() {
                            record.episodes.push(ep.clone());
                        }
                        break;
                    }
                }
            }
            EvalMode::E2E | EvalMode::E2ECoT => {
                let direct = components.direct.ok_or(EvalError::MissingComponent(config.mode, "direct answerer"))?;
                match direct.answer(&shuffled, config.mode == EvalMode::E2ECoT, &mut rng) {
                    Ok(raw) => {
                        record.votes.push(canonicalize_answer(strip_answer_prefix(&raw), &shuffled.options, canon));
                        record.raw_outputs.push(raw);
                    }
                    Err(e) => {
                        record.aborted = true;
                        record.error = Some(e.to_string());
                        break;
                    }
                }
            }
        }
    }
    if !record.aborted {
        record.prediction = self_consistency(&record.votes);
        record.correct = record.prediction == Some(record.gold_index);
    }
    Ok(record)
}

/// Aggregates item records into a report. Aborted items count toward neither
/// accuracy nor rounds.
pub fn assemble_report(mode: EvalMode, items: Vec<ItemRecord>) -> RunReport {
    let mut per_category: BTreeMap<String, CategoryStats> = BTreeMap::new();
    let (mut total, mut correct, mut unanswered) = (0, 0, 0);
    let (mut episodes, mut rounds, mut queries, mut rejections) = (0usize, 0usize, 0usize, 0usize);
    let mut aborted = Vec::new();
    for r in &items {
        if r.aborted {
            aborted.push(r.item_id.clone());
            continue;
        }
        total += 1;
        correct += usize::from(r.correct);
        unanswered += usize::from(r.prediction.is_none());
        let key = r.category.clone().unwrap_or_else(|| UNCATEGORIZED.to_string());
        let stats = per_category.entry(key).or_default();
        stats.total += 1;
        stats.correct += usize::from(r.correct);
        for ep in &r.episodes {
            episodes += 1;
            rounds += ep.rounds;
            queries += ep.rounds;
            rejections += ep.rejections;
        }
    }
    for stats in per_category.values_mut() {
        stats.accuracy = ratio(stats.correct, stats.total);
    }
    RunReport {
        mode,
        total,
        correct,
        accuracy: ratio(correct, total),
        unanswered,
        mean_rounds: ratio(rounds, episodes),
        total_queries: queries,
        total_rejections: rejections,
        rejection_rate: ratio(rejections, queries),
        per_category,
        aborted,
        items,
    }
}

/// Evaluates `items` sequentially. The `percept` crate runs the same
/// per-item function on a worker pool.
pub fn evaluate(items: &[McqItem], config: &EvalConfig, components: &Components<'_>) -> Result<RunReport, EvalError> {
    let records = items.iter().map(|item| evaluate_item(item, config, components)).collect::<Result<Vec<_>, _>>()?;
    Ok(assemble_report(config.mode, records))
}

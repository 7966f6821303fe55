//! Two-stage training-data filter.
//!
//! Stage 1 asks a judge `judge_votes` times whether an item needs genuine
//! visual reasoning and keeps it when at least `threshold` verdicts are yes.
//! Stage 2 gives each text-only solver `attempts` tries without the image and
//! discards the item when any solver is right every time.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::eval::{canonicalize_answer, strip_answer_prefix};
use crate::item::McqItem;
use crate::util::{derive_seed, seeded_rng};

/// Exact final line of a positive judge verdict.
pub const YES_VERDICT: &str = "The answer is: Yes";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ComponentError {
    #[error("component unavailable: {0}")]
    Unavailable(String),
}

/// Screens an item with the judge prompt. Returns the raw judge output for
/// independent run `vote`.
pub trait Judge: Send + Sync {
    fn judge(&self, item: &McqItem, vote: usize, rng: &mut dyn RngCore) -> Result<String, ComponentError>;
}

/// Answers an item from its text alone. Returns the raw answer for
/// independent `attempt`.
pub trait Solver: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, item: &McqItem, attempt: usize, rng: &mut dyn RngCore) -> Result<String, ComponentError>;
}

/// Judge replaying fixed verdicts per item id. Items it does not know are
/// unavailable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedJudge {
    pub verdicts: BTreeMap<String, Vec<bool>>,
}

impl Judge for ScriptedJudge {
    fn judge(&self, item: &McqItem, vote: usize, _: &mut dyn RngCore) -> Result<String, ComponentError> {
        let v = self.verdicts.get(&item.id).and_then(|v| v.get(vote));
        let v = v.ok_or_else(|| ComponentError::Unavailable(alloc::format!("no verdict {vote} for `{}`", item.id)))?;
        Ok(alloc::format!("The answer is: {}", if *v { "Yes" } else { "No" }))
    }
}

/// Solver replaying fixed raw answers per item id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedSolver {
    pub name: String,
    pub answers: BTreeMap<String, Vec<String>>,
}

impl Solver for ScriptedSolver {
    fn name(&self) -> &str {
        &self.name
    }

    fn solve(&self, item: &McqItem, attempt: usize, _: &mut dyn RngCore) -> Result<String, ComponentError> {
        self.answers
            .get(&item.id)
            .and_then(|a| a.get(attempt))
            .cloned()
            .ok_or_else(|| ComponentError::Unavailable(alloc::format!("{} has no answer for `{}`", self.name, item.id)))
    }
}

/// Scripted judge and solvers, as stored in fixture files.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterScript {
    pub judge: ScriptedJudge,
    pub solvers: Vec<ScriptedSolver>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub judge_votes: usize,
    pub threshold: usize,
    pub attempts: usize,
    /// Tries per judge or solver call before it counts as failed.
    pub call_attempts: usize,
    pub seed: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { judge_votes: 11, threshold: 7, attempts: 2, call_attempts: 3, seed: 0 }
    }
}

/// Yes only when the last non-empty line is exactly [`YES_VERDICT`].
pub fn parse_verdict(raw: &str) -> bool {
    raw.lines().rev().map(str::trim).find(|l| !l.is_empty()) == Some(YES_VERDICT)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub item_id: String,
    pub stage1_votes: Vec<bool>,
    pub stage1_kept: bool,
    /// A judge call failed after retries; the item is excluded.
    pub undecided: bool,
    /// False when stage 1 already dropped the item.
    pub stage2_evaluated: bool,
    pub stage2_trials: BTreeMap<String, Vec<bool>>,
    pub skipped_solvers: Vec<String>,
    pub stage2_kept: bool,
    pub final_kept: bool,
}

fn with_retries<T>(
    tries: usize,
    mut call: impl FnMut(usize) -> Result<T, ComponentError>,
) -> Result<T, ComponentError> {
    let mut last = ComponentError::Unavailable("no attempt made".to_string());
    for t in 0..tries.max(1) {
        match call(t) {
            Ok(v) => return Ok(v),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Stage 1: `(votes, kept, undecided)`.
pub fn judge_vote(item: &McqItem, judge: &dyn Judge, config: &FilterConfig) -> (Vec<bool>, bool, bool) {
    let mut votes = Vec::with_capacity(config.judge_votes);
    for k in 0..config.judge_votes {
        let out = with_retries(config.call_attempts, |t| {
            let key = alloc::format!("judge/{}/{t}", item.id);
            judge.judge(item, k, &mut seeded_rng(derive_seed(config.seed, &key, k as u64)))
        });
        match out {
            Ok(raw) => votes.push(parse_verdict(&raw)),
            Err(_) => return (votes, false, true),
        }
    }
    let yes = votes.iter().filter(|v| **v).count();
    (votes, yes >= config.threshold, false)
}

/// Stage 2: `(trials per solver, skipped solvers, kept)`.
pub fn text_only_filter(
    item: &McqItem,
    solvers: &[&dyn Solver],
    config: &FilterConfig,
) -> (BTreeMap<String, Vec<bool>>, Vec<String>, bool) {
    let mut trials = BTreeMap::new();
    let mut skipped = Vec::new();
    let mut kept = true;
    for solver in solvers {
        let mut results = Vec::with_capacity(config.attempts);
        let mut failed = false;
        for a in 0..config.attempts {
            let out = with_retries(config.call_attempts, |t| {
                let key = alloc::format!("solve/{}/{}/{t}", solver.name(), item.id);
                solver.solve(item, a, &mut seeded_rng(derive_seed(config.seed, &key, a as u64)))
            });
            match out {
                Ok(raw) => {
                    let pred = canonicalize_answer(strip_answer_prefix(&raw), &item.options, None);
                    results.push(pred == Some(item.gold_index));
                }
                Err(_) => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            skipped.push(solver.name().to_string());
            continue;
        }
        if !results.is_empty() && results.iter().all(|c| *c) {
            kept = false;
        }
        trials.insert(solver.name().to_string(), results);
    }
    (trials, skipped, kept)
}

/// Runs both stages. Returns the kept items, in input order, and one decision
/// per input item.
pub fn run_pipeline(
    items: &[McqItem],
    judge: &dyn Judge,
    solvers: &[&dyn Solver],
    config: &FilterConfig,
) -> (Vec<McqItem>, Vec<FilterDecision>) {
    let decisions: Vec<FilterDecision> = items.iter().map(|item| decide(item, judge, solvers, config)).collect();
    let kept = items.iter().zip(&decisions).filter(|(_, d)| d.final_kept).map(|(i, _)| i.clone()).collect();
    (kept, decisions)
}

/// Both stages for one item.
pub fn decide(item: &McqItem, judge: &dyn Judge, solvers: &[&dyn Solver], config: &FilterConfig) -> FilterDecision {
    let (stage1_votes, stage1_kept, undecided) = judge_vote(item, judge, config);
    let (stage2_trials, skipped_solvers, stage2_kept, stage2_evaluated) = if stage1_kept {
        let (t, s, k) = text_only_filter(item, solvers, config);
        (t, s, k, true)
    } else {
        (BTreeMap::new(), Vec::new(), false, false)
    };
    FilterDecision {
        item_id: item.id.clone(),
        stage1_votes,
        stage1_kept,
        undecided,
        stage2_evaluated,
        stage2_trials,
        skipped_solvers,
        stage2_kept,
        final_kept: stage1_kept && stage2_kept,
    }
}

/// Kept set implied by a decision log.
pub fn replay_kept(decisions: &[FilterDecision]) -> Vec<&str> {
    decisions.iter().filter(|d| d.final_kept).map(|d| d.item_id.as_str()).collect()
}

//! The toy reasoner: a [`ToyPolicy`] over a closed set of template queries and
//! answers, acting in the synthetic world.
//!
//! Decoding contexts abstract the dialogue into a sorted set of facts learned
//! so far. Color replies are reduced to whether they match the color in the
//! question; only the latest holding reply and the latest high-level reply
//! are kept; counts, overviews and rejections add nothing.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use rand::RngCore;

use super::batch::TokenRecord;
use super::policy::ToyPolicy;
use super::GrpoError;
use crate::item::{option_letter, McqItem};
use crate::protocol::{Action, Reasoner, ReasonerError, Step};
use crate::world::task::question_color;
use crate::world::vocab;

const ASK: &str = "ask:";
const ANSWER: &str = "answer:";

const GENERIC_QUERIES: [&str; 5] = [
    "What is the person holding?",
    "How many people are in the image?",
    "What is in the image?",
    "What is the person about to do?",
    "What kind of place is this?",
];

fn color_query(person: &str) -> String {
    format!("What color is the {person} wearing?")
}

fn holding_query(person: &str) -> String {
    format!("What is the {person} holding?")
}

/// Symbol names, in policy index order: per-person color and holding
/// queries, generic queries (two of which only an unconstrained sensor would
/// answer), then one answer per activity.
pub fn toy_vocabulary() -> Vec<String> {
    let mut v = Vec::new();
    for p in vocab::PERSONS {
        v.push(format!("{ASK}{}", color_query(p)));
    }
    for p in vocab::PERSONS {
        v.push(format!("{ASK}{}", holding_query(p)));
    }
    for q in GENERIC_QUERIES {
        v.push(format!("{ASK}{q}"));
    }
    for p in vocab::PURPOSES {
        v.push(format!("{ANSWER}{}", p.activity));
    }
    v
}

/// A fresh uniform policy over [`toy_vocabulary`].
pub fn toy_policy(temperature: f64) -> ToyPolicy {
    ToyPolicy::new(toy_vocabulary(), temperature)
}

/// Raw reasoner text for a symbol on `item`. Answers name the option letter
/// when the activity is an option and the bare activity otherwise.
pub fn render_symbol(symbol: &str, item: &McqItem) -> String {
    if let Some(q) = symbol.strip_prefix(ASK) {
        return format!("Thought: I will ask the sensor.\nAction: My question is: {q}");
    }
    let activity = symbol.strip_prefix(ANSWER).unwrap_or(symbol);
    match item.options.iter().position(|o| o == activity) {
        Some(i) => format!("Thought: I can answer now.\nAction: The answer is: ({})", option_letter(i)),
        None => format!("Thought: I can answer now.\nAction: The answer is: {activity}"),
    }
}

/// Decoding context for the next step: color verdicts per person, plus the
/// latest holding reply and the latest reply to a high-level query. Counts
/// and overviews carry nothing the task needs and leave the context as is.
pub fn context_key(item: &McqItem, history: &[Step]) -> String {
    let color = question_color(&item.question);
    let mut facts: BTreeSet<String> = BTreeSet::new();
    let mut held: Option<String> = None;
    let mut high_level: Option<String> = None;
    for step in history {
        let (Action::Query(q), Some(reply)) = (&step.parsed.action, &step.sensor_reply) else { continue };
        if reply.is_rejection() {
            continue;
        }
        let text = reply.text();
        if let Some(p) = vocab::PERSONS.iter().find(|p| *q == color_query(p)) {
            let verdict = if Some(text) == color { "match" } else { "other" };
            facts.insert(format!("color:{p}={verdict}"));
        } else if let Some(p) = vocab::PERSONS.iter().find(|p| *q == holding_query(p)) {
            held = Some(format!("hold:{p}={text}"));
        } else if *q == GENERIC_QUERIES[0] {
            held = Some(format!("hold:person={text}"));
        } else if let Some(i) = GENERIC_QUERIES[3..].iter().position(|g| g == q) {
            high_level = Some(format!("q{}={text}", i + 3));
        }
    }
    facts.extend(held);
    facts.extend(high_level);
    let parts: Vec<&str> = facts.iter().map(String::as_str).collect();
    format!("ctx[{}]", parts.join(";"))
}

/// Samples the next symbol from the policy.
#[derive(Debug, Clone, Copy)]
pub struct ToyReasoner<'a> {
    pub policy: &'a ToyPolicy,
}

impl Reasoner for ToyReasoner<'_> {
    fn respond(&self, item: &McqItem, history: &[Step], rng: &mut dyn RngCore) -> Result<String, ReasonerError> {
        let ctx = context_key(item, history);
        let a = self.policy.sample(&ctx, rng);
        Ok(render_symbol(&self.policy.vocabulary[a], item))
    }
}

/// Recovers the emitted symbols of a toy episode and records them with their
/// log-probabilities under `policy` (current and old) and `reference`. Sensor
/// replies follow as unmasked records.
pub fn token_records(
    trajectory_id: &str,
    item: &McqItem,
    steps: &[Step],
    policy: &ToyPolicy,
    reference: &ToyPolicy,
) -> Result<Vec<TokenRecord>, GrpoError> {
    let renders: Vec<String> = policy.vocabulary.iter().map(|s| render_symbol(s, item)).collect();
    let mut out = Vec::new();
    for (turn, step) in steps.iter().enumerate() {
        let a = renders.iter().position(|r| *r == step.parsed.raw).ok_or_else(|| GrpoError::UnknownSymbol {
            trajectory: trajectory_id.to_string(),
            raw: step.parsed.raw.clone(),
        })?;
        let context_id = context_key(item, &steps[..turn]);
        let lp = policy.log_prob(&context_id, a);
        out.push(TokenRecord {
            trajectory_id: trajectory_id.to_string(),
            symbol: policy.vocabulary[a].clone(),
            logp_ref: reference.log_prob(&context_id, a),
            context_id,
            turn,
            logp_current: lp,
            logp_old: lp,
            masked: true,
        });
        if let Some(reply) = &step.sensor_reply {
            out.push(TokenRecord {
                trajectory_id: trajectory_id.to_string(),
                context_id: "sensor".to_string(),
                symbol: reply.text().to_string(),
                turn,
                logp_current: 0.0,
                logp_old: 0.0,
                logp_ref: 0.0,
                masked: false,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{parse_reasoner_output, run_episode, DialogueBudget};
    use crate::sensor::SensorConfig;
    use crate::util::seeded_rng;
    use crate::world::{generate_task, GenerationSpec, OracleSensor};

    #[test]
    fn vocabulary_shape_and_renders_parse() {
        let v = toy_vocabulary();
        assert_eq!(v.len(), 17);
        let t = generate_task(3, &GenerationSpec::default()).unwrap();
        for s in &v {
            let p = parse_reasoner_output(&render_symbol(s, &t.item));
            assert!(!matches!(p.action, Action::Malformed(_)), "{s}");
        }
    }

    #[test]
    fn records_match_the_episode() {
        let t = generate_task(5, &GenerationSpec::default()).unwrap();
        let sensor = OracleSensor::from_tasks([&t], SensorConfig::default());
        let policy = toy_policy(1.0);
        let mut rng = seeded_rng(9);
        for _ in 0..20 {
            let ep = run_episode(&t.item, &ToyReasoner { policy: &policy }, &sensor, &DialogueBudget::default(), &mut rng)
                .unwrap();
            let recs = token_records("x", &t.item, &ep.steps, &policy, &policy).unwrap();
            assert_eq!(recs.iter().filter(|r| r.masked).count(), ep.steps.len());
            assert_eq!(recs.iter().filter(|r| !r.masked).count(), ep.rounds);
            for r in recs.iter().filter(|r| r.masked) {
                assert!((r.logp_current - libm::log(1.0 / 17.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn context_abstracts_color_replies() {
        let t = generate_task(11, &GenerationSpec::default()).unwrap();
        let sensor = OracleSensor::from_tasks([&t], SensorConfig::default());
        let script = crate::protocol::ScriptedReasoner::new(alloc::vec![
            "My question is: What color is the man wearing?",
            "The answer is: (A)",
        ]);
        let ep = run_episode(&t.item, &script, &sensor, &DialogueBudget::default(), &mut seeded_rng(0)).unwrap();
        let key = context_key(&t.item, &ep.steps[..1]);
        assert!(key == "ctx[color:man=match]" || key == "ctx[color:man=other]", "{key}");
        assert_eq!(context_key(&t.item, &[]), "ctx[]");
    }
}

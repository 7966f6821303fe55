//! Human-readable dialogue transcripts.

use std::fmt::Write;

use percept_core::eval::canonicalize_answer;
use percept_core::item::option_letter;
use percept_core::prompts::MALFORMED_NOTICE;
use percept_core::protocol::{Action, Episode, Termination};
use percept_core::McqItem;

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Answered => "answered",
        Termination::BudgetExhausted => "budget exhausted",
        Termination::MalformedLimit => "malformed limit",
        Termination::Aborted => "aborted",
    }
}

fn labeled(index: Option<usize>, item: &McqItem) -> String {
    match index {
        Some(i) => format!("({}) {}", option_letter(i), item.options[i]),
        None => "none".to_string(),
    }
}

/// Step-by-step rendering: thought, action and sensor reply per step, with
/// rejections verbatim. The header and verdict need the item.
pub fn render_transcript(item: Option<&McqItem>, episode: &Episode) -> String {
    let mut out = String::new();
    match item {
        Some(item) => {
            let _ = writeln!(out, "Item: {}", item.id);
            let _ = writeln!(out, "Question: {}", item.question);
            let _ = writeln!(out, "Options: {}", item.options_line());
        }
        None => {
            let _ = writeln!(out, "Item: {}", episode.item_id);
        }
    }
    for step in &episode.steps {
        let _ = writeln!(out, "\nStep {}", step.index);
        if !step.parsed.thought.is_empty() {
            let _ = writeln!(out, "Thought: {}", step.parsed.thought);
        }
        match &step.parsed.action {
            Action::Query(q) => {
                let _ = writeln!(out, "Action: My question is: \"{q}\"");
            }
            Action::Answer(a) => {
                let _ = writeln!(out, "Action: The answer is: {a}");
            }
            Action::Malformed(raw) => {
                let _ = writeln!(out, "Action: none (malformed output: {raw:?})");
                let _ = writeln!(out, "Notice: {MALFORMED_NOTICE}");
            }
        }
        match &step.sensor_reply {
            Some(reply) => {
                let _ = writeln!(out, "Sensor: {}", reply.text());
            }
            None if matches!(step.parsed.action, Action::Query(_)) => {
                let _ = writeln!(out, "Sensor: unavailable");
            }
            None => {}
        }
    }
    let _ = writeln!(out, "\nTermination: {}", termination_name(episode.termination));
    let _ = writeln!(out, "Rounds: {}  Rejections: {}", episode.rounds, episode.rejections);
    if let Some(item) = item {
        let predicted = episode.prediction_text().and_then(|t| canonicalize_answer(t, &item.options, None));
        let _ = writeln!(out, "Prediction: {}", labeled(predicted, item));
        let _ = writeln!(out, "Gold: {}", labeled(Some(item.gold_index), item));
        let _ = writeln!(out, "Correct: {}", if predicted == Some(item.gold_index) { "yes" } else { "no" });
    }
    out
}

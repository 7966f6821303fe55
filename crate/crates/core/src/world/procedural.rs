//! A hand-written reasoner that follows the causal route of synthetic tasks.

use alloc::format;
use alloc::string::String;
use rand::RngCore;

use super::task::question_color;
use super::vocab;
use crate::item::{option_letter, McqItem};
use crate::protocol::{Action, Reasoner, ReasonerError, Step};

/// Asks each person's color in turn until one matches the question, asks what
/// that person holds, and answers with the option for the held tool. It only
/// reads the question, the options and the sensor replies.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProceduralReasoner;

fn query(thought: &str, q: &str) -> String {
    format!("Thought: {thought}\nAction: My question is: {q}")
}

fn answer(thought: &str, a: &str) -> String {
    format!("Thought: {thought}\nAction: The answer is: {a}")
}

impl Reasoner for ProceduralReasoner {
    fn respond(&self, item: &McqItem, history: &[Step], _rng: &mut dyn RngCore) -> Result<String, ReasonerError> {
        let Some(color) = question_color(&item.question) else {
            return Ok(answer("The question does not follow the expected form.", "(A)"));
        };
        let mut asked = 0;
        let mut matched = None;
        let mut last_person_absent = false;
        for step in history {
            let (Action::Query(q), Some(reply)) = (&step.parsed.action, &step.sensor_reply) else { continue };
            let Some(person) = vocab::PERSONS.iter().find(|p| q.contains(&format!("the {p} "))) else { continue };
            if q.contains("holding") {
                let tool = reply.text();
                return Ok(match vocab::purpose_by_tool(tool).and_then(|p| item.options.iter().position(|o| o == p.activity)) {
                    Some(i) => answer(&format!("The {person} holds a {tool}."), &format!("({})", option_letter(i))),
                    None => answer("The held object matches no option.", "(A)"),
                });
            }
            asked += 1;
            if reply.text() == color {
                matched = Some(person);
            } else if reply.is_rejection() {
                last_person_absent = true;
            }
        }
        if let Some(person) = matched {
            return Ok(query(&format!("The {person} wears {color}."), &format!("What is the {person} holding?")));
        }
        if last_person_absent || asked >= vocab::PERSONS.len() {
            return Ok(answer("Nobody matches the described person.", "(A)"));
        }
        let person = vocab::PERSONS[asked];
        Ok(query("I need to find the person by clothing color.", &format!("What color is the {person} wearing?")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{run_episode, DialogueBudget, Termination};
    use crate::sensor::SensorConfig;
    use crate::util::seeded_rng;
    use crate::world::oracle::OracleSensor;
    use crate::world::task::{counterfactual_flip, generate_suite, GenerationSpec};
    use alloc::vec::Vec;

    #[test]
    fn solves_every_task_and_its_counterfactual() {
        let tasks = generate_suite(0, 200, &GenerationSpec::default()).unwrap();
        let flipped: Vec<_> = tasks.iter().map(counterfactual_flip).collect();
        let sensor = OracleSensor::from_tasks(tasks.iter().chain(flipped.iter()), SensorConfig::default());
        let mut rng = seeded_rng(0);
        for t in tasks.iter().chain(flipped.iter()) {
            let ep = run_episode(&t.item, &ProceduralReasoner, &sensor, &DialogueBudget::default(), &mut rng).unwrap();
            assert_eq!(ep.termination, Termination::Answered);
            assert_eq!(ep.rejections, 0);
            let letter = crate::protocol::extract_option_letter(ep.final_answer.as_deref().unwrap(), t.item.options.len());
            assert_eq!(letter, Some(t.gold_index), "{}", t.item.id);
        }
    }
}

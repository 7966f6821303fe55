use std::sync::Mutex;

use percept_core::grpo::{toy_policy, ToyReasoner};
use percept_core::protocol::{parse_reasoner_output, run_episode, Action, DialogueBudget, Termination};
use percept_core::util::seeded_rng;
use percept_core::world::{generate_suite, GenerationSpec, OracleSensor, ProceduralReasoner};
use percept_core::{Sensor, SensorConfig, SensorError, SensorReply};
use proptest::prelude::*;
use rand::Rng;

/// Records every payload it forwards.
struct Recording<S> {
    inner: S,
    payloads: Mutex<Vec<String>>,
}

impl<S: Sensor> Sensor for Recording<S> {
    fn answer(&self, image_ref: &str, query: &str) -> Result<SensorReply, SensorError> {
        self.payloads.lock().unwrap().push(format!("{image_ref}\n{query}"));
        self.inner.answer(image_ref, query)
    }
}

#[test]
fn sensor_sees_only_image_and_query() {
    let tasks = generate_suite(77, 50, &GenerationSpec::default()).unwrap();
    let budget = DialogueBudget::default();
    let mut policy = toy_policy(1.0);
    let mut rng = seeded_rng(5);
    let mut total_payloads = 0;
    for episode in 0..1000 {
        // Fresh random logits every 100 episodes so query mixes differ.
        if episode % 100 == 0 {
            for ctx in ["ctx[]", "ctx[color:man=match]", "ctx[color:man=other]"] {
                for v in policy.row_mut(ctx).iter_mut() {
                    *v = rng.random::<f64>() * 4.0 - 2.0;
                }
            }
        }
        let task = &tasks[episode % tasks.len()];
        let on = episode % 2 == 0;
        let config = if on { SensorConfig::default() } else { SensorConfig::without_rejection() };
        let sensor = Recording { inner: OracleSensor::from_tasks([task], config), payloads: Mutex::new(Vec::new()) };
        let ep = run_episode(&task.item, &ToyReasoner { policy: &policy }, &sensor, &budget, &mut rng).unwrap();

        assert!(ep.steps.len() <= budget.max_steps);
        assert_eq!(ep.termination == Termination::Answered, matches!(ep.steps.last().unwrap().parsed.action, Action::Answer(_)));
        assert!(ep.rejections <= ep.rounds && ep.rounds <= ep.steps.len());
        let payloads = sensor.payloads.into_inner().unwrap();
        assert_eq!(payloads.len(), ep.rounds);
        for (p, step) in payloads.iter().zip(ep.steps.iter().filter(|s| s.sensor_reply.is_some())) {
            assert!(!p.contains(&task.item.question), "{p}");
            for option in &task.item.options {
                assert!(!p.contains(option.as_str()), "{p} leaks {option}");
            }
            assert_eq!(*p, format!("{}\n{}", task.item.image_ref, step.parsed.action.text()));
        }
        total_payloads += payloads.len();
    }
    assert!(total_payloads > 1000);
}

#[test]
fn interleaved_dialogues_match_solo_runs() {
    let tasks = generate_suite(3, 2, &GenerationSpec::default()).unwrap();
    let sensor = OracleSensor::from_tasks(&tasks, SensorConfig::default());
    let budget = DialogueBudget::default();
    let solo: Vec<_> =
        tasks.iter().map(|t| run_episode(&t.item, &ProceduralReasoner, &sensor, &budget, &mut seeded_rng(0)).unwrap()).collect();
    let queries: Vec<Vec<(String, String)>> = solo
        .iter()
        .zip(&tasks)
        .map(|(ep, t)| ep.queries().map(|q| (t.item.image_ref.clone(), q.to_string())).collect())
        .collect();
    let longest = queries.iter().map(Vec::len).max().unwrap();
    for i in 0..longest {
        for (d, qs) in queries.iter().enumerate() {
            if let Some((img, q)) = qs.get(i) {
                let reply = sensor.answer(img, q).unwrap();
                let expected = solo[d].steps.iter().filter_map(|s| s.sensor_reply.as_ref()).nth(i).unwrap();
                assert_eq!(&reply, expected);
            }
        }
    }
}

#[test]
fn history_grows_by_one_step() {
    let tasks = generate_suite(9, 10, &GenerationSpec::default()).unwrap();
    let sensor = OracleSensor::from_tasks(&tasks, SensorConfig::default());
    let policy = toy_policy(1.0);
    let mut rng = seeded_rng(2);
    for t in &tasks {
        let ep = run_episode(&t.item, &ToyReasoner { policy: &policy }, &sensor, &DialogueBudget::default(), &mut rng).unwrap();
        for (i, s) in ep.steps.iter().enumerate() {
            assert_eq!(s.index, i + 1);
            assert_eq!(s.sensor_reply.is_some(), matches!(s.parsed.action, Action::Query(_)));
        }
    }
}

proptest! {
    #[test]
    fn parser_is_total_and_deterministic(raw in ".{0,200}") {
        let a = parse_reasoner_output(&raw);
        prop_assert_eq!(&a, &parse_reasoner_output(&raw));
        prop_assert_eq!(&a.raw, &raw);
        match &a.action {
            Action::Query(q) => prop_assert!(!q.trim().is_empty()),
            Action::Answer(t) => prop_assert!(!t.trim().is_empty()),
            Action::Malformed(r) => prop_assert_eq!(r, &raw),
        }
    }

    #[test]
    fn marker_lines_parse(thought in "[a-z ]{0,20}", body in "[a-zA-Z][a-zA-Z ?]{0,30}", answer in prop::bool::ANY) {
        let marker = if answer { "The answer is:" } else { "My question is:" };
        let raw = format!("Thought: {thought}\n{marker} {body}");
        let p = parse_reasoner_output(&raw);
        prop_assert_eq!(p.thought, thought.trim());
        prop_assert_eq!(p.action.text(), body.trim());
        prop_assert_eq!(matches!(p.action, Action::Answer(_)), answer);
    }
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use percept::cli::run_cli;
use percept::io::load_benchmark;
use percept_core::capacity::{generalization_bound, interface_capacity};
use percept_core::eval::{
    evaluate, invert_permutation, apply_permutation, self_consistency, shuffle_options, Components, DirectAnswerer,
    EvalConfig, EvalMode,
};
use percept_core::filter::{run_pipeline, FilterConfig, FilterScript, ScriptedJudge, ScriptedSolver, Solver};
use percept_core::grpo::{
    check_single_step_equivalence, gradient_check, group_advantages, grpo_objective, random_multi_turn_batch,
    random_toy_instance, toy_policy, train_toy, KlEstimator, ToyReasoner, TrainConfig, TrainReport,
};
use percept_core::item::option_letter;
use percept_core::protocol::{run_episode, DialogueBudget, ReasonerError};
use percept_core::sensor::{REJECT_AMBIGUOUS, REJECT_NON_PERCEPTION};
use percept_core::util::seeded_rng;
use percept_core::world::{counterfactual_flip, generate_suite, GenerationSpec, OracleSensor, TaskInstance};
use percept_core::{McqItem, Sensor, SensorConfig, SensorError, SensorReply};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::{Rng, RngCore};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn property<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let mut runner = TestRunner::new(PropConfig { cases, failure_persistence: None, ..PropConfig::default() });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let (mut checked, mut skipped) = (0, 0);
    let mut worst: f64 = 0.0;
    for seed in 0..40 {
        let inst = random_toy_instance(seed).map_err(|e| e.to_string())?;
        for estimator in [KlEstimator::K3, KlEstimator::Exact] {
            let g = gradient_check(&inst, estimator, 1e-5).map_err(|e| e.to_string())?;
            if g.clip_margin < 1e-4 {
                skipped += 1;
                continue;
            }
            ensure!(g.relative_error < 1e-5, "seed {seed} {estimator:?}: relative error {:.3e}", g.relative_error);
            worst = worst.max(g.relative_error);
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure!(checked >= 20, "only {checked} instances away from clip boundaries");
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("{checked} instances, {skipped} near clip boundaries skipped, worst relative error {worst:.2e}, {elapsed:.2?}"))
}

fn single_step_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let batch = random_multi_turn_batch(seed, 4, 6, 5, 1e-6);
        worst = worst.max(check_single_step_equivalence(&batch, 1e-6).map_err(|e| e.to_string())?);
    }
    ensure!(worst <= 1e-12, "worst difference {worst:.3e}");
    Ok(format!("100 batches, worst difference {worst:.2e}"))
}

fn advantage_algebra() -> Outcome {
    property(2000, (prop::collection::vec(0.0f64..1.0, 2..32), 1e-8f64..1e-2), |(rewards, eps)| {
        let a = group_advantages(&rewards, eps);
        prop_assert!(a.iter().sum::<f64>().abs() <= 1e-9);
        Ok(())
    })?;
    property(500, (prop::collection::vec(Just(0.0f64), 2..32), prop::bool::ANY), |(zeros, one)| {
        let rewards: Vec<f64> = zeros.iter().map(|_| if one { 1.0 } else { 0.0 }).collect();
        prop_assert!(group_advantages(&rewards, 1e-6).iter().all(|x| *x == 0.0));
        Ok(())
    })?;

    // Constant rewards give zero advantages and therefore a zero actor gradient.
    for seed in 0..10 {
        let mut inst = random_toy_instance(seed).map_err(|e| e.to_string())?;
        inst.batch.beta = 0.0;
        let rewards = vec![1.0; inst.batch.trajectories.len()];
        let adv = group_advantages(&rewards, 1e-4);
        for (t, a) in inst.batch.trajectories.iter_mut().zip(adv) {
            t.reward = 1.0;
            t.advantage = a;
        }
        let (value, grad) =
            grpo_objective(&inst.policy, &inst.reference, &inst.batch, KlEstimator::K3).map_err(|e| e.to_string())?;
        ensure!(value.actor == 0.0, "seed {seed}: actor {}", value.actor);
        ensure!(grad.values().flatten().all(|x| *x == 0.0), "seed {seed}: nonzero actor gradient");
    }

    // mean 0.5, population std 0.5, so each entry is ±0.5 / 0.5001.
    let a = group_advantages(&[1.0, 0.0, 0.0, 1.0], 1e-4);
    for (x, sign) in a.iter().zip([1.0, -1.0, -1.0, 1.0]) {
        ensure!((x - sign * 0.5 / 0.5001).abs() < 1e-15, "{a:?}");
        ensure!(format!("{:.5}", x.abs()) == "0.99980", "{a:?}");
    }
    Ok(format!("[1,0,0,1] -> [{:+.5}, {:+.5}, {:+.5}, {:+.5}]", a[0], a[1], a[2], a[3]))
}

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

fn sensor_isolation() -> Outcome {
    let tasks = generate_suite(4_242, 100, &GenerationSpec::default()).map_err(|e| e.to_string())?;
    let budget = DialogueBudget::default();
    ensure!(budget.max_steps == 24, "T_max is {}", budget.max_steps);
    let mut policy = toy_policy(1.0);
    let mut rng = seeded_rng(2_024);
    let (mut payloads_seen, mut longest) = (0, 0);
    for episode in 0..1000 {
        if episode % 50 == 0 {
            for ctx in ["ctx[]", "ctx[color:man=match]", "ctx[color:man=other]", "ctx[color:woman=match]"] {
                for v in policy.row_mut(ctx).iter_mut() {
                    *v = rng.random::<f64>() * 6.0 - 3.0;
                }
            }
        }
        let task = &tasks[episode % tasks.len()];
        let config = if episode % 2 == 0 { SensorConfig::default() } else { SensorConfig::without_rejection() };
        let sensor = Recording { inner: OracleSensor::from_tasks([task], config), payloads: Mutex::new(Vec::new()) };
        let ep = run_episode(&task.item, &ToyReasoner { policy: &policy }, &sensor, &budget, &mut rng)
            .map_err(|e| e.to_string())?;
        ensure!(ep.steps.len() <= 24, "episode {episode} ran {} steps", ep.steps.len());
        longest = longest.max(ep.steps.len());
        let payloads = sensor.payloads.into_inner().unwrap();
        for p in &payloads {
            ensure!(!p.contains(&task.item.question), "episode {episode}: payload carries the question");
            for option in &task.item.options {
                ensure!(!p.contains(option.as_str()), "episode {episode}: payload {p:?} carries option {option:?}");
            }
        }
        payloads_seen += payloads.len();
    }
    Ok(format!("1000 episodes, {payloads_seen} payloads, 0 leaks, longest {longest} steps"))
}

fn capacity_formulas() -> Outcome {
    let e = |r: Result<f64, _>| r.map_err(|e: percept_core::capacity::CapacityError| e.to_string());
    for k in [2, 65, 10_000] {
        ensure!(e(interface_capacity(0, k))? == 0.0, "C(0, {k}) is not 0");
    }
    let c = e(interface_capacity(24, 65))?;
    ensure!((c - 100.186).abs() <= 1e-3, "C(24, 65) = {c}");
    let b = e(generalization_bound(100.186))?;
    ensure!((b - 14.155).abs() <= 1e-3, "bound(100.186) = {b}");
    property(2000, (0usize..200, 2usize..5000, 0usize..50, 0usize..500), |(t, k, dt, dk)| {
        let c = interface_capacity(t, k).unwrap();
        prop_assert!(interface_capacity(t + dt, k).unwrap() >= c);
        prop_assert!(interface_capacity(t, k + dk).unwrap() >= c);
        let b = generalization_bound(c).unwrap();
        prop_assert!(generalization_bound(interface_capacity(t + dt, k + dk).unwrap()).unwrap() >= b);
        Ok(())
    })?;
    Ok(format!("C(24, 65) = {c:.4} nats, bound(100.186) = {b:.4}"))
}

const VOTE_FIXTURES: [(&str, Option<char>); 20] = [
    ("AAAAAABBBBB", Some('A')),
    ("BBBBBAAAAAA", Some('A')),
    ("AB", Some('A')),
    ("BA", Some('A')),
    ("-----------", None),
    ("--------B--", Some('B')),
    ("CCCCCDDDDD-", Some('C')),
    ("DDDDDCCCCC-", Some('C')),
    ("ABCDABCDABC", Some('A')),
    ("DCBADCBADCB", Some('B')),
    ("BBBBBBBBBBB", Some('B')),
    ("DDDDDDAAAAA", Some('D')),
    ("----AA--BBB", Some('B')),
    ("CC--DD--BB-", Some('B')),
    ("D", Some('D')),
    ("-", None),
    ("ABABABABAB-", Some('A')),
    ("CDCDCDCDCDD", Some('D')),
    ("BCCBBCC----", Some('C')),
    ("AAABBBCCCDD", Some('A')),
];

fn letter_index(c: char) -> Option<usize> {
    (c != '-').then(|| (c as u8 - b'A') as usize)
}

struct Table(BTreeMap<String, String>);

impl DirectAnswerer for Table {
    fn answer(&self, item: &McqItem, _: bool, _: &mut dyn RngCore) -> Result<String, ReasonerError> {
        Ok(self.0[&item.id].clone())
    }
}

fn fixture_item(i: usize) -> McqItem {
    McqItem {
        id: format!("i{i}"),
        image_ref: format!("img/i{i}"),
        question: "Which one?".into(),
        options: (0..4).map(|k| format!("option {k}")).collect(),
        gold_index: i % 4,
        category: Some(format!("cat{}", i % 3)),
    }
}

fn eval_protocol() -> Outcome {
    property(1000, (2usize..12, 0usize..12, any::<u64>(), "[a-z0-9]{1,8}"), |(n, gold, seed, id)| {
        let mut it = fixture_item(0);
        it.id = id;
        it.options = (0..n).map(|k| format!("option {k}")).collect();
        it.gold_index = gold % n;
        let (shuffled, order) = shuffle_options(&it, seed);
        prop_assert_eq!(shuffle_options(&it, seed), (shuffled.clone(), order.clone()));
        prop_assert_eq!(apply_permutation(&shuffled, &invert_permutation(&order)), it);
        Ok(())
    })?;

    for (votes, expected) in VOTE_FIXTURES {
        let v: Vec<Option<usize>> = votes.chars().map(letter_index).collect();
        let got = self_consistency(&v);
        ensure!(got == expected.and_then(letter_index), "votes {votes}: got {got:?}, expected {expected:?}");
    }

    let tasks = generate_suite(31, 60, &GenerationSpec::default()).map_err(|e| e.to_string())?;
    let items: Vec<McqItem> = tasks.iter().map(|t| t.item.clone()).collect();
    let policy = toy_policy(1.0);
    let reasoner = ToyReasoner { policy: &policy };
    let sensor = OracleSensor::from_tasks(&tasks, SensorConfig::without_rejection());
    let components = Components { reasoner: Some(&reasoner), sensor: Some(&sensor), ..Components::default() };
    let off = evaluate(&items, &EvalConfig { shuffle_seed: 3, ..EvalConfig::default() }, &components)
        .map_err(|e| e.to_string())?;
    ensure!(off.rejection_rate == 0.0, "rejection-off rate {}", off.rejection_rate);
    ensure!(off.total_queries > 0, "no queries were asked");
    let recount = off.items.iter().filter(|r| r.correct).count();
    ensure!(off.correct == recount && off.accuracy == recount as f64 / 60.0, "dialogue accuracy differs from recount");

    // Hand count: 20 items, 2 unanswered (i % 10 == 7), 7 wrong (i % 3 == 0
    // among the rest), 11 correct.
    let fixture: Vec<McqItem> = (0..20).map(fixture_item).collect();
    let table = fixture
        .iter()
        .enumerate()
        .map(|(i, it)| {
            let raw = if i % 10 == 7 {
                "I am not sure.".to_string()
            } else if i % 3 == 0 {
                format!("The answer is ({})", option_letter((it.gold_index + 1) % 4))
            } else {
                format!("The answer is {}", it.options[it.gold_index])
            };
            (it.id.clone(), raw)
        })
        .collect();
    let direct = Table(table);
    let config = EvalConfig { mode: EvalMode::E2E, k_samples: 11, ..EvalConfig::default() };
    let report = evaluate(&fixture, &config, &Components { direct: Some(&direct), ..Components::default() })
        .map_err(|e| e.to_string())?;
    ensure!(report.correct == 11 && report.unanswered == 2, "fixture recount: {} correct, {} unanswered", report.correct, report.unanswered);
    ensure!(report.accuracy == 11.0 / 20.0, "fixture accuracy {}", report.accuracy);
    Ok(format!(
        "20/20 vote fixtures, shuffle inverse holds, rejection-off rate {:.2}, fixture accuracy {:.2} = 11/20",
        off.rejection_rate, report.accuracy
    ))
}

fn random_script(yes: &[usize], correct: &[Vec<(bool, bool)>]) -> (Vec<McqItem>, FilterScript) {
    let items: Vec<McqItem> = (0..yes.len())
        .map(|i| McqItem {
            id: format!("r{i}"),
            image_ref: format!("img{i}"),
            question: "q".into(),
            options: vec!["left".into(), "right".into()],
            gold_index: 1,
            category: None,
        })
        .collect();
    let verdicts = items.iter().zip(yes).map(|(it, y)| (it.id.clone(), (0..11).map(|k| k < *y).collect())).collect();
    let say = |c: bool| if c { "The answer is: (B)".to_string() } else { "The answer is: (A)".to_string() };
    let solvers = correct
        .iter()
        .enumerate()
        .map(|(s, rows)| ScriptedSolver {
            name: format!("s{s}"),
            answers: items.iter().zip(rows).map(|(it, (a, b))| (it.id.clone(), vec![say(*a), say(*b)])).collect(),
        })
        .collect();
    (items, FilterScript { judge: ScriptedJudge { verdicts }, solvers })
}

fn data_filter() -> Outcome {
    let dir = manifest_dir().join("../../fixtures/filter");
    let items = load_benchmark(&dir.join("items.jsonl")).map_err(|e| e.to_string())?;
    let script: FilterScript =
        serde_json::from_str(&std::fs::read_to_string(dir.join("script.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let expected: Vec<String> = std::fs::read_to_string(dir.join("expected_kept.txt"))
        .map_err(|e| e.to_string())?
        .split_whitespace()
        .map(String::from)
        .collect();
    let solvers: Vec<&dyn Solver> = script.solvers.iter().map(|s| s as &dyn Solver).collect();
    let (kept, _) = run_pipeline(&items, &script.judge, &solvers, &FilterConfig::default());
    let ids: Vec<String> = kept.iter().map(|i| i.id.clone()).collect();
    ensure!(ids == expected, "kept {ids:?}, expected {expected:?}");

    let strategy = (
        prop::collection::vec(0usize..=11, 1..12),
        prop::collection::vec(prop::collection::vec((any::<bool>(), any::<bool>()), 12), 1..4),
        1usize..11,
    );
    property(300, strategy, |(yes, raw, threshold)| {
        let correct: Vec<Vec<(bool, bool)>> = raw.iter().map(|r| r[..yes.len()].to_vec()).collect();
        let (items, script) = random_script(&yes, &correct);
        let all: Vec<&dyn Solver> = script.solvers.iter().map(|s| s as &dyn Solver).collect();
        let config = FilterConfig { threshold, ..FilterConfig::default() };
        let (kept_all, loose) = run_pipeline(&items, &script.judge, &all, &config);
        let (kept_fewer, _) = run_pipeline(&items, &script.judge, &all[..all.len() - 1], &config);
        prop_assert!(kept_all.iter().all(|k| kept_fewer.contains(k)));
        let stricter = FilterConfig { threshold: threshold + 1, ..config };
        let (_, strict) = run_pipeline(&items, &script.judge, &all, &stricter);
        for (l, s) in loose.iter().zip(&strict) {
            prop_assert!(l.stage1_kept || !s.stage1_kept);
        }
        Ok(())
    })?;
    Ok(format!("kept {} of 10 ({}), monotone in solvers and threshold", ids.len(), ids.join(" ")))
}

const TRAIN_SEED: u64 = 7;
const WORLD_SEED: u64 = 1_000;
const TEST_SEED: u64 = 900_000;

fn train_and_test(world: &[TaskInstance], test: &[TaskInstance], bottleneck_on: bool) -> Result<(TrainReport, f64), String> {
    let config = TrainConfig { steps: 500, prompts_per_step: 64, learning_rate: 10.0, rng_seed: TRAIN_SEED, ..TrainConfig::default() };
    let report = train_toy(&config, world, bottleneck_on).map_err(|e| e.to_string())?;
    let sensor_config = if bottleneck_on { SensorConfig::default() } else { SensorConfig::without_rejection() };
    let sensor = OracleSensor::from_tasks(test, sensor_config);
    let reasoner = ToyReasoner { policy: &report.policy };
    let items: Vec<McqItem> = test.iter().map(|t| t.item.clone()).collect();
    let components = Components { reasoner: Some(&reasoner), sensor: Some(&sensor), ..Components::default() };
    let eval = evaluate(&items, &EvalConfig::default(), &components).map_err(|e| e.to_string())?;
    Ok((report, eval.accuracy))
}

fn directional_reproduction() -> Outcome {
    let start = Instant::now();
    let spec = GenerationSpec::default();
    ensure!(spec.spurious_rate == 0.9, "spurious rate {}", spec.spurious_rate);
    let world = generate_suite(WORLD_SEED, 400, &spec).map_err(|e| e.to_string())?;
    let test: Vec<TaskInstance> =
        generate_suite(TEST_SEED, 200, &spec).map_err(|e| e.to_string())?.iter().map(counterfactual_flip).collect();
    let (on, off) = std::thread::scope(|s| {
        let on = s.spawn(|| train_and_test(&world, &test, true));
        let off = s.spawn(|| train_and_test(&world, &test, false));
        (on.join().unwrap(), off.join().unwrap())
    });
    let ((on_report, on_acc), (off_report, off_acc)) = (on?, off?);
    let elapsed = start.elapsed();
    let (on_first, on_last) = on_report.reward_trend(25);
    let (off_first, off_last) = off_report.reward_trend(25);
    let detail = format!(
        "counterfactual accuracy on {on_acc:.3} vs off {off_acc:.3}; reward on {on_first:.3}->{on_last:.3}, off {off_first:.3}->{off_last:.3}; {elapsed:.1?}"
    );
    ensure!(on_acc - off_acc >= 0.10, "{detail}");
    ensure!(on_last > on_first && off_last > off_first, "{detail}");
    ensure!(elapsed < Duration::from_secs(300), "{detail}");
    Ok(detail)
}

fn transcript_fidelity() -> Outcome {
    let golden = manifest_dir().join("tests/golden");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let argv = ["percept", "ask", "--task-seed", "3", "--reasoner", "scripted", "--script"]
        .iter()
        .map(|s| s.to_string())
        .chain([path_str(&golden.join("ask_script.json")), "--out".into(), path_str(dir.path())])
        .collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_cli(argv, &mut out, &mut err);
    ensure!(code == 0, "exit {code}: {}", String::from_utf8_lossy(&err));
    let out = String::from_utf8(out).map_err(|e| e.to_string())?;
    let expected = std::fs::read_to_string(golden.join("ask_transcript.txt")).map_err(|e| e.to_string())?;
    ensure!(out == expected, "transcript differs from the golden file:\n{out}");

    // Structure: each step shows its action, queries are followed by the
    // sensor line, rejections appear verbatim.
    let lines: Vec<&str> = out.lines().collect();
    for (i, line) in lines.iter().enumerate() {
        if line.starts_with("Action: My question is:") {
            ensure!(lines.get(i + 1).is_some_and(|l| l.starts_with("Sensor: ")), "query without a sensor line at {i}");
        }
        if line.starts_with("Thought: ") {
            ensure!(lines.get(i + 1).is_some_and(|l| l.starts_with("Action: ")), "thought without an action at {i}");
        }
    }
    ensure!(out.contains(&format!("Sensor: {REJECT_NON_PERCEPTION}\n")), "non-perception rejection missing");
    ensure!(out.contains(&format!("Sensor: {REJECT_AMBIGUOUS}\n")), "ambiguity rejection missing");
    let steps = out.lines().filter(|l| l.starts_with("Step ")).count();
    Ok(format!("{steps} steps, byte-identical to golden file, both rejection phrases verbatim"))
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("GRPO gradient correctness", gradient_correctness),
        ("multi-turn equals single-step objective", single_step_equivalence),
        ("advantage algebra", advantage_algebra),
        ("sensor isolation", sensor_isolation),
        ("capacity formulas", capacity_formulas),
        ("eval protocol", eval_protocol),
        ("data filter fidelity", data_filter),
        ("directional reproduction", directional_reproduction),
        ("transcript fidelity", transcript_fidelity),
    ];
    // Criteria never depend on each other; a filter argument runs a subset.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| *f == n.to_string() || name.contains(f.as_str())) {
            continue;
        }
        match run() {
            Ok(detail) => println!("criterion {n} {name}: PASS ({detail})"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} {name}: FAIL ({detail})");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

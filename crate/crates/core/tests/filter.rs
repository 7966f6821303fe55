use std::collections::BTreeMap;
use std::path::PathBuf;

use percept_core::filter::{
    replay_kept, run_pipeline, FilterConfig, FilterScript, ScriptedJudge, ScriptedSolver, Solver,
};
use percept_core::McqItem;
use proptest::prelude::*;

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/filter")
}

fn load_fixture() -> (Vec<McqItem>, FilterScript, Vec<String>) {
    let dir = fixture_dir();
    let items = std::fs::read_to_string(dir.join("items.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let script = serde_json::from_str(&std::fs::read_to_string(dir.join("script.json")).unwrap()).unwrap();
    let kept = std::fs::read_to_string(dir.join("expected_kept.txt")).unwrap().lines().map(String::from).collect();
    (items, script, kept)
}

fn solvers(script: &FilterScript) -> Vec<&dyn Solver> {
    script.solvers.iter().map(|s| s as &dyn Solver).collect()
}

#[test]
fn fixture_matches_hand_application() {
    let (items, script, expected) = load_fixture();
    let (kept, log) = run_pipeline(&items, &script.judge, &solvers(&script), &FilterConfig::default());
    let ids: Vec<&str> = kept.iter().map(|i| i.id.as_str()).collect();
    assert_eq!(ids, expected);
    assert_eq!(replay_kept(&log), ids);

    let by_id: BTreeMap<&str, _> = log.iter().map(|d| (d.item_id.as_str(), d)).collect();
    assert_eq!(by_id["f1"].stage1_votes.iter().filter(|v| **v).count(), 7);
    assert!(by_id["f1"].stage1_kept && !by_id["f1"].stage2_kept);
    assert!(!by_id["f2"].stage1_kept && !by_id["f2"].stage2_evaluated);
    assert_eq!(by_id["f9"].skipped_solvers, vec!["solver-a".to_string()]);
    assert_eq!(by_id["f4"].stage2_trials["solver-a"], vec![true, false]);
    for d in &log {
        assert_eq!(d.final_kept, d.stage1_kept && d.stage2_kept);
    }
}

#[test]
fn degenerate_inputs() {
    let (items, script, _) = load_fixture();
    let (kept, log) = run_pipeline(&[], &script.judge, &solvers(&script), &FilterConfig::default());
    assert!(kept.is_empty() && log.is_empty());

    let yes = ScriptedJudge { verdicts: items.iter().map(|i| (i.id.clone(), vec![true; 11])).collect() };
    let wrong = ScriptedSolver {
        name: "never".into(),
        answers: items.iter().map(|i| (i.id.clone(), vec!["The answer is: nothing".into(); 2])).collect(),
    };
    let (kept, _) = run_pipeline(&items, &yes, &[&wrong], &FilterConfig::default());
    assert_eq!(kept, items);

    // A judge that cannot answer leaves every item undecided and excluded.
    let (kept, log) = run_pipeline(&items, &ScriptedJudge::default(), &[&wrong], &FilterConfig::default());
    assert!(kept.is_empty() && log.iter().all(|d| d.undecided));
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
    let solvers = correct
        .iter()
        .enumerate()
        .map(|(s, rows)| ScriptedSolver {
            name: format!("s{s}"),
            answers: items
                .iter()
                .zip(rows)
                .map(|(it, (a, b))| {
                    let say = |c: bool| if c { "The answer is: (B)".to_string() } else { "The answer is: (A)".to_string() };
                    (it.id.clone(), vec![say(*a), say(*b)])
                })
                .collect(),
        })
        .collect();
    (items, FilterScript { judge: ScriptedJudge { verdicts }, solvers })
}

proptest! {
    #[test]
    fn monotone_in_solvers_and_threshold(
        yes in prop::collection::vec(0usize..=11, 1..12),
        raw in prop::collection::vec(prop::collection::vec((any::<bool>(), any::<bool>()), 12), 1..4),
        threshold in 1usize..11,
    ) {
        let correct: Vec<Vec<(bool, bool)>> = raw.iter().map(|r| r[..yes.len()].to_vec()).collect();
        let (items, script) = random_script(&yes, &correct);
        let config = FilterConfig { threshold, ..FilterConfig::default() };
        let all = solvers(&script);
        let (kept_all, _) = run_pipeline(&items, &script.judge, &all, &config);
        let (kept_fewer, _) = run_pipeline(&items, &script.judge, &all[..all.len() - 1], &config);
        for k in &kept_all {
            prop_assert!(kept_fewer.contains(k));
        }

        let stricter = FilterConfig { threshold: threshold + 1, ..config.clone() };
        let (_, loose) = run_pipeline(&items, &script.judge, &all, &config);
        let (_, strict) = run_pipeline(&items, &script.judge, &all, &stricter);
        for (l, s) in loose.iter().zip(&strict) {
            prop_assert!(l.stage1_kept || !s.stage1_kept);
            prop_assert_eq!(l.stage1_kept, l.stage1_votes.iter().filter(|v| **v).count() >= threshold);
        }
    }
}

mod common;

use std::fs;

use common::fixtures::{all_negative, alternating, synthetic};
use lexloop_core::engine::{open_session, read_log, SessionConfig, SessionDir, ANNOTATION_LOG};
use lexloop_core::synth::SynthLexicon;
use lexloop_core::{
    run_session, Error, IterationConfig, Label, Oracle, Session, SimulatedOracle, Status, StrategyKind,
};
use proptest::prelude::*;

fn quick(strategy: StrategyKind) -> IterationConfig {
    IterationConfig {
        strategy,
        ..IterationConfig::default()
    }
}

#[test]
fn alternating_oracle_fills_quotas_at_forty() {
    let fx = synthetic(300, 40, 4, 1);
    let report = run_session(quick(StrategyKind::Entropy), &mut alternating(), fx.data, fx.testset).unwrap();
    assert_eq!(report.iterations.len(), 5);
    for it in &report.iterations {
        assert_eq!((it.annotations, it.positives, it.negatives, it.overflow), (40, 20, 20, 0));
        assert!(it.quotas_filled && it.trained);
    }
    assert_eq!(report.iterations.last().unwrap().labeled_size, 200);
}

#[test]
fn all_negative_oracle_hits_the_cap() {
    let fx = synthetic(500, 40, 4, 2);
    let cfg = IterationConfig {
        iterations: 3,
        ..quick(StrategyKind::Cal { k: 10 })
    };
    let report = run_session(cfg, &mut all_negative(), fx.data, fx.testset).unwrap();
    for (i, it) in report.iterations.iter().enumerate() {
        assert_eq!((it.annotations, it.positives, it.negatives), (120, 0, 20));
        assert_eq!(it.overflow, 100);
        assert!(!it.quotas_filled && !it.trained && it.metrics.is_none());
        assert_eq!(it.labeled_size, 20 * (i + 1));
    }
    assert_eq!(report.best_iteration, None);
}

/// Drives a session by hand, checking the bookkeeping after every label,
/// then replays the archive into a fresh session and checks it again.
#[test]
fn conservation_holds_after_every_annotation() {
    let fx = synthetic(260, 30, 4, 3);
    let cfg = IterationConfig {
        iterations: 3,
        ..quick(StrategyKind::Coreset)
    };
    let mut session = Session::new(cfg.clone(), fx.data.clone(), fx.testset.clone()).unwrap();
    let mut oracle = SimulatedOracle::new(fx.truth.clone());
    let mut seen = std::collections::BTreeSet::new();
    while let Some(task) = session.next_candidate().unwrap() {
        assert!(seen.insert(task.word.clone()), "{} offered twice", task.word);
        assert_eq!(session.next_candidate().unwrap().unwrap(), task);
        let label = oracle.annotate(&task.word).unwrap();
        session.submit(&task.word, label, "tester", None).unwrap();
        assert!(session.state().conservation_holds());
        assert!(session.state().current_pos.len() <= cfg.pos_quota);
        assert!(session.state().current_neg.len() <= cfg.neg_quota);
        session.finish_training().unwrap();
    }
    assert_eq!(session.status(), Status::Finished);

    let archive = session.state().archive.clone();
    let mut replayed = Session::new(cfg.clone(), fx.data, fx.testset).unwrap();
    for record in archive {
        let word = record.word.clone();
        let task = replayed.next_candidate().unwrap().unwrap();
        assert_eq!(task.word, word, "replay diverged");
        replayed.submit(&word, record.label, "tester", None).unwrap();
        assert!(replayed.state().conservation_holds());
        replayed.finish_training().unwrap();
    }
    assert_eq!(replayed.report(), session.report());
}

#[test]
fn first_iteration_is_random_then_strategy() {
    let fx = synthetic(200, 20, 4, 4);
    let mut session = Session::new(quick(StrategyKind::Entropy), fx.data, fx.testset).unwrap();
    session.run_iteration(&mut alternating()).unwrap();
    session.run_iteration(&mut alternating()).unwrap();
    let strategies: Vec<(usize, &str)> = session
        .state()
        .archive
        .iter()
        .map(|r| (r.iteration, r.strategy.as_str()))
        .collect();
    assert!(strategies[..40].iter().all(|&(t, s)| t == 1 && s == "random"));
    assert!(strategies[40..].iter().all(|&(t, s)| t == 2 && s == "entropy"));
}

#[test]
fn same_seed_gives_identical_reports() {
    for strategy in [StrategyKind::Entropy, StrategyKind::Random, StrategyKind::Cal { k: 10 }] {
        let run = |seed| {
            let fx = synthetic(250, 40, 4, 5);
            let cfg = IterationConfig { seed, ..quick(strategy) };
            run_session(cfg, &mut SimulatedOracle::new(fx.truth), fx.data, fx.testset)
                .unwrap()
                .to_json()
                .unwrap()
        };
        assert_eq!(run(9), run(9), "{strategy}");
        assert_ne!(run(9), run(10), "{strategy}");
    }
}

#[test]
fn best_iteration_has_top_macro_f1() {
    let fx = synthetic(300, 60, 4, 6);
    let report = run_session(quick(StrategyKind::Entropy), &mut SimulatedOracle::new(fx.truth), fx.data, fx.testset).unwrap();
    let best = report.best().unwrap();
    for it in &report.iterations {
        assert!(it.metrics.unwrap().macro_f1() <= best.metrics.unwrap().macro_f1());
    }
    assert!(report.best_model.is_some());
}

#[test]
fn submit_rejects_words_other_than_the_task() {
    let fx = synthetic(100, 10, 2, 7);
    let mut session = Session::new(quick(StrategyKind::Entropy), fx.data, fx.testset).unwrap();
    assert!(matches!(session.submit("pool000", Label::Mental, "a", None), Err(Error::Conflict(_))));
    let task = session.next_candidate().unwrap().unwrap();
    let other = fx.truth.keys().find(|w| **w != task.word).unwrap();
    assert!(matches!(session.submit(other, Label::Mental, "a", None), Err(Error::Conflict(_))));
    session.submit(&task.word, Label::Mental, "a", None).unwrap();
    assert_ne!(session.next_candidate().unwrap().unwrap().word, task.word);
}

#[test]
fn exhausted_pool_ends_the_session_early() {
    let fx = synthetic(70, 10, 2, 8);
    let report = run_session(quick(StrategyKind::Random), &mut all_negative(), fx.data, fx.testset).unwrap();
    assert_eq!(report.iterations.len(), 1);
    assert_eq!(report.iterations[0].annotations, 70);
    assert_eq!(report.iterations[0].pool_remaining, 0);
}

#[test]
fn overlapping_testset_is_rejected() {
    let fx = synthetic(60, 10, 2, 9);
    let mut test = fx.testset.clone();
    test.push(lexloop_core::LabeledExample::new(
        "pool00",
        fx.data.items["pool00"].features.clone(),
        Label::Mental,
    ));
    assert!(Session::new(quick(StrategyKind::Entropy), fx.data, test).is_err());
}

struct Dir {
    _tmp: tempfile::TempDir,
    session: std::path::PathBuf,
    lex: SynthLexicon,
}

fn session_dir(cfg: IterationConfig) -> Dir {
    let tmp = tempfile::tempdir().unwrap();
    let fx = synthetic(200, 30, 4, 10);
    let paths = fx.lex.write_to(tmp.path().join("data")).unwrap();
    let session = tmp.path().join("session");
    SessionDir::create(
        &session,
        &SessionConfig {
            iteration: cfg,
            sources: paths.sources(),
        },
    )
    .unwrap();
    Dir {
        _tmp: tmp,
        session,
        lex: fx.lex,
    }
}

fn annotate(session: &mut Session, truth: &SynthLexicon, n: usize) {
    let truth = truth.truth();
    for _ in 0..n {
        let task = session.next_candidate().unwrap().unwrap();
        session.submit(&task.word, truth[&task.word], "tester", None).unwrap();
        session.finish_training().unwrap();
    }
}

#[test]
fn resume_after_seventeen_annotations_restores_state() {
    let dir = session_dir(quick(StrategyKind::Entropy));
    let (mut live, summary) = open_session(&dir.session).unwrap();
    assert_eq!(summary.replayed, 0);
    annotate(&mut live, &dir.lex, 17);
    let pending = live.next_candidate().unwrap();

    let (mut resumed, summary) = open_session(&dir.session).unwrap();
    assert_eq!(summary.replayed, 17);
    assert_eq!(summary.stopped_at, None);
    assert_eq!(resumed.state(), live.state());
    assert_eq!(resumed.next_candidate().unwrap(), pending);
}

#[test]
fn resume_across_retraining_restores_model() {
    let dir = session_dir(quick(StrategyKind::Cal { k: 5 }));
    let (mut live, _) = open_session(&dir.session).unwrap();
    annotate(&mut live, &dir.lex, 95);
    let (resumed, summary) = open_session(&dir.session).unwrap();
    assert_eq!(summary.replayed, 95);
    assert_eq!(resumed.state(), live.state());
    assert_eq!(resumed.model(), live.model());
    assert_eq!(resumed.reports(), live.reports());
    assert!(dir.session.join("model-iter1.ckpt").exists());
}

#[test]
fn truncated_final_line_is_dropped() {
    let dir = session_dir(quick(StrategyKind::Entropy));
    let (mut live, _) = open_session(&dir.session).unwrap();
    annotate(&mut live, &dir.lex, 17);
    drop(live);
    let log = dir.session.join(ANNOTATION_LOG);
    let bytes = fs::read(&log).unwrap();
    fs::write(&log, &bytes[..bytes.len() - 9]).unwrap();

    let (resumed, summary) = open_session(&dir.session).unwrap();
    assert_eq!(summary.replayed, 16);
    assert_eq!(summary.stopped_at.as_ref().unwrap().0, 17);
    assert_eq!(resumed.state().archive.len(), 16);
    assert!(resumed.state().conservation_holds());
    assert_eq!(read_log(&fs::read(&log).unwrap()).records.len(), 16);
}

#[test]
fn corrupt_line_stops_replay_and_reports_position() {
    let dir = session_dir(quick(StrategyKind::Entropy));
    let (mut live, _) = open_session(&dir.session).unwrap();
    annotate(&mut live, &dir.lex, 10);
    drop(live);
    let log = dir.session.join(ANNOTATION_LOG);
    let text = fs::read_to_string(&log).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[6] = "{not json";
    fs::write(&log, lines.join("\n") + "\n").unwrap();

    let (resumed, summary) = open_session(&dir.session).unwrap();
    assert_eq!(summary.replayed, 6);
    assert_eq!(summary.stopped_at.unwrap().0, 7);
    assert_eq!(resumed.state().archive.len(), 6);
}

#[test]
fn replay_is_idempotent() {
    let dir = session_dir(quick(StrategyKind::Coreset));
    let (mut live, _) = open_session(&dir.session).unwrap();
    annotate(&mut live, &dir.lex, 50);
    drop(live);
    let log = dir.session.join(ANNOTATION_LOG);
    let bytes = fs::read(&log).unwrap();
    fs::write(&log, [&bytes[..], b"{\"iteration\":"].concat()).unwrap();

    let (once, _) = open_session(&dir.session).unwrap();
    let after_once = fs::read(&log).unwrap();
    let (twice, summary) = open_session(&dir.session).unwrap();
    assert_eq!(once.state(), twice.state());
    assert_eq!(fs::read(&log).unwrap(), after_once);
    assert_eq!(after_once, bytes);
    assert_eq!(summary.truncated_bytes, 0);
}

#[test]
fn replay_rejects_inconsistent_counted_flag() {
    let dir = session_dir(quick(StrategyKind::Entropy));
    let (mut live, _) = open_session(&dir.session).unwrap();
    annotate(&mut live, &dir.lex, 5);
    drop(live);
    let log = dir.session.join(ANNOTATION_LOG);
    let text = fs::read_to_string(&log).unwrap().replacen("\"counted\":true", "\"counted\":false", 1);
    fs::write(&log, text).unwrap();
    let (resumed, summary) = open_session(&dir.session).unwrap();
    assert_eq!(summary.replayed, 0);
    assert_eq!(resumed.state().archive.len(), 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Arbitrary label sequences and small quotas: no word is offered twice,
    /// iterations close exactly when the rule says so, and nothing is lost.
    #[test]
    fn loop_invariants(
        labels in proptest::collection::vec(any::<bool>(), 150),
        k1 in 0usize..6,
        k2 in 0usize..6,
        extra in 0usize..10,
        strategy in prop_oneof![
            Just(StrategyKind::Entropy),
            Just(StrategyKind::Coreset),
            Just(StrategyKind::Cal { k: 3 }),
            Just(StrategyKind::Random)
        ],
    ) {
        let fx = synthetic(60, 0, 3, 11);
        let max = (k1 + k2 + extra).max(1);
        let cfg = IterationConfig {
            iterations: 4,
            pos_quota: k1,
            neg_quota: k2,
            max_annotations: max,
            strategy,
            ..IterationConfig::default()
        };
        let mut session = Session::new(cfg, fx.data, Vec::new()).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        let mut i = 0;
        while let Some(task) = session.next_candidate().unwrap() {
            prop_assert!(seen.insert(task.word.clone()));
            let label = if labels[i % labels.len()] { Label::Mental } else { Label::Physical };
            i += 1;
            let st = session.state();
            let (pos, neg, m) = (st.current_pos.len(), st.current_neg.len(), st.annotations);
            let out = session.submit(&task.word, label, "p", None).unwrap();
            let (pos, neg) = match (label, out.record.counted) {
                (Label::Mental, true) => (pos + 1, neg),
                (Label::Physical, true) => (pos, neg + 1),
                _ => (pos, neg),
            };
            let should_close = (pos == k1 && neg == k2) || m + 1 == max || session.state().unlabeled.is_empty();
            prop_assert_eq!(out.iteration_complete, should_close);
            prop_assert!(session.state().conservation_holds());
            prop_assert!(session.state().labeled.iter().all(|e| !session.state().unlabeled.contains(&e.word)));
            session.finish_training().unwrap();
        }
        let report = session.report();
        prop_assert!(report.iterations.iter().all(|r| r.annotations <= max));
    }
}

use std::fs;
use std::path::Path;
use std::process::Command as Process;

use clap::Parser;
use lexloop_cli::args::{Cli, Command};
use lexloop_cli::commands;
use lexloop_core::dataset::load_label_file;
use lexloop_core::engine::open_session;
use lexloop_core::SimulatedOracle;
use serde_json::Value;

fn parse(args: &[&str]) -> Command {
    let mut argv = vec!["lexloop"];
    argv.extend_from_slice(args);
    Cli::parse_from(argv).command
}

fn dispatch(args: &[&str]) -> anyhow::Result<String> {
    match parse(args) {
        Command::Ingest(a) => commands::ingest(&a),
        Command::Run(a) => commands::run(&a),
        Command::Init(a) => commands::init(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Senticompare(a) => commands::senticompare(&a),
        Command::Export(a) => commands::export(&a),
        Command::Disagreement(a) => commands::disagreement(&a),
        Command::Synth(a) => commands::synth(&a),
        Command::Serve(_) => unreachable!("not exercised here"),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes synthetic data and returns `--flag value` pairs for it.
fn synth_data(dir: &Path, pool: usize, test: usize, separation: f64) -> Vec<String> {
    let out = dir.join("data");
    let text = dispatch(&[
        "synth",
        "--out",
        s(&out),
        "--pool",
        &pool.to_string(),
        "--test",
        &test.to_string(),
        "--dim",
        "4",
        "--separation",
        &separation.to_string(),
    ])
    .unwrap();
    text.lines()
        .flat_map(|l| {
            let (k, v) = l.split_once(" = ").unwrap();
            [format!("--{k}"), v.to_string()]
        })
        .collect()
}

fn without_oracle(flags: &[String]) -> Vec<&str> {
    let mut out = Vec::new();
    let mut it = flags.iter();
    while let Some(k) = it.next() {
        let v = it.next().unwrap();
        if k != "--oracle" {
            out.push(k.as_str());
            out.push(v.as_str());
        }
    }
    out
}

#[test]
fn run_is_byte_identical_across_repeats() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth_data(tmp.path(), 150, 30, 3.0);
    let mut outputs = Vec::new();
    for rep in 0..2 {
        let reports = tmp.path().join(format!("reports{rep}"));
        let mut args = vec!["run", "--strategy", "entropy,cal", "--seeds", "2", "--iterations", "3"];
        args.extend(data.iter().map(String::as_str));
        args.extend(["--reports", s(&reports)]);
        let text = dispatch(&args).unwrap();
        let mut files = Vec::new();
        for name in ["entropy-seed0.json", "entropy-seed1.json", "cal-seed0.json", "cal-seed1.json"] {
            files.push(fs::read(reports.join(name)).unwrap());
        }
        outputs.push((text, files));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert!(outputs[0].0.contains("entropy"), "{}", outputs[0].0);
}

#[test]
fn run_records_average_three_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth_data(tmp.path(), 150, 30, 3.0);
    let mut args = vec!["run", "--seeds", "3", "--iterations", "2", "--format", "records"];
    args.extend(data.iter().map(String::as_str));
    let text = dispatch(&args).unwrap();
    let rows: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 3, "{text}");
    assert_eq!(rows[0]["record"], "summary");
    assert_eq!(rows[0]["runs"], 3);
    for (i, row) in rows[1..].iter().enumerate() {
        assert_eq!(row["iteration"], i + 1);
        assert_eq!(row["runs"], 3, "{row}");
    }
}

#[test]
fn run_rejects_unknown_strategy() {
    let err = Cli::try_parse_from(["lexloop", "run", "--strategy", "bald", "--oracle", "x", "--lexicon", "x", "--vectors", "x", "--pool", "x"])
        .unwrap_err()
        .to_string();
    for name in ["entropy", "coreset", "cal", "random"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn session_init_drive_export_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth_data(tmp.path(), 200, 30, 20.0);
    let session = tmp.path().join("session");
    let mut args = vec!["init", "--session", s(&session), "--iterations", "2"];
    args.extend(without_oracle(&data));
    let text = dispatch(&args).unwrap();
    assert!(text.contains("200 pool words"), "{text}");
    // a second init must not clobber the session
    assert!(dispatch(&args).is_err());

    let truth = load_label_file(tmp.path().join("data/truth.tsv")).unwrap();
    let (mut live, _) = open_session(&session).unwrap();
    let mut oracle = SimulatedOracle::covering(truth, live.dataset()).unwrap();
    let m1 = live.run_iteration(&mut oracle).unwrap();
    let m2 = live.run_iteration(&mut oracle).unwrap();
    assert!(session.join("model-iter2.ckpt").exists());

    let records = dispatch(&["export", "--session", s(&session)]).unwrap();
    let rows: Vec<Value> = records.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), m1 + m2);
    assert_eq!(rows.iter().filter(|r| r["counted"] == true).count(), 80);
    assert!(rows.iter().all(|r| r["strategy"].is_string()));
    let table = dispatch(&["export", "--session", s(&session), "--format", "table"]).unwrap();
    assert_eq!(table.lines().count(), m1 + m2 + 1);

    // well separated clusters: the model is perfect on the testset
    let eval = dispatch(&["eval", "--session", s(&session)]).unwrap();
    assert!(eval.starts_with("iteration "), "{eval}");
    let mental = eval.lines().find(|l| l.starts_with("Mental")).unwrap();
    let physical = eval.lines().find(|l| l.starts_with("Physical")).unwrap();
    assert!(mental.trim_end().ends_with("1.00"), "{eval}");
    assert!(physical.trim_end().ends_with("1.00"), "{eval}");
    let first = dispatch(&["eval", "--session", s(&session), "--iteration", "1"]).unwrap();
    assert!(first.starts_with("iteration 1\n"));
    assert!(dispatch(&["eval", "--session", s(&session), "--iteration", "9"]).is_err());
}

#[test]
fn ingest_table2_review() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("reviews.txt");
    let lexicon = tmp.path().join("glosses.tsv");
    let out = tmp.path().join("adjectives.txt");
    let pairs = tmp.path().join("pairs.tsv");
    fs::write(&corpus, "I have found them all to be of good quality.\n").unwrap();
    fs::write(
        &lexicon,
        "good\ta\thaving desirable or positive qualities\nquality\tn\tan essential and distinguishing attribute\n",
    )
    .unwrap();
    let summary = dispatch(&[
        "ingest",
        "--corpus",
        s(&corpus),
        "--lexicon",
        s(&lexicon),
        "--out",
        s(&out),
        "--pairs",
        s(&pairs),
    ])
    .unwrap();
    assert_eq!(summary, "1 reviews, 1 candidate pairs, 1 adjectives with glosses\n");
    assert_eq!(fs::read_to_string(&out).unwrap(), "good\n");
    assert_eq!(fs::read_to_string(&pairs).unwrap(), "good\tquality\t1\n");
    let stdout = dispatch(&["ingest", "--corpus", s(&corpus), "--lexicon", s(&lexicon)]).unwrap();
    assert_eq!(stdout, "good\n");
}

#[test]
fn senticompare_and_disagreement_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let swn = tmp.path().join("swn.txt");
    let mpc = tmp.path().join("mpc.tsv");
    fs::write(
        &swn,
        "# POS\tID\tPosScore\tNegScore\tSynsetTerms\tGloss\n\
         a\t1\t0.75\t0\thappy#1\tfeeling joy\n\
         a\t2\t0\t0\twooden#1\tmade of wood\n\
         a\t3\t0.5\t0.125\tsharp#1\tintelligent\n\
         s\t4\t0\t0\tsharp#2\thaving a fine edge\n\
         n\t5\t0.5\t0\twooden#2\tnot an adjective\n",
    )
    .unwrap();
    fs::write(&mpc, "happy\tmental\nsharp\tmental\nwooden\tphysical\nmissing\tphysical\n").unwrap();
    let table = dispatch(&["senticompare", "--mpc", s(&mpc), "--swn", s(&swn)]).unwrap();
    let mental = table.lines().find(|l| l.starts_with("Mental")).unwrap();
    assert_eq!(mental.split_whitespace().collect::<Vec<_>>(), ["Mental", "50%", "0%", "50%", "2"]);
    let physical = table.lines().find(|l| l.starts_with("Physical")).unwrap();
    assert_eq!(physical.split_whitespace().collect::<Vec<_>>(), ["Physical", "0%", "100%", "0%", "1"]);
    let records = dispatch(&["senticompare", "--mpc", s(&mpc), "--swn", s(&swn), "--format", "records"]).unwrap();
    let v: Value = serde_json::from_str(&records).unwrap();
    assert_eq!(v["missing_subjectivity"], 1);

    let first = tmp.path().join("a.tsv");
    let second = tmp.path().join("b.tsv");
    let adjudicated = tmp.path().join("final.tsv");
    fs::write(&first, "w1\tmental\nw2\tmental\nw3\tphysical\nw4\tphysical\n").unwrap();
    fs::write(&second, "w1\tmental\nw2\tphysical\nw3\tphysical\n").unwrap();
    fs::write(&adjudicated, "w1\tmental\nw2\tmental\nw3\tphysical\nw4\tphysical\n").unwrap();
    let text = dispatch(&[
        "disagreement",
        "--first",
        s(&first),
        "--second",
        s(&second),
        "--adjudicated",
        s(&adjudicated),
    ])
    .unwrap();
    assert!(text.contains("skipped 1 words"), "{text}");
    let overall = text.lines().find(|l| l.starts_with("overall")).unwrap();
    assert_eq!(overall.split_whitespace().collect::<Vec<_>>(), ["overall", "3", "1", "33%"]);
}

#[test]
fn binary_reads_config_file_and_env() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth_data(tmp.path(), 100, 20, 3.0);
    let conf = tmp.path().join("lexloop.conf");
    let mut text = String::new();
    for pair in data.chunks(2) {
        text.push_str(&format!("{} = {}\n", pair[0].trim_start_matches("--"), pair[1]));
    }
    text.push_str("iterations = 1\nformat = records\nstrategy = cal\n");
    fs::write(&conf, text).unwrap();

    let bin = env!("CARGO_BIN_EXE_lexloop");
    let run = |extra: &[&str], env: &[(&str, &str)]| {
        let mut cmd = Process::new(bin);
        cmd.args(["--config", s(&conf), "run"]).args(extra);
        cmd.env_remove("LEXLOOP_STRATEGY").env("RUST_LOG", "warn");
        for (k, v) in env {
            cmd.env(k, v);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    let from_file = run(&[], &[]);
    assert!(from_file.contains("\"strategy\":\"cal\""), "{from_file}");
    let from_env = run(&[], &[("LEXLOOP_STRATEGY", "random")]);
    assert!(from_env.contains("\"strategy\":\"random\""), "{from_env}");
    let from_flag = run(&["--strategy", "entropy"], &[("LEXLOOP_STRATEGY", "random")]);
    assert!(from_flag.contains("\"strategy\":\"entropy\""), "{from_flag}");

    let missing = Process::new(bin)
        .args(["eval", "--session", s(&tmp.path().join("nope"))])
        .output()
        .unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));
}

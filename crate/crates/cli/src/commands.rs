//! Subcommand bodies. Each returns the text it would print so tests can
//! compare outputs byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use lexloop_core::dataset::load_label_file;
use lexloop_core::engine::{read_log, SessionConfig, SessionDir, ANNOTATION_LOG, REPORT_FILE};
use lexloop_core::eval::{aggregate_runs, disagreement_stats, metrics_table, percent, DualAnnotation};
use lexloop_core::lexicon::{ingest_corpus, parse_gloss_lexicon, parse_sentiwordnet};
use lexloop_core::senticompare::{cross_tab, word_subjectivity};
use lexloop_core::synth::{generate, SynthConfig};
use lexloop_core::{run_session, ClassMetrics, ClassifierModel, Session, SessionReport, SimulatedOracle};
use serde::Serialize;

use crate::args::{
    DisagreementArgs, EvalArgs, ExportArgs, Format, IngestArgs, InitArgs, RunArgs, SentiArgs, SynthArgs,
};

pub fn ingest(args: &IngestArgs) -> anyhow::Result<String> {
    let lexicon = parse_gloss_lexicon(&args.lexicon)?;
    let corpus = fs::File::open(&args.corpus).with_context(|| format!("opening {}", args.corpus.display()))?;
    let out = ingest_corpus(corpus, &lexicon)?;
    if let Some(path) = &args.pairs {
        let mut text = String::new();
        for p in &out.pairs {
            let _ = writeln!(text, "{}\t{}\t{}", p.adjective, p.noun, p.source_review_id);
        }
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    let list: String = out.adjectives.iter().map(|a| format!("{a}\n")).collect();
    let summary = format!(
        "{} reviews, {} candidate pairs, {} adjectives with glosses\n",
        out.reviews,
        out.pairs.len(),
        out.adjectives.len()
    );
    match &args.out {
        Some(path) => {
            fs::write(path, list).with_context(|| format!("writing {}", path.display()))?;
            Ok(summary)
        }
        None => {
            log::info!("{}", summary.trim_end());
            Ok(list)
        }
    }
}

/// Runs `seeds` sessions per strategy and returns the aggregate report.
pub fn run(args: &RunArgs) -> anyhow::Result<String> {
    let truth = load_label_file(&args.oracle)?;
    let (data, testset) = args.data.sources().load(Path::new("."))?;
    let oracle = SimulatedOracle::covering(truth, &data)?;
    if let Some(dir) = &args.reports {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut out = String::new();
    for &name in &args.strategy {
        let mut reports = Vec::new();
        for seed in args.seed..args.seed + args.seeds {
            let cfg = args.r#loop.iteration_config(name, seed)?;
            log::info!("{name} seed {seed}");
            let report = run_session(cfg, &mut oracle.clone(), data.clone(), testset.clone())?;
            if let Some(dir) = &args.reports {
                let path = dir.join(format!("{}-seed{seed}.json", name.name()));
                fs::write(&path, report.to_json()?).with_context(|| format!("writing {}", path.display()))?;
            }
            reports.push(report);
        }
        let table = aggregate_runs(&reports)?;
        match args.format {
            Format::Table => {
                out.push_str(&table.to_table());
                out.push('\n');
            }
            Format::Records => out.push_str(&table.to_records()?),
        }
    }
    Ok(out)
}

pub fn init(args: &InitArgs) -> anyhow::Result<String> {
    let config = SessionConfig {
        iteration: args.r#loop.iteration_config(args.strategy, args.seed)?,
        sources: args.data.sources(),
    };
    let cwd = std::env::current_dir()?;
    let absolute = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { cwd.join(p) };
    let config = SessionConfig {
        sources: lexloop_core::engine::DataSources {
            lexicon: absolute(&config.sources.lexicon),
            vectors: absolute(&config.sources.vectors),
            pool: absolute(&config.sources.pool),
            testset: config.sources.testset.as_deref().map(absolute),
            space: config.sources.space,
        },
        ..config
    };
    // fail before touching the directory if the data does not load
    let (data, testset) = config.sources.load(&cwd)?;
    let pool = data.len();
    Session::new(config.iteration.clone(), data, testset)?;
    SessionDir::create(&args.session, &config)?;
    Ok(format!(
        "created session {} ({} pool words, strategy {})\n",
        args.session.display(),
        pool,
        config.iteration.strategy
    ))
}

fn load_report(session: &Path) -> anyhow::Result<Option<SessionReport>> {
    let path = session.join(REPORT_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Some(serde_json::from_str(&text)?))
}

/// Scores a session checkpoint on the session's testset. Without
/// `--iteration`, uses the report's best iteration, else the latest checkpoint.
pub fn eval(args: &EvalArgs) -> anyhow::Result<String> {
    let config = SessionDir::load_config(&args.session)?;
    let (_, testset) = config.sources.load(&args.session)?;
    if testset.is_empty() {
        bail!("session has no testset configured");
    }
    let iteration = match args.iteration {
        Some(t) => t,
        None => match load_report(&args.session)?.and_then(|r| r.best_iteration) {
            Some(t) => t,
            None => latest_checkpoint(&args.session)?.ok_or_else(|| anyhow!("no checkpoints yet"))?,
        },
    };
    let path = args.session.join(format!("model-iter{iteration}.ckpt"));
    let model = ClassifierModel::load(&path).with_context(|| format!("loading {}", path.display()))?;
    let metrics = ClassMetrics::evaluate(&model, &testset)?;
    Ok(format!("iteration {iteration}\n{}", metrics_table(&metrics)))
}

fn latest_checkpoint(session: &Path) -> anyhow::Result<Option<usize>> {
    let mut latest = None;
    for entry in fs::read_dir(session)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if let Some(t) = name
            .strip_prefix("model-iter")
            .and_then(|s| s.strip_suffix(".ckpt"))
            .and_then(|s| s.parse::<usize>().ok())
        {
            latest = latest.max(Some(t));
        }
    }
    Ok(latest)
}

pub fn senticompare(args: &SentiArgs) -> anyhow::Result<String> {
    let mpc = load_label_file(&args.mpc)?;
    let synsets = parse_sentiwordnet(&args.swn)?;
    let tab = cross_tab(&mpc, &word_subjectivity(&synsets))?;
    Ok(match args.format {
        Format::Table => tab.to_table(),
        Format::Records => serde_json::to_string(&tab)? + "\n",
    })
}

#[derive(Debug, Serialize)]
struct ExportRow<'a> {
    word: &'a str,
    label: lexloop_core::Label,
    iteration: usize,
    counted: bool,
    annotator: &'a str,
    strategy: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'a str>,
}

/// One row per logged annotation; `counted` separates labeled-set members
/// from quota overflow.
pub fn export(args: &ExportArgs) -> anyhow::Result<String> {
    let path = args.session.join(ANNOTATION_LOG);
    let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    let log = read_log(&bytes);
    if let Some((line, why)) = &log.error {
        log::warn!("{}: stopped at line {line}: {why}", path.display());
    }
    let mut out = String::new();
    if args.format == Format::Table {
        out.push_str("word\tlabel\titeration\tcounted\tannotator\n");
    }
    for r in &log.records {
        match args.format {
            Format::Records => {
                let row = ExportRow {
                    word: &r.word,
                    label: r.label,
                    iteration: r.iteration,
                    counted: r.counted,
                    annotator: &r.annotator,
                    strategy: &r.strategy,
                    note: r.note.as_deref(),
                };
                out.push_str(&serde_json::to_string(&row)?);
                out.push('\n');
            }
            Format::Table => {
                let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", r.word, r.label, r.iteration, r.counted, r.annotator);
            }
        }
    }
    Ok(out)
}

pub fn disagreement(args: &DisagreementArgs) -> anyhow::Result<String> {
    let first = load_label_file(&args.first)?;
    let second = load_label_file(&args.second)?;
    let adjudicated = load_label_file(&args.adjudicated)?;
    let rows: Vec<DualAnnotation> = adjudicated
        .iter()
        .map(|(word, &label)| DualAnnotation {
            word: word.clone(),
            first: first.get(word).copied(),
            second: second.get(word).copied(),
            adjudicated: label,
        })
        .collect();
    let stats = disagreement_stats(&rows);
    let mut out = format!("{:<10}{:>8}{:>10}{:>8}\n", "", "words", "disagree", "rate");
    for (label, row) in &stats.per_class {
        let _ = writeln!(
            out,
            "{:<10}{:>8}{:>10}{:>8}",
            label.to_string(),
            row.total,
            row.disagreements,
            percent(row.rate)
        );
    }
    let o = stats.overall;
    let _ = writeln!(out, "{:<10}{:>8}{:>10}{:>8}", "overall", o.total, o.disagreements, percent(o.rate));
    if !stats.skipped.is_empty() {
        let _ = writeln!(out, "skipped {} words missing a label", stats.skipped.len());
    }
    Ok(out)
}

pub fn synth(args: &SynthArgs) -> anyhow::Result<String> {
    let lex = generate(&SynthConfig {
        pool_size: args.pool,
        test_size: args.test,
        dim: args.dim,
        separation: args.separation,
        mental_fraction: args.mental_fraction,
        seed: args.seed,
    })?;
    let paths = lex.write_to(&args.out)?;
    let mut out = String::new();
    for (name, path) in [
        ("lexicon", &paths.lexicon),
        ("vectors", &paths.vectors),
        ("pool", &paths.pool),
        ("testset", &paths.testset),
        ("oracle", &paths.truth),
    ] {
        let _ = writeln!(out, "{name} = {}", path.display());
    }
    Ok(out)
}


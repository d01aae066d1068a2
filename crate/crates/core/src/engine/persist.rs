//! Session directories: a key-value `config`, an append-only JSONL
//! `annotations.log`, one checkpoint per retrain and the final `report`.
//!
//! State is never snapshotted. Resuming rebuilds the pool from the config,
//! replays the log and retrains deterministically at each iteration end.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{IterationConfig, Session, SessionRecord, SessionReport};
use crate::classifier::{ClassifierModel, LabeledExample};
use crate::dataset::{load_label_file, load_word_list, Dataset};
use crate::embedding::{load_vectors, StrategySpace};
use crate::error::{Error, Result};
use crate::lexicon::parse_gloss_lexicon;
use crate::strategies::StrategyKind;

pub const CONFIG_FILE: &str = "config";
pub const ANNOTATION_LOG: &str = "annotations.log";
pub const REPORT_FILE: &str = "report";

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(idx + 1, "expected key = value"))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key} = {value:?}: {e}")))
}

/// Where a session's words and vectors come from.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSources {
    pub lexicon: PathBuf,
    pub vectors: PathBuf,
    pub pool: PathBuf,
    pub testset: Option<PathBuf>,
    pub space: StrategySpace,
}

impl DataSources {
    /// Loads the pool and the labeled testset. Relative paths resolve against `base`.
    pub fn load(&self, base: &Path) -> Result<(Dataset, Vec<LabeledExample>)> {
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let lexicon = parse_gloss_lexicon(resolve(&self.lexicon))?;
        let store = load_vectors(resolve(&self.vectors))?;
        let pool = load_word_list(resolve(&self.pool))?;
        let data = Dataset::from_resources(&pool, &lexicon, &store, self.space)?;
        let testset = match &self.testset {
            Some(path) => {
                let labels = load_label_file(resolve(path))?;
                let words: Vec<&String> = labels.keys().collect();
                Dataset::from_resources(&words, &lexicon, &store, self.space)?.examples(&labels)?
            }
            None => Vec::new(),
        };
        Ok((data, testset))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub iteration: IterationConfig,
    pub sources: DataSources,
}

impl SessionConfig {
    pub fn to_text(&self) -> String {
        let c = &self.iteration;
        let t = &c.train;
        let cal_k = match c.strategy {
            StrategyKind::Cal { k } => k,
            _ => crate::strategies::DEFAULT_CAL_K,
        };
        let mut pairs = vec![
            ("strategy", c.strategy.name().to_string()),
            ("cal_k", cal_k.to_string()),
            ("iterations", c.iterations.to_string()),
            ("pos_quota", c.pos_quota.to_string()),
            ("neg_quota", c.neg_quota.to_string()),
            ("max_annotations", c.max_annotations.to_string()),
            ("seed", c.seed.to_string()),
            ("warm_start", c.warm_start.to_string()),
            ("epochs", t.epochs.to_string()),
            ("lr", t.lr.to_string()),
            ("lr_drop_epoch", t.lr_drop_epoch.to_string()),
            ("lr_drop_factor", t.lr_drop_factor.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("weight_decay", t.weight_decay.to_string()),
            ("dev_fraction", t.dev_fraction.to_string()),
            ("hidden_dim", t.hidden_dim.to_string()),
            ("dropout_prob", t.dropout_prob.to_string()),
            ("threshold", t.threshold.to_string()),
            ("lexicon", self.sources.lexicon.display().to_string()),
            ("vectors", self.sources.vectors.display().to_string()),
            ("pool", self.sources.pool.display().to_string()),
        ];
        if let Some(test) = &self.sources.testset {
            pairs.push(("testset", test.display().to_string()));
        }
        pairs.push((
            "space",
            match self.sources.space {
                StrategySpace::WordVector => "word",
                StrategySpace::GlossMean => "gloss",
            }
            .to_string(),
        ));
        let mut out = String::from("# lexloop session\n");
        for (k, v) in pairs {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let map = parse_kv(text)?;
        let mut c = IterationConfig::default();
        let mut strategy = "entropy".to_string();
        let mut cal_k = crate::strategies::DEFAULT_CAL_K;
        let mut lexicon = None;
        let mut vectors = None;
        let mut pool = None;
        let mut testset = None;
        let mut space = StrategySpace::WordVector;
        for (key, value) in &map {
            let v = value.as_str();
            match key.as_str() {
                "strategy" => strategy = v.to_string(),
                "cal_k" => cal_k = parse_value(key, v)?,
                "iterations" => c.iterations = parse_value(key, v)?,
                "pos_quota" => c.pos_quota = parse_value(key, v)?,
                "neg_quota" => c.neg_quota = parse_value(key, v)?,
                "max_annotations" => c.max_annotations = parse_value(key, v)?,
                "seed" => c.seed = parse_value(key, v)?,
                "warm_start" => c.warm_start = parse_value(key, v)?,
                "epochs" => c.train.epochs = parse_value(key, v)?,
                "lr" => c.train.lr = parse_value(key, v)?,
                "lr_drop_epoch" => c.train.lr_drop_epoch = parse_value(key, v)?,
                "lr_drop_factor" => c.train.lr_drop_factor = parse_value(key, v)?,
                "batch_size" => c.train.batch_size = parse_value(key, v)?,
                "weight_decay" => c.train.weight_decay = parse_value(key, v)?,
                "dev_fraction" => c.train.dev_fraction = parse_value(key, v)?,
                "hidden_dim" => c.train.hidden_dim = parse_value(key, v)?,
                "dropout_prob" => c.train.dropout_prob = parse_value(key, v)?,
                "threshold" => c.train.threshold = parse_value(key, v)?,
                "lexicon" => lexicon = Some(PathBuf::from(v)),
                "vectors" => vectors = Some(PathBuf::from(v)),
                "pool" => pool = Some(PathBuf::from(v)),
                "testset" => testset = Some(PathBuf::from(v)),
                "space" => {
                    space = match v {
                        "word" => StrategySpace::WordVector,
                        "gloss" => StrategySpace::GlossMean,
                        _ => return Err(Error::Config(format!("space = {v:?}: expected word or gloss"))),
                    }
                }
                _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
            }
        }
        c.strategy = match strategy.parse::<StrategyKind>()? {
            StrategyKind::Cal { .. } => StrategyKind::cal(cal_k)?,
            other => other,
        };
        c.validate()?;
        let need = |p: Option<PathBuf>, key: &str| p.ok_or_else(|| Error::Config(format!("missing config key {key:?}")));
        Ok(Self {
            iteration: c,
            sources: DataSources {
                lexicon: need(lexicon, "lexicon")?,
                vectors: need(vectors, "vectors")?,
                pool: need(pool, "pool")?,
                testset,
                space,
            },
        })
    }
}

/// Writer half of a session directory.
#[derive(Debug)]
pub struct SessionDir {
    root: PathBuf,
    log: File,
}

impl SessionDir {
    /// Creates a new session directory. Fails if one already exists there.
    pub fn create(root: impl AsRef<Path>, config: &SessionConfig) -> Result<Self> {
        let root = root.as_ref();
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        let cfg_path = root.join(CONFIG_FILE);
        if cfg_path.exists() {
            return Err(Error::Config(format!("{} already holds a session", root.display())));
        }
        fs::write(&cfg_path, config.to_text()).map_err(|e| Error::io(&cfg_path, e))?;
        Self::open(root)
    }

    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let path = root.join(ANNOTATION_LOG);
        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(Self { root, log })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn load_config(root: impl AsRef<Path>) -> Result<SessionConfig> {
        let path = root.as_ref().join(CONFIG_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        SessionConfig::from_text(&text)
    }

    /// Appends one record and syncs it to disk.
    pub fn append(&mut self, record: &SessionRecord) -> Result<()> {
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        let path = self.root.join(ANNOTATION_LOG);
        self.log
            .write_all(line.as_bytes())
            .and_then(|_| self.log.flush())
            .and_then(|_| self.log.sync_data())
            .map_err(|e| Error::io(path, e))
    }

    fn truncate(&mut self, len: u64) -> Result<()> {
        let path = self.root.join(ANNOTATION_LOG);
        self.log
            .set_len(len)
            .and_then(|_| self.log.sync_data())
            .map_err(|e| Error::io(path, e))
    }

    pub fn model_path(&self, iteration: usize) -> PathBuf {
        self.root.join(format!("model-iter{iteration}.ckpt"))
    }

    pub fn save_model(&mut self, iteration: usize, model: &ClassifierModel) -> Result<()> {
        model.save(self.model_path(iteration))
    }

    pub fn save_report(&mut self, report: &SessionReport) -> Result<()> {
        let path = self.root.join(REPORT_FILE);
        fs::write(&path, report.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// The valid prefix of a log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogReplay {
    pub records: Vec<SessionRecord>,
    /// Byte offset just past each record's newline.
    pub ends: Vec<u64>,
    /// 1-based line and reason for the first unreadable line.
    pub error: Option<(usize, String)>,
}

/// Reads records up to the first malformed or unterminated line.
pub fn read_log(bytes: &[u8]) -> LogReplay {
    let mut out = LogReplay {
        records: Vec::new(),
        ends: Vec::new(),
        error: None,
    };
    let mut offset = 0usize;
    let mut line_no = 0;
    while offset < bytes.len() {
        line_no += 1;
        let Some(nl) = bytes[offset..].iter().position(|&b| b == b'\n') else {
            out.error = Some((line_no, "truncated record (no trailing newline)".into()));
            break;
        };
        let line = &bytes[offset..offset + nl];
        match serde_json::from_slice::<SessionRecord>(line) {
            Ok(rec) => {
                out.records.push(rec);
                offset += nl + 1;
                out.ends.push(offset as u64);
            }
            Err(e) => {
                out.error = Some((line_no, e.to_string()));
                break;
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResumeSummary {
    pub replayed: usize,
    /// Line number and reason where replay stopped, if it did not reach the end.
    pub stopped_at: Option<(usize, String)>,
    /// Bytes dropped from the end of the log.
    pub truncated_bytes: u64,
}

/// Rebuilds a session from its directory. Replay stops at the first corrupt
/// or inconsistent record, and the log is cut back to the valid prefix so
/// new annotations continue from there.
pub fn open_session(root: impl AsRef<Path>) -> Result<(Session, ResumeSummary)> {
    let root = root.as_ref();
    let config = SessionDir::load_config(root)?;
    let (data, testset) = config.sources.load(root)?;
    let mut session = Session::new(config.iteration, data, testset)?;

    let log_path = root.join(ANNOTATION_LOG);
    let bytes = match fs::read(&log_path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(Error::io(&log_path, e)),
    };
    let log = read_log(&bytes);
    let mut sink = SessionDir::open(root)?;
    let mut stopped_at = log.error.clone();
    let mut valid_end = log.ends.last().copied().unwrap_or(0);
    let mut replayed = 0;

    session.attach(sink);
    for (i, record) in log.records.into_iter().enumerate() {
        if let Err(e) = session.replay(record) {
            stopped_at = Some((i + 1, e.to_string()));
            valid_end = if i == 0 { 0 } else { log.ends[i - 1] };
            break;
        }
        replayed += 1;
    }
    session.finish_training()?;
    sink = session.sink.take().expect("attached above");

    let truncated_bytes = bytes.len() as u64 - valid_end;
    if truncated_bytes > 0 {
        if let Some((line, why)) = &stopped_at {
            log::warn!("{}: replay stopped at line {line}: {why}", log_path.display());
        }
        sink.truncate(valid_end)?;
    }
    session.attach(sink);
    Ok((
        session,
        ResumeSummary {
            replayed,
            stopped_at,
            truncated_bytes,
        },
    ))
}

//! The acquisition loop.
//!
//! Each iteration draws words one at a time (uniformly at random in the
//! first iteration, by the configured strategy afterwards) until both
//! per-iteration quotas are full or the annotation cap is hit. Annotations
//! beyond a full quota are archived but do not join the labeled set. The
//! classifier is then retrained on everything labeled so far.
//!
//! [`Session`] is a step-wise state machine so the same bookkeeping drives
//! batch simulations ([`Session::run_iteration`], [`run_session`]) and the
//! human annotation service (`next_candidate` / `submit` / `install`).

mod persist;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{train_from, ClassifierModel, LabeledExample, TrainConfig, TrainOutcome};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::eval::ClassMetrics;
use crate::label::Label;
use crate::strategies::{select, PoolItem, PoolView, StrategyKind};

pub use persist::{
    open_session, parse_kv, read_log, DataSources, LogReplay, ResumeSummary, SessionConfig, SessionDir,
    ANNOTATION_LOG, CONFIG_FILE, REPORT_FILE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    /// Number of iterations (T).
    pub iterations: usize,
    /// Positive (Mental) quota per iteration (K1).
    pub pos_quota: usize,
    /// Negative (Physical) quota per iteration (K2).
    pub neg_quota: usize,
    /// Annotation cap per iteration (M).
    pub max_annotations: usize,
    pub strategy: StrategyKind,
    pub seed: u64,
    /// Continue from the previous iteration's model instead of retraining
    /// from scratch.
    pub warm_start: bool,
    pub train: TrainConfig,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            iterations: 5,
            pos_quota: 20,
            neg_quota: 20,
            max_annotations: 120,
            strategy: StrategyKind::Entropy,
            seed: 0,
            warm_start: false,
            train: TrainConfig::default(),
        }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.pos_quota + self.neg_quota > self.max_annotations {
            return Err(Error::Config(format!(
                "quotas {} + {} exceed the annotation cap {}",
                self.pos_quota, self.neg_quota, self.max_annotations
            )));
        }
        if let StrategyKind::Cal { k: 0 } = self.strategy {
            return Err(Error::Config("cal k must be at least 1".into()));
        }
        self.train.validate()
    }

    /// Training seed for iteration `t` (0-based).
    pub fn train_seed(&self, t: usize) -> u64 {
        self.seed
            .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(t as u64 + 1))
    }
}

/// Generator for the `index`-th annotation pick of a session. Deriving one
/// stream per pick keeps random selection reproducible on log replay.
pub fn pick_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// One annotation as written to the durable log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    /// 1-based iteration the annotation belongs to.
    pub iteration: usize,
    pub word: String,
    pub label: Label,
    pub strategy: String,
    /// Whether the annotation entered the labeled set (false on quota overflow).
    pub counted: bool,
    pub timestamp_ms: u64,
    pub annotator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolState {
    pub initial_size: usize,
    pub unlabeled: BTreeSet<String>,
    pub labeled: Vec<LabeledExample>,
    pub current_pos: Vec<LabeledExample>,
    pub current_neg: Vec<LabeledExample>,
    /// Every annotation, counted or not, in order.
    pub archive: Vec<SessionRecord>,
    /// Completed iterations (t).
    pub iteration: usize,
    /// Annotations in the current iteration (m).
    pub annotations: usize,
}

impl PoolState {
    fn new<'a>(words: impl Iterator<Item = &'a String>) -> Self {
        let unlabeled: BTreeSet<String> = words.cloned().collect();
        Self {
            initial_size: unlabeled.len(),
            unlabeled,
            labeled: Vec::new(),
            current_pos: Vec::new(),
            current_neg: Vec::new(),
            archive: Vec::new(),
            iteration: 0,
            annotations: 0,
        }
    }

    pub fn overflow_count(&self) -> usize {
        self.archive.iter().filter(|r| !r.counted).count()
    }

    /// Every initial word is unlabeled, labeled, buffered or overflowed.
    pub fn conservation_holds(&self) -> bool {
        self.initial_size
            == self.unlabeled.len()
                + self.labeled.len()
                + self.current_pos.len()
                + self.current_neg.len()
                + self.overflow_count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Annotating,
    Training,
    Finished,
}

/// The word currently offered for annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub word: String,
    pub glosses: Vec<String>,
    /// 1-based.
    pub iteration: usize,
    pub strategy: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitOutcome {
    pub record: SessionRecord,
    pub iteration_complete: bool,
}

/// Per-iteration summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    /// 1-based.
    pub iteration: usize,
    /// m: annotations made this iteration, including overflow.
    pub annotations: usize,
    pub positives: usize,
    pub negatives: usize,
    pub overflow: usize,
    pub quotas_filled: bool,
    pub labeled_size: usize,
    pub pool_remaining: usize,
    pub trained: bool,
    pub best_epoch: Option<usize>,
    pub dev_accuracy: Option<f64>,
    pub metrics: Option<ClassMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub strategy: String,
    pub seed: u64,
    pub config: IterationConfig,
    pub iterations: Vec<IterationReport>,
    /// 1-based iteration whose model scored the best macro F1 on the
    /// testset (the last trained iteration without a testset).
    pub best_iteration: Option<usize>,
    pub best_model: Option<ClassifierModel>,
}

impl SessionReport {
    pub fn best(&self) -> Option<&IterationReport> {
        let t = self.best_iteration?;
        self.iterations.iter().find(|r| r.iteration == t)
    }

    pub fn mean_annotations(&self) -> f64 {
        if self.iterations.is_empty() {
            return 0.0;
        }
        self.iterations.iter().map(|r| r.annotations as f64).sum::<f64>() / self.iterations.len() as f64
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// A source of labels.
pub trait Oracle {
    fn annotate(&mut self, word: &str) -> Result<Label>;
}

impl<F> Oracle for F
where
    F: FnMut(&str) -> Result<Label>,
{
    fn annotate(&mut self, word: &str) -> Result<Label> {
        self(word)
    }
}

/// Answers from a ground-truth map.
#[derive(Debug, Clone, Default)]
pub struct SimulatedOracle {
    truth: BTreeMap<String, Label>,
}

impl SimulatedOracle {
    pub fn new(truth: BTreeMap<String, Label>) -> Self {
        Self { truth }
    }

    /// Fails unless every pool word has a label.
    pub fn covering(truth: BTreeMap<String, Label>, data: &Dataset) -> Result<Self> {
        if let Some(w) = data.items.keys().find(|w| !truth.contains_key(*w)) {
            return Err(Error::Oracle(format!("no truth label for pool word {w:?}")));
        }
        Ok(Self::new(truth))
    }
}

impl Oracle for SimulatedOracle {
    fn annotate(&mut self, word: &str) -> Result<Label> {
        self.truth
            .get(word)
            .copied()
            .ok_or_else(|| Error::Oracle(format!("no truth label for {word:?}")))
    }
}

/// Snapshot of training inputs, runnable without holding the session.
#[derive(Debug, Clone)]
pub struct TrainJob {
    pub iteration: usize,
    pub data: Vec<LabeledExample>,
    pub config: TrainConfig,
    pub init: Option<ClassifierModel>,
}

impl TrainJob {
    /// `Ok(None)` when the labeled set lacks one of the classes.
    pub fn run(&self) -> Result<Option<TrainOutcome>> {
        match train_from(self.init.as_ref(), &self.data, &self.config) {
            Ok(out) => Ok(Some(out)),
            Err(Error::NeedsBothClasses) => {
                log::warn!(
                    "iteration {}: labeled set lacks a class, keeping the previous model",
                    self.iteration + 1
                );
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ClosedIteration {
    annotations: usize,
    positives: usize,
    negatives: usize,
    overflow: usize,
    quotas_filled: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct Pending {
    word: String,
    strategy: StrategyKind,
}

pub struct Session {
    cfg: IterationConfig,
    data: Dataset,
    testset: Vec<LabeledExample>,
    state: PoolState,
    model: Option<ClassifierModel>,
    pending: Option<Pending>,
    closed: Option<ClosedIteration>,
    status: Status,
    reports: Vec<IterationReport>,
    best: Option<(usize, f64, ClassifierModel)>,
    sink: Option<SessionDir>,
}

impl Session {
    pub fn new(cfg: IterationConfig, data: Dataset, testset: Vec<LabeledExample>) -> Result<Self> {
        cfg.validate()?;
        if data.is_empty() {
            return Err(Error::EmptyPool);
        }
        if let Some(t) = testset.iter().find(|t| data.items.contains_key(&t.word)) {
            return Err(Error::Config(format!("testset word {:?} is also in the pool", t.word)));
        }
        let state = PoolState::new(data.items.keys());
        Ok(Self {
            cfg,
            data,
            testset,
            state,
            model: None,
            pending: None,
            closed: None,
            status: Status::Annotating,
            reports: Vec::new(),
            best: None,
            sink: None,
        })
    }

    pub fn attach(&mut self, sink: SessionDir) {
        self.sink = Some(sink);
    }

    pub fn config(&self) -> &IterationConfig {
        &self.cfg
    }

    pub fn state(&self) -> &PoolState {
        &self.state
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn model(&self) -> Option<&ClassifierModel> {
        self.model.as_ref()
    }

    pub fn reports(&self) -> &[IterationReport] {
        &self.reports
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn testset(&self) -> &[LabeledExample] {
        &self.testset
    }

    /// 1-based number of the iteration in progress.
    pub fn current_iteration(&self) -> usize {
        self.state.iteration + 1
    }

    fn effective_strategy(&self) -> StrategyKind {
        if self.state.iteration == 0 {
            return StrategyKind::Random;
        }
        let fallback = match self.cfg.strategy {
            StrategyKind::Entropy | StrategyKind::Cal { .. } if self.model.is_none() => true,
            StrategyKind::Coreset | StrategyKind::Cal { .. } if self.state.labeled.is_empty() => true,
            _ => false,
        };
        if fallback {
            log::warn!(
                "{} cannot run yet (no model or no labeled seeds); picking at random",
                self.cfg.strategy
            );
            StrategyKind::Random
        } else {
            self.cfg.strategy
        }
    }

    fn pick(&self, strategy: StrategyKind) -> Result<String> {
        let unlabeled: Vec<&PoolItem> = self.state.unlabeled.iter().map(|w| &self.data.items[w]).collect();
        let labeled: Vec<&PoolItem> = self.state.labeled.iter().map(|e| &self.data.items[&e.word]).collect();
        let view = PoolView {
            unlabeled: &unlabeled,
            labeled: &labeled,
            model: self.model.as_ref(),
        };
        let mut rng = pick_rng(self.cfg.seed, self.state.archive.len());
        select(strategy, &view, &mut rng)
    }

    fn task_for(&self, pending: &Pending) -> Task {
        Task {
            word: pending.word.clone(),
            glosses: self.data.glosses.get(&pending.word).cloned().unwrap_or_default(),
            iteration: self.current_iteration(),
            strategy: pending.strategy.name().to_string(),
        }
    }

    /// The word awaiting a label. Repeated calls return the same task until
    /// it is labeled. `None` once the session is finished.
    pub fn next_candidate(&mut self) -> Result<Option<Task>> {
        match self.status {
            Status::Finished => return Ok(None),
            Status::Training => return Err(Error::BadState("training")),
            Status::Annotating => {}
        }
        if self.pending.is_none() {
            if self.state.unlabeled.is_empty() {
                return Ok(None);
            }
            let strategy = self.effective_strategy();
            let word = self.pick(strategy)?;
            self.pending = Some(Pending { word, strategy });
        }
        Ok(self.pending.as_ref().map(|p| self.task_for(p)))
    }

    pub fn pending_task(&self) -> Option<Task> {
        self.pending.as_ref().map(|p| self.task_for(p))
    }

    fn would_count(&self, label: Label) -> bool {
        match label {
            Label::Mental => self.state.current_pos.len() < self.cfg.pos_quota,
            Label::Physical => self.state.current_neg.len() < self.cfg.neg_quota,
        }
    }

    /// Labels the pending word. The record reaches the durable log before any
    /// state changes.
    pub fn submit(&mut self, word: &str, label: Label, annotator: &str, note: Option<String>) -> Result<SubmitOutcome> {
        if self.status != Status::Annotating {
            return Err(Error::BadState(match self.status {
                Status::Training => "training",
                _ => "finished",
            }));
        }
        let pending = match &self.pending {
            Some(p) if p.word == word => p.clone(),
            Some(p) => {
                return Err(Error::Conflict(format!(
                    "{word:?} is not the current task ({:?})",
                    p.word
                )))
            }
            None => return Err(Error::Conflict(format!("no task pending for {word:?}"))),
        };
        let record = SessionRecord {
            iteration: self.current_iteration(),
            word: word.to_string(),
            label,
            strategy: pending.strategy.name().to_string(),
            counted: self.would_count(label),
            timestamp_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
            annotator: annotator.to_string(),
            note,
        };
        if let Some(sink) = self.sink.as_mut() {
            sink.append(&record)?;
        }
        self.pending = None;
        let iteration_complete = self.apply(record.clone());
        Ok(SubmitOutcome {
            record,
            iteration_complete,
        })
    }

    /// Bookkeeping for one annotation. Returns true when the iteration ends,
    /// in which case the buffers are merged and the session awaits training.
    fn apply(&mut self, record: SessionRecord) -> bool {
        let st = &mut self.state;
        st.unlabeled.remove(&record.word);
        st.annotations += 1;
        if record.counted {
            let features = self.data.items[&record.word].features.clone();
            let example = LabeledExample::new(record.word.clone(), features, record.label);
            match record.label {
                Label::Mental => st.current_pos.push(example),
                Label::Physical => st.current_neg.push(example),
            }
        }
        st.archive.push(record);

        let quotas_filled = st.current_pos.len() == self.cfg.pos_quota && st.current_neg.len() == self.cfg.neg_quota;
        let capped = st.annotations == self.cfg.max_annotations;
        let exhausted = st.unlabeled.is_empty();
        if !(quotas_filled || capped || exhausted) {
            return false;
        }
        if exhausted && !(quotas_filled || capped) {
            log::warn!(
                "iteration {}: pool exhausted with partial quotas ({}/{} positive, {}/{} negative)",
                st.iteration + 1,
                st.current_pos.len(),
                self.cfg.pos_quota,
                st.current_neg.len(),
                self.cfg.neg_quota
            );
        }
        let overflow = st
            .archive
            .iter()
            .rev()
            .take(st.annotations)
            .filter(|r| !r.counted)
            .count();
        self.closed = Some(ClosedIteration {
            annotations: st.annotations,
            positives: st.current_pos.len(),
            negatives: st.current_neg.len(),
            overflow,
            quotas_filled,
        });
        st.labeled.append(&mut st.current_pos);
        st.labeled.append(&mut st.current_neg);
        st.annotations = 0;
        self.status = Status::Training;
        true
    }

    /// Inputs for retraining after an iteration closes.
    pub fn training_job(&self) -> Result<TrainJob> {
        if self.status != Status::Training {
            return Err(Error::BadState("not awaiting training"));
        }
        let t = self.state.iteration;
        Ok(TrainJob {
            iteration: t,
            data: self.state.labeled.clone(),
            config: TrainConfig {
                seed: self.cfg.train_seed(t),
                ..self.cfg.train.clone()
            },
            init: if self.cfg.warm_start { self.model.clone() } else { None },
        })
    }

    /// Stores the retrained model (if any), evaluates it and advances to the
    /// next iteration.
    pub fn install(&mut self, outcome: Option<TrainOutcome>) -> Result<&IterationReport> {
        let closed = self
            .closed
            .take()
            .ok_or(Error::BadState("not awaiting training"))?;
        let iteration = self.state.iteration + 1;
        let trained = outcome.is_some();
        let (best_epoch, dev_accuracy) = match &outcome {
            Some(o) => (Some(o.best_epoch), Some(o.best_dev_accuracy)),
            None => (None, None),
        };
        if let Some(o) = outcome {
            self.model = Some(o.model);
        }
        let metrics = match (&self.model, self.testset.is_empty()) {
            (Some(model), false) => Some(ClassMetrics::evaluate(model, &self.testset)?),
            _ => None,
        };
        if trained {
            let model = self.model.clone().expect("just installed");
            let score = metrics.map(|m| m.macro_f1()).unwrap_or(f64::NEG_INFINITY);
            let better = match &self.best {
                None => true,
                Some((_, best, _)) => score > *best || (metrics.is_none() && score == *best),
            };
            if better {
                self.best = Some((iteration, score, model.clone()));
            }
            if let Some(sink) = self.sink.as_mut() {
                sink.save_model(iteration, &model)?;
            }
        }
        self.reports.push(IterationReport {
            iteration,
            annotations: closed.annotations,
            positives: closed.positives,
            negatives: closed.negatives,
            overflow: closed.overflow,
            quotas_filled: closed.quotas_filled,
            labeled_size: self.state.labeled.len(),
            pool_remaining: self.state.unlabeled.len(),
            trained,
            best_epoch,
            dev_accuracy,
            metrics,
        });
        self.state.iteration += 1;
        self.status = if self.state.iteration >= self.cfg.iterations || self.state.unlabeled.is_empty() {
            Status::Finished
        } else {
            Status::Annotating
        };
        if self.status == Status::Finished {
            let report = self.report();
            if let Some(sink) = self.sink.as_mut() {
                sink.save_report(&report)?;
            }
        }
        Ok(self.reports.last().expect("just pushed"))
    }

    /// Retrains synchronously if an iteration is waiting for it.
    pub fn finish_training(&mut self) -> Result<()> {
        if self.status == Status::Training {
            let outcome = self.training_job()?.run()?;
            self.install(outcome)?;
        }
        Ok(())
    }

    /// Runs one full iteration against `oracle` and returns its annotation
    /// count m. An oracle failure leaves the state as of the last recorded
    /// annotation.
    pub fn run_iteration<O: Oracle + ?Sized>(&mut self, oracle: &mut O) -> Result<usize> {
        self.finish_training()?;
        match self.status {
            Status::Finished => return Err(Error::BadState("finished")),
            _ if self.state.unlabeled.is_empty() => return Err(Error::EmptyPool),
            _ => {}
        }
        loop {
            let task = self.next_candidate()?.ok_or(Error::EmptyPool)?;
            let label = oracle.annotate(&task.word).map_err(|e| match e {
                Error::Oracle(m) => Error::Oracle(m),
                other => Error::Oracle(other.to_string()),
            })?;
            if self.submit(&task.word, label, "oracle", None)?.iteration_complete {
                break;
            }
        }
        let m = self.closed.as_ref().map_or(0, |c| c.annotations);
        self.finish_training()?;
        Ok(m)
    }

    /// Applies a logged record during resume, retraining at iteration ends.
    pub(crate) fn replay(&mut self, record: SessionRecord) -> Result<()> {
        self.finish_training()?;
        if self.status != Status::Annotating {
            return Err(Error::Mismatch("record after the session finished".into()));
        }
        if record.iteration != self.current_iteration() {
            return Err(Error::Mismatch(format!(
                "record for iteration {} while iteration {} is open",
                record.iteration,
                self.current_iteration()
            )));
        }
        if !self.state.unlabeled.contains(&record.word) {
            return Err(Error::Mismatch(format!("{:?} is not in the unlabeled pool", record.word)));
        }
        if record.counted != self.would_count(record.label) {
            return Err(Error::Mismatch(format!("counted flag disagrees for {:?}", record.word)));
        }
        self.pending = None;
        if self.apply(record) {
            self.finish_training()?;
        }
        Ok(())
    }

    pub fn report(&self) -> SessionReport {
        SessionReport {
            strategy: self.cfg.strategy.name().to_string(),
            seed: self.cfg.seed,
            config: self.cfg.clone(),
            iterations: self.reports.clone(),
            best_iteration: self.best.as_ref().map(|b| b.0),
            best_model: self.best.as_ref().map(|b| b.2.clone()),
        }
    }
}

/// Runs every iteration of a fresh session. Stops early, with a warning,
/// when the pool runs dry.
pub fn run_session<O: Oracle + ?Sized>(
    cfg: IterationConfig,
    oracle: &mut O,
    data: Dataset,
    testset: Vec<LabeledExample>,
) -> Result<SessionReport> {
    let mut session = Session::new(cfg, data, testset)?;
    while session.status() != Status::Finished {
        session.run_iteration(oracle)?;
    }
    if session.reports().len() < session.config().iterations {
        log::warn!(
            "pool exhausted after {} of {} iterations",
            session.reports().len(),
            session.config().iterations
        );
    }
    Ok(session.report())
}

//! Confusion counts, per-class precision/recall/F1, multi-seed aggregation
//! and annotator disagreement statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classifier::{ClassifierModel, LabeledExample};
use crate::engine::SessionReport;
use crate::error::{Error, Result};
use crate::label::Label;

/// Binary confusion counts with Mental as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn record(&mut self, gold: Label, predicted: Label) {
        match (gold, predicted) {
            (Label::Mental, Label::Mental) => self.tp += 1,
            (Label::Physical, Label::Mental) => self.fp += 1,
            (Label::Mental, Label::Physical) => self.fn_ += 1,
            (Label::Physical, Label::Physical) => self.tn += 1,
        }
    }
}

pub fn confusion(model: &ClassifierModel, testset: &[LabeledExample]) -> Result<ConfusionCounts> {
    let mut counts = ConfusionCounts::default();
    for ex in testset {
        counts.record(ex.label, model.predict_class(&ex.features)?);
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when a 0/0 was replaced by 0.
    pub undefined: bool,
}

fn ratio(num: usize, den: usize, undefined: &mut bool) -> f64 {
    if den == 0 {
        *undefined = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 for one class. For Physical the roles of the
/// positive and negative counts swap.
pub fn prf1(counts: &ConfusionCounts, class: Label) -> Prf {
    let (tp, fp, fn_) = match class {
        Label::Mental => (counts.tp, counts.fp, counts.fn_),
        Label::Physical => (counts.tn, counts.fn_, counts.fp),
    };
    let mut undefined = false;
    let precision = ratio(tp, tp + fp, &mut undefined);
    let recall = ratio(tp, tp + fn_, &mut undefined);
    let f1 = if precision + recall == 0.0 {
        undefined = true;
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Prf {
        precision,
        recall,
        f1,
        undefined,
    }
}

/// Metrics for both classes on one testset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub confusion: ConfusionCounts,
    pub mental: Prf,
    pub physical: Prf,
}

impl ClassMetrics {
    pub fn from_counts(confusion: ConfusionCounts) -> Self {
        Self {
            confusion,
            mental: prf1(&confusion, Label::Mental),
            physical: prf1(&confusion, Label::Physical),
        }
    }

    pub fn evaluate(model: &ClassifierModel, testset: &[LabeledExample]) -> Result<Self> {
        Ok(Self::from_counts(confusion(model, testset)?))
    }

    pub fn macro_f1(&self) -> f64 {
        (self.mental.f1 + self.physical.f1) / 2.0
    }
}

/// Seed-averaged metrics for one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub iteration: usize,
    pub runs: usize,
    pub mean_annotations: f64,
    pub min_annotations: usize,
    pub max_annotations: usize,
    pub mean_labeled: f64,
    /// Fraction of runs that filled both quotas this iteration.
    pub enough_samples: f64,
    pub mental: Option<Prf>,
    pub physical: Option<Prf>,
}

impl AggregateRow {
    /// Annotation range in the `min~max` form.
    pub fn annotation_range(&self) -> String {
        annotation_range(self.min_annotations, self.max_annotations)
    }
}

pub fn annotation_range(min: usize, max: usize) -> String {
    format!("{min}~{max}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateTable {
    pub strategy: String,
    pub runs: usize,
    pub rows: Vec<AggregateRow>,
    /// Mean over runs and iterations of annotations per iteration.
    pub mean_annotations_per_iteration: f64,
    /// Min and max per-iteration annotation counts over every run.
    pub annotation_min: usize,
    pub annotation_max: usize,
    /// Mean over runs of each run's best-iteration Mental F1.
    pub mean_best_mental_f1: Option<f64>,
    pub mean_best_physical_f1: Option<f64>,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn mean_prf(prfs: &[Prf]) -> Prf {
    let collect = |f: fn(&Prf) -> f64| mean(&prfs.iter().map(f).collect::<Vec<_>>());
    Prf {
        precision: collect(|p| p.precision),
        recall: collect(|p| p.recall),
        f1: collect(|p| p.f1),
        undefined: prfs.iter().any(|p| p.undefined),
    }
}

/// Per-iteration arithmetic means across runs.
pub fn aggregate_runs(reports: &[SessionReport]) -> Result<AggregateTable> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Mismatch("no reports to aggregate".into()))?;
    let n_iter = first.iterations.len();
    if let Some(r) = reports.iter().find(|r| r.iterations.len() != n_iter) {
        return Err(Error::Mismatch(format!(
            "iteration counts differ: {} vs {}",
            n_iter,
            r.iterations.len()
        )));
    }

    let mut rows = Vec::with_capacity(n_iter);
    let mut all_counts = Vec::new();
    for t in 0..n_iter {
        let iters: Vec<_> = reports.iter().map(|r| &r.iterations[t]).collect();
        let counts: Vec<usize> = iters.iter().map(|i| i.annotations).collect();
        all_counts.extend_from_slice(&counts);
        let metrics: Vec<_> = iters.iter().filter_map(|i| i.metrics).collect();
        let (mental, physical) = if metrics.len() == iters.len() {
            (
                Some(mean_prf(&metrics.iter().map(|m| m.mental).collect::<Vec<_>>())),
                Some(mean_prf(&metrics.iter().map(|m| m.physical).collect::<Vec<_>>())),
            )
        } else {
            (None, None)
        };
        rows.push(AggregateRow {
            iteration: t + 1,
            runs: reports.len(),
            mean_annotations: mean(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>()),
            min_annotations: counts.iter().copied().min().unwrap_or(0),
            max_annotations: counts.iter().copied().max().unwrap_or(0),
            mean_labeled: mean(&iters.iter().map(|i| i.labeled_size as f64).collect::<Vec<_>>()),
            enough_samples: mean(&iters.iter().map(|i| f64::from(u8::from(i.quotas_filled))).collect::<Vec<_>>()),
            mental,
            physical,
        });
    }

    let best_mental: Option<Vec<f64>> = reports
        .iter()
        .map(|r| r.best().and_then(|b| b.metrics).map(|m| m.mental.f1))
        .collect();
    let best_physical: Option<Vec<f64>> = reports
        .iter()
        .map(|r| r.best().and_then(|b| b.metrics).map(|m| m.physical.f1))
        .collect();

    Ok(AggregateTable {
        strategy: first.strategy.clone(),
        runs: reports.len(),
        mean_annotations_per_iteration: if all_counts.is_empty() {
            0.0
        } else {
            mean(&all_counts.iter().map(|&c| c as f64).collect::<Vec<_>>())
        },
        annotation_min: all_counts.iter().copied().min().unwrap_or(0),
        annotation_max: all_counts.iter().copied().max().unwrap_or(0),
        mean_best_mental_f1: best_mental.filter(|v| !v.is_empty()).map(|v| mean(&v)),
        mean_best_physical_f1: best_physical.filter(|v| !v.is_empty()).map(|v| mean(&v)),
        rows,
    })
}

/// Two-decimal display used in tables.
pub fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

/// Integer percent display used for rates.
pub fn percent(rate: f64) -> String {
    format!("{}%", (rate * 100.0).round() as i64)
}

impl AggregateTable {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "strategy: {}  runs: {}  words/iter: {} (mean {:.1})",
            self.strategy,
            self.runs,
            annotation_range(self.annotation_min, self.annotation_max),
            self.mean_annotations_per_iteration
        );
        let _ = writeln!(
            out,
            "{:>4}  {:>9}  {:>7}  {:>7}  {:>6}  {:>6}  {:>6}  {:>6}  {:>6}  {:>6}",
            "iter", "words", "labeled", "enough", "M-P", "M-R", "M-F1", "P-P", "P-R", "P-F1"
        );
        for row in &self.rows {
            let cell = |p: Option<Prf>, f: fn(&Prf) -> f64| p.map(|p| fmt2(f(&p))).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:>4}  {:>9}  {:>7.1}  {:>7}  {:>6}  {:>6}  {:>6}  {:>6}  {:>6}  {:>6}",
                row.iteration,
                row.annotation_range(),
                row.mean_labeled,
                if row.enough_samples == 1.0 { "yes" } else { "no" },
                cell(row.mental, |p| p.precision),
                cell(row.mental, |p| p.recall),
                cell(row.mental, |p| p.f1),
                cell(row.physical, |p| p.precision),
                cell(row.physical, |p| p.recall),
                cell(row.physical, |p| p.f1),
            );
        }
        if let (Some(m), Some(p)) = (self.mean_best_mental_f1, self.mean_best_physical_f1) {
            let _ = writeln!(out, "best-iteration F1 (mean): mental {} physical {}", fmt2(m), fmt2(p));
        }
        out
    }

    /// One JSON object per line: a summary record then one per iteration.
    pub fn to_records(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary<'a> {
            record: &'static str,
            strategy: &'a str,
            runs: usize,
            mean_annotations_per_iteration: f64,
            annotation_range: String,
            mean_best_mental_f1: Option<f64>,
            mean_best_physical_f1: Option<f64>,
        }
        #[derive(Serialize)]
        struct Row<'a> {
            record: &'static str,
            #[serde(flatten)]
            row: &'a AggregateRow,
        }
        let mut out = serde_json::to_string(&Summary {
            record: "summary",
            strategy: &self.strategy,
            runs: self.runs,
            mean_annotations_per_iteration: self.mean_annotations_per_iteration,
            annotation_range: annotation_range(self.annotation_min, self.annotation_max),
            mean_best_mental_f1: self.mean_best_mental_f1,
            mean_best_physical_f1: self.mean_best_physical_f1,
        })?;
        out.push('\n');
        for row in &self.rows {
            out.push_str(&serde_json::to_string(&Row {
                record: "iteration",
                row,
            })?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Table and records rendering for a single evaluation.
pub fn metrics_table(metrics: &ClassMetrics) -> String {
    let c = metrics.confusion;
    let mut out = String::new();
    let _ = writeln!(out, "tp={} fp={} fn={} tn={} (n={})", c.tp, c.fp, c.fn_, c.tn, c.total());
    let _ = writeln!(out, "{:<9} {:>9} {:>6} {:>4}", "class", "precision", "recall", "f1");
    for (name, p) in [("Mental", metrics.mental), ("Physical", metrics.physical)] {
        let _ = writeln!(
            out,
            "{:<9} {:>9} {:>6} {:>4}",
            name,
            fmt2(p.precision),
            fmt2(p.recall),
            fmt2(p.f1)
        );
    }
    out
}

/// Two annotations of one word plus the adjudicated class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualAnnotation {
    pub word: String,
    pub first: Option<Label>,
    pub second: Option<Label>,
    pub adjudicated: Label,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DisagreementRow {
    pub total: usize,
    pub disagreements: usize,
    pub rate: f64,
}

impl DisagreementRow {
    fn finish(mut self) -> Self {
        self.rate = if self.total == 0 {
            0.0
        } else {
            self.disagreements as f64 / self.total as f64
        };
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementStats {
    pub per_class: BTreeMap<Label, DisagreementRow>,
    pub overall: DisagreementRow,
    pub skipped: Vec<String>,
}

/// Counts words whose two annotations differ, attributed to the
/// adjudicated class. Words missing a label are skipped with a warning.
pub fn disagreement_stats(annotations: &[DualAnnotation]) -> DisagreementStats {
    let mut per_class: BTreeMap<Label, DisagreementRow> = [Label::Mental, Label::Physical]
        .into_iter()
        .map(|l| (l, DisagreementRow::default()))
        .collect();
    let mut overall = DisagreementRow::default();
    let mut skipped = Vec::new();
    for a in annotations {
        let (Some(first), Some(second)) = (a.first, a.second) else {
            log::warn!("{}: missing second label, skipped", a.word);
            skipped.push(a.word.clone());
            continue;
        };
        let row = per_class.get_mut(&a.adjudicated).expect("both classes present");
        row.total += 1;
        overall.total += 1;
        if first != second {
            row.disagreements += 1;
            overall.disagreements += 1;
        }
    }
    DisagreementStats {
        per_class: per_class.into_iter().map(|(l, r)| (l, r.finish())).collect(),
        overall: overall.finish(),
        skipped,
    }
}

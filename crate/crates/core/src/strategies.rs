//! Acquisition strategies: pick the next unlabeled word to annotate.
//!
//! All argmax/argmin scans break ties toward the lexicographically smallest
//! word, so results do not depend on pool order.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::ClassifierModel;
use crate::embedding::{l2_distance, FeatureVector};
use crate::error::{Error, Result};

pub const DEFAULT_CAL_K: usize = 10;
/// Probabilities are clamped into `[PROB_CLAMP, 1 - PROB_CLAMP]` before KL.
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "name")]
pub enum StrategyKind {
    Entropy,
    Coreset,
    Cal { k: usize },
    Random,
}

impl StrategyKind {
    pub const NAMES: [&'static str; 4] = ["entropy", "coreset", "cal", "random"];

    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::Entropy => "entropy",
            StrategyKind::Coreset => "coreset",
            StrategyKind::Cal { .. } => "cal",
            StrategyKind::Random => "random",
        }
    }

    pub fn cal(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("cal k must be at least 1".into()));
        }
        Ok(StrategyKind::Cal { k })
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "entropy" => Ok(StrategyKind::Entropy),
            "coreset" => Ok(StrategyKind::Coreset),
            "cal" => Ok(StrategyKind::Cal { k: DEFAULT_CAL_K }),
            "random" => Ok(StrategyKind::Random),
            other => Err(Error::Config(format!(
                "unknown strategy {other:?}; valid names: {}",
                StrategyKind::NAMES.join(", ")
            ))),
        }
    }
}

/// A pool word with its classifier features and its strategy-space vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolItem {
    pub word: String,
    pub features: FeatureVector,
    pub space: FeatureVector,
}

/// Read-only view of the pools at selection time.
#[derive(Debug, Clone, Copy)]
pub struct PoolView<'a> {
    pub unlabeled: &'a [&'a PoolItem],
    pub labeled: &'a [&'a PoolItem],
    pub model: Option<&'a ClassifierModel>,
}

/// `true` when `(score, word)` beats `(best_score, best_word)` for a max scan.
fn better_max(score: f64, word: &str, best_score: f64, best_word: &str) -> bool {
    match score.partial_cmp(&best_score) {
        Some(Ordering::Greater) => true,
        Some(Ordering::Equal) => word < best_word,
        _ => false,
    }
}

fn argmax_by<'a>(items: impl Iterator<Item = (&'a str, f64)>) -> Option<&'a str> {
    let mut best: Option<(&str, f64)> = None;
    for (word, score) in items {
        match best {
            Some((bw, bs)) if !better_max(score, word, bs, bw) => {}
            _ => best = Some((word, score)),
        }
    }
    best.map(|(w, _)| w)
}

fn require_unlabeled(view: &PoolView) -> Result<()> {
    if view.unlabeled.is_empty() {
        Err(Error::EmptyPool)
    } else {
        Ok(())
    }
}

fn require_labeled(view: &PoolView) -> Result<()> {
    if view.labeled.is_empty() {
        Err(Error::NoLabeledSeeds)
    } else {
        Ok(())
    }
}

/// The word whose predicted probability is closest to 0.5.
///
/// Ranks by `|logit|`, which orders candidates exactly like `|p - 0.5|` and
/// binary entropy but stays symmetric under `p <-> 1 - p` in floating point.
pub fn select_entropy(view: &PoolView) -> Result<String> {
    require_unlabeled(view)?;
    let model = view.model.ok_or(Error::NoModel("entropy"))?;
    let scored = view
        .unlabeled
        .iter()
        .map(|item| Ok((item.word.as_str(), -model.logit(&item.features)?.abs())))
        .collect::<Result<Vec<_>>>()?;
    Ok(argmax_by(scored.into_iter()).expect("non-empty").to_string())
}

fn min_distance_to_labeled(item: &PoolItem, labeled: &[&PoolItem]) -> Result<f64> {
    let mut min = f64::INFINITY;
    for v in labeled {
        min = min.min(l2_distance(&item.space, &v.space)?);
    }
    Ok(min)
}

/// Farthest-point selection: the unlabeled word maximizing its minimum L2
/// distance to the labeled set.
pub fn select_coreset(view: &PoolView) -> Result<String> {
    require_unlabeled(view)?;
    require_labeled(view)?;
    let scored = view
        .unlabeled
        .iter()
        .map(|item| Ok((item.word.as_str(), min_distance_to_labeled(item, view.labeled)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(argmax_by(scored.into_iter()).expect("non-empty").to_string())
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// KL(Bern(p) || Bern(q)) in nats, after clamping both probabilities.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    let (p, q) = (clamp_prob(p), clamp_prob(q));
    p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln()
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// [`bernoulli_kl`] with both distributions given as logits.
///
/// Flipping the sign of both logits only swaps the two summands, so the
/// result is bit-identical under `p <-> 1 - p`; the probability form is not.
pub fn bernoulli_kl_logits(a: f64, b: f64) -> f64 {
    let bound = ((1.0 - PROB_CLAMP) / PROB_CLAMP).ln();
    let (a, b) = (a.clamp(-bound, bound), b.clamp(-bound, bound));
    sigmoid(a) * (softplus(-b) - softplus(-a)) + sigmoid(-a) * (softplus(b) - softplus(a))
}

/// Indices of the `k` labeled items nearest to `item`, ordered by
/// (distance, word). `k` is capped at the labeled count.
pub fn nearest_labeled(item: &PoolItem, labeled: &[&PoolItem], k: usize) -> Result<Vec<usize>> {
    let mut dists = labeled
        .iter()
        .enumerate()
        .map(|(i, v)| Ok((l2_distance(&item.space, &v.space)?, v.word.as_str(), i)))
        .collect::<Result<Vec<_>>>()?;
    dists.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    Ok(dists.into_iter().take(k).map(|(_, _, i)| i).collect())
}

/// Mean KL(neighbor || candidate) over the candidate's nearest labeled
/// neighbors.
pub fn cal_score(item: &PoolItem, labeled: &[&PoolItem], model: &ClassifierModel, k: usize) -> Result<f64> {
    let neighbors = nearest_labeled(item, labeled, k)?;
    let candidate = model.logit(&item.features)?;
    let mut terms = neighbors
        .iter()
        .map(|&i| Ok(bernoulli_kl_logits(model.logit(&labeled[i].features)?, candidate)))
        .collect::<Result<Vec<f64>>>()?;
    // summing in sorted order makes equal neighbor multisets score bit-identically
    terms.sort_by(f64::total_cmp);
    Ok(terms.iter().sum::<f64>() / terms.len() as f64)
}

/// Contrastive selection: the unlabeled word whose prediction diverges most
/// from its `k` nearest labeled neighbors.
pub fn select_cal(view: &PoolView, k: usize) -> Result<String> {
    require_unlabeled(view)?;
    require_labeled(view)?;
    if k == 0 {
        return Err(Error::Config("cal k must be at least 1".into()));
    }
    let model = view.model.ok_or(Error::NoModel("cal"))?;
    let scored = view
        .unlabeled
        .iter()
        .map(|item| Ok((item.word.as_str(), cal_score(item, view.labeled, model, k)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(argmax_by(scored.into_iter()).expect("non-empty").to_string())
}

/// Uniform choice over the unlabeled pool in view order.
pub fn select_random<R: Rng + ?Sized>(view: &PoolView, rng: &mut R) -> Result<String> {
    require_unlabeled(view)?;
    let i = rng.gen_range(0..view.unlabeled.len());
    Ok(view.unlabeled[i].word.clone())
}

pub fn select<R: Rng + ?Sized>(kind: StrategyKind, view: &PoolView, rng: &mut R) -> Result<String> {
    match kind {
        StrategyKind::Entropy => select_entropy(view),
        StrategyKind::Coreset => select_coreset(view),
        StrategyKind::Cal { k } => select_cal(view, k),
        StrategyKind::Random => select_random(view, rng),
    }
}

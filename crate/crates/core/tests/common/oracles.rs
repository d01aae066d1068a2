//! Brute-force selection oracles and random instances for checking the
//! strategies. Written without calling the library's scoring code: the
//! forward pass, distances and KL are recomputed here from the raw params.

#![allow(dead_code, clippy::needless_range_loop, clippy::manual_clamp)]

use std::collections::BTreeSet;

use lexloop_core::classifier::Params;
use lexloop_core::{ClassifierModel, FeatureVector, PoolItem};
use rand::Rng;

pub struct Instance {
    pub unlabeled: Vec<PoolItem>,
    pub labeled: Vec<PoolItem>,
    pub model: ClassifierModel,
}

fn word<R: Rng>(rng: &mut R, taken: &mut BTreeSet<String>) -> String {
    loop {
        let len = rng.gen_range(1..=3);
        let w: String = (0..len).map(|_| rng.gen_range(b'a'..=b'f') as char).collect();
        if taken.insert(w.clone()) {
            return w;
        }
    }
}

fn grid<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-3i32..=3) as f64).collect()
}

/// Pools of at most 30 unlabeled and 15 labeled words in at most 8 dims, on
/// an integer grid with deliberate duplicates so ties are common and exact.
pub fn random_instance<R: Rng>(rng: &mut R) -> Instance {
    let dim = rng.gen_range(1..=8);
    let space_dim = rng.gen_range(1..=8);
    let hidden = if rng.gen_bool(0.5) { 0 } else { rng.gen_range(1..=4) };
    let mut taken = BTreeSet::new();
    let mut make = |rng: &mut R, n: usize| -> Vec<PoolItem> {
        let mut items: Vec<PoolItem> = Vec::with_capacity(n);
        for _ in 0..n {
            let (features, space) = if !items.is_empty() && rng.gen_bool(0.3) {
                let src = &items[rng.gen_range(0..items.len())];
                (src.features.to_vec(), src.space.to_vec())
            } else {
                (grid(rng, dim), grid(rng, space_dim))
            };
            items.push(PoolItem {
                word: word(rng, &mut taken),
                features: FeatureVector::new(features).unwrap(),
                space: FeatureVector::new(space).unwrap(),
            });
        }
        items
    };
    let (n_unlabeled, n_labeled) = (rng.gen_range(1..=30), rng.gen_range(1..=15));
    let unlabeled = make(rng, n_unlabeled);
    let labeled = make(rng, n_labeled);
    let out = if hidden == 0 { dim } else { hidden };
    let params = Params {
        hidden_weights: (0..hidden * dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        hidden_bias: (0..hidden).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        output_weights: (0..out).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        output_bias: if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(-1.0..1.0) },
    };
    let model = ClassifierModel::from_params(dim, hidden, params, 0.5).unwrap();
    Instance {
        unlabeled,
        labeled,
        model,
    }
}

pub fn prob(model: &ClassifierModel, x: &[f64]) -> f64 {
    let p = model.params();
    let d = model.input_dim();
    let z = if model.hidden_dim() == 0 {
        let mut z = p.output_bias;
        for i in 0..d {
            z += p.output_weights[i] * x[i];
        }
        z
    } else {
        let mut z = p.output_bias;
        for j in 0..model.hidden_dim() {
            let mut a = p.hidden_bias[j];
            for i in 0..d {
                a += p.hidden_weights[j * d + i] * x[i];
            }
            z += p.output_weights[j] * a.tanh();
        }
        z
    };
    1.0 / (1.0 + (-z).exp())
}

fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.ln() };
    term(p) + term(1.0 - p)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lexicographically smallest word among those scoring within a relative
/// `tol` of the maximum.
fn best_with_ties(scored: &[(String, f64)], tol: f64) -> String {
    let max = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    scored
        .iter()
        .filter(|(_, s)| max - s <= tol * max.abs().max(1e-300))
        .map(|(w, _)| w.clone())
        .min()
        .unwrap()
}

pub fn oracle_entropy(inst: &Instance) -> String {
    let scored: Vec<(String, f64)> = inst
        .unlabeled
        .iter()
        .map(|u| (u.word.clone(), binary_entropy(prob(&inst.model, &u.features))))
        .collect();
    best_with_ties(&scored, 1e-12)
}

pub fn oracle_coreset(inst: &Instance) -> String {
    // squared distances on the integer grid are exact, so ties are exact
    let scored: Vec<(String, f64)> = inst
        .unlabeled
        .iter()
        .map(|u| {
            let d = inst
                .labeled
                .iter()
                .map(|l| squared_distance(&u.space, &l.space))
                .fold(f64::INFINITY, f64::min);
            (u.word.clone(), d)
        })
        .collect();
    best_with_ties(&scored, 0.0)
}

fn kl(p: f64, q: f64) -> f64 {
    let c = |x: f64| x.max(1e-7).min(1.0 - 1e-7);
    let (p, q) = (c(p), c(q));
    p * (p.ln() - q.ln()) + (1.0 - p) * ((1.0 - p).ln() - (1.0 - q).ln())
}

pub fn oracle_cal(inst: &Instance, k: usize) -> String {
    let scored: Vec<(String, f64)> = inst
        .unlabeled
        .iter()
        .map(|u| {
            let mut order: Vec<&PoolItem> = inst.labeled.iter().collect();
            order.sort_by(|a, b| {
                squared_distance(&u.space, &a.space)
                    .partial_cmp(&squared_distance(&u.space, &b.space))
                    .unwrap()
                    .then(a.word.cmp(&b.word))
            });
            order.truncate(k);
            let pu = prob(&inst.model, &u.features);
            let mean = order.iter().map(|n| kl(prob(&inst.model, &n.features), pu)).sum::<f64>() / order.len() as f64;
            (u.word.clone(), mean)
        })
        .collect();
    best_with_ties(&scored, 1e-12)
}

//! Synthetic pools and scripted oracles for loop tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use lexloop_core::synth::{generate, SynthConfig, SynthLexicon};
use lexloop_core::{Dataset, Label, LabeledExample, Result};

pub struct Fixture {
    pub lex: SynthLexicon,
    pub data: Dataset,
    pub testset: Vec<LabeledExample>,
    pub truth: BTreeMap<String, Label>,
}

pub fn synthetic(pool_size: usize, test_size: usize, dim: usize, seed: u64) -> Fixture {
    let lex = generate(&SynthConfig {
        pool_size,
        test_size,
        dim,
        seed,
        ..SynthConfig::default()
    })
    .unwrap();
    let lexicon = lex.lexicon().unwrap();
    let store = lex.vectors().unwrap();
    let words: Vec<&str> = lex.pool.iter().map(|w| w.word.as_str()).collect();
    let data = Dataset::from_resources(&words, &lexicon, &store, Default::default()).unwrap();
    Fixture {
        testset: lex.testset().unwrap(),
        truth: lex.truth(),
        data,
        lex,
    }
}

/// Mental, Physical, Mental, ... regardless of the word.
pub fn alternating() -> impl FnMut(&str) -> Result<Label> {
    let mut n = 0usize;
    move |_: &str| {
        n += 1;
        Ok(if n % 2 == 1 { Label::Mental } else { Label::Physical })
    }
}

pub fn all_negative() -> impl FnMut(&str) -> Result<Label> {
    |_: &str| Ok(Label::Physical)
}

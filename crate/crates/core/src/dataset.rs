//! Pool construction and the small text formats around it: word lists and
//! `word<TAB>label` files.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::classifier::LabeledExample;
use crate::embedding::{embed_word, strategy_vector, EmbeddingStore, StrategySpace};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::lexicon::Lexicon;
use crate::strategies::PoolItem;

/// Encoded words keyed by word, plus the glosses shown to annotators.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub items: BTreeMap<String, PoolItem>,
    pub glosses: BTreeMap<String, Vec<String>>,
}

impl Dataset {
    pub fn from_resources<S: AsRef<str>>(
        words: &[S],
        lexicon: &Lexicon,
        store: &EmbeddingStore,
        space: StrategySpace,
    ) -> Result<Self> {
        let mut data = Dataset::default();
        for word in words {
            let word = word.as_ref();
            let entry = lexicon
                .get(word)
                .ok_or_else(|| Error::NotInLexicon(word.to_string()))?;
            let encoding = embed_word(word, lexicon, store)?;
            let space_vec = strategy_vector(word, lexicon, store, space)?;
            data.items.insert(
                word.to_string(),
                PoolItem {
                    word: word.to_string(),
                    features: encoding.vector,
                    space: space_vec,
                },
            );
            data.glosses.insert(
                word.to_string(),
                entry.senses().iter().map(|s| s.gloss.clone()).collect(),
            );
        }
        Ok(data)
    }

    pub fn from_items(items: impl IntoIterator<Item = PoolItem>) -> Self {
        Dataset {
            items: items.into_iter().map(|i| (i.word.clone(), i)).collect(),
            glosses: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Labeled examples for every word of `labels` present in the dataset.
    pub fn examples(&self, labels: &BTreeMap<String, Label>) -> Result<Vec<LabeledExample>> {
        labels
            .iter()
            .map(|(word, &label)| {
                let item = self
                    .items
                    .get(word)
                    .ok_or_else(|| Error::UnknownWord(word.clone()))?;
                Ok(LabeledExample::new(word.clone(), item.features.clone(), label))
            })
            .collect()
    }
}

/// One lowercase word per line; blank lines and `#` comments are ignored.
pub fn read_word_list<R: Read>(reader: R) -> Result<Vec<String>> {
    let mut words = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        let word = line.trim();
        if word.is_empty() || word.starts_with('#') {
            continue;
        }
        words.push(word.to_lowercase());
    }
    Ok(words)
}

pub fn load_word_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    read_word_list(fs::File::open(path).map_err(|e| Error::io(path, e))?)
}

/// Reads `word<TAB>label` lines. Later lines override earlier ones.
pub fn read_label_file<R: Read>(reader: R) -> Result<BTreeMap<String, Label>> {
    let mut labels = BTreeMap::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (word, label) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(line_no, "expected word<TAB>label"))?;
        let label: Label = label
            .parse()
            .map_err(|e: crate::label::UnknownLabel| Error::parse(line_no, e.to_string()))?;
        labels.insert(word.trim().to_lowercase(), label);
    }
    Ok(labels)
}

pub fn load_label_file(path: impl AsRef<Path>) -> Result<BTreeMap<String, Label>> {
    let path = path.as_ref();
    read_label_file(fs::File::open(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_label_file<W: Write>(labels: &BTreeMap<String, Label>, mut out: W) -> std::io::Result<()> {
    for (word, label) in labels {
        writeln!(out, "{word}\t{label}")?;
    }
    Ok(())
}

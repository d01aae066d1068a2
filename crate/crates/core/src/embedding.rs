//! Pretrained word vectors and the gloss-mean encoder.
//!
//! Vector files use the common text layout: a `count dim` header followed by
//! one `token v1 ... vdim` row per line.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{tokenize, Lexicon};

/// A finite real vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().all(|v| v.is_finite()) {
            Ok(Self(values))
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(v: FeatureVector) -> Self {
        v.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: HashMap<String, FeatureVector>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&FeatureVector> {
        self.vectors.get(token)
    }

    /// Returns the previous vector if the token was already present.
    pub fn insert(&mut self, token: impl Into<String>, vector: FeatureVector) -> Result<Option<FeatureVector>> {
        if vector.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: vector.dim(),
            });
        }
        Ok(self.vectors.insert(token.into(), vector))
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let header = match lines.next() {
            Some(line) => line?,
            None => return Err(Error::parse(1, "empty vector file")),
        };
        let mut head = header.split_whitespace();
        let (Some(count), Some(dim), None) = (head.next(), head.next(), head.next()) else {
            return Err(Error::parse(1, "header must be \"count dim\""));
        };
        let count: usize = count
            .parse()
            .map_err(|_| Error::parse(1, format!("bad count {count:?}")))?;
        let dim: usize = dim
            .parse()
            .map_err(|_| Error::parse(1, format!("bad dimension {dim:?}")))?;
        if dim == 0 {
            return Err(Error::parse(1, "dimension must be positive"));
        }

        let mut store = EmbeddingStore::new(dim);
        let mut rows = 0;
        for (idx, line) in lines.enumerate() {
            let line_no = idx + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(' ').filter(|f| !f.is_empty());
            let token = fields.next().unwrap_or_default();
            let values = fields
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| Error::parse(line_no, format!("bad value {f:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if values.len() != dim {
                return Err(Error::parse(
                    line_no,
                    format!("expected {dim} values, found {}", values.len()),
                ));
            }
            let vector = FeatureVector::new(values).map_err(|_| Error::parse(line_no, "non-finite value"))?;
            if store.insert(token, vector)?.is_some() {
                log::warn!("line {line_no}: duplicate token {token:?}, keeping the last row");
            }
            rows += 1;
        }
        if rows != count {
            return Err(Error::parse(
                1,
                format!("header announces {count} rows, found {rows}"),
            ));
        }
        Ok(store)
    }

    /// Writes the store in token order.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.vectors.len(), self.dim)?;
        let mut tokens: Vec<_> = self.vectors.keys().collect();
        tokens.sort();
        for token in tokens {
            write!(out, "{token}")?;
            for v in self.vectors[token].iter() {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

pub fn load_vectors(path: impl AsRef<Path>) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    EmbeddingStore::from_reader(file)
}

/// An encoded word and the fraction of its gloss tokens found in the store.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    pub vector: FeatureVector,
    pub coverage: f64,
}

fn gloss_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| t.chars().any(char::is_alphanumeric))
        .map(|t| t.to_lowercase())
        .collect()
}

fn mean_of<'a>(vectors: impl Iterator<Item = &'a FeatureVector>, dim: usize) -> Option<FeatureVector> {
    let mut sum = vec![0.0; dim];
    let mut n = 0usize;
    for v in vectors {
        for (s, x) in sum.iter_mut().zip(v.iter()) {
            *s += x;
        }
        n += 1;
    }
    if n == 0 {
        return None;
    }
    let n = n as f64;
    Some(FeatureVector(sum.into_iter().map(|s| s / n).collect()))
}

/// Mean store vector over the tokens of the word's aggregated gloss.
///
/// Tokens missing from the store are skipped. With no token found the
/// word's own vector is used, then the zero vector (coverage 0).
pub fn embed_word(word: &str, lexicon: &Lexicon, store: &EmbeddingStore) -> Result<Encoding> {
    let entry = lexicon
        .get(word)
        .ok_or_else(|| Error::NotInLexicon(word.to_string()))?;
    let tokens = gloss_tokens(&entry.aggregated_gloss());
    let found: Vec<&FeatureVector> = tokens.iter().filter_map(|t| store.get(t)).collect();
    let coverage = if tokens.is_empty() {
        0.0
    } else {
        found.len() as f64 / tokens.len() as f64
    };
    log::debug!("{word}: gloss coverage {coverage:.3}");
    if let Some(vector) = mean_of(found.into_iter(), store.dim()) {
        return Ok(Encoding { vector, coverage });
    }
    let vector = store
        .get(word)
        .cloned()
        .unwrap_or_else(|| FeatureVector::zeros(store.dim()));
    Ok(Encoding {
        vector,
        coverage: 0.0,
    })
}

/// Which vector places a word in the space CORESET and CAL measure.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategySpace {
    /// The word's own vector, falling back to the gloss mean.
    #[default]
    WordVector,
    GlossMean,
}

pub fn strategy_vector(
    word: &str,
    lexicon: &Lexicon,
    store: &EmbeddingStore,
    space: StrategySpace,
) -> Result<FeatureVector> {
    match (space, store.get(word)) {
        (StrategySpace::WordVector, Some(v)) => Ok(v.clone()),
        _ => Ok(embed_word(word, lexicon, store)?.vector),
    }
}

/// Euclidean distance between two vectors of equal length.
pub fn l2_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    Ok(x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

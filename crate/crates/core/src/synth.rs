//! Synthetic lexicons for simulation: two isotropic Gaussian clusters, one
//! per class, written out in the same file formats as real resources.
//!
//! Every word gets a single one-token gloss whose vector is the word's
//! feature vector, so the encoder reproduces the sampled points exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::classifier::LabeledExample;
use crate::dataset::write_label_file;
use crate::embedding::{EmbeddingStore, FeatureVector, StrategySpace};
use crate::engine::DataSources;
use crate::error::{Error, Result};
use crate::label::Label;
use crate::lexicon::{Lexicon, PartOfSpeech};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub pool_size: usize,
    pub test_size: usize,
    pub dim: usize,
    /// Euclidean distance between the two class means.
    pub separation: f64,
    pub mental_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            pool_size: 500,
            test_size: 100,
            dim: 8,
            separation: 3.0,
            mental_fraction: 0.26,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthWord {
    pub word: String,
    pub label: Label,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthLexicon {
    pub pool: Vec<SynthWord>,
    pub test: Vec<SynthWord>,
    pub dim: usize,
}

/// Files written by [`SynthLexicon::write_to`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthPaths {
    pub lexicon: PathBuf,
    pub vectors: PathBuf,
    pub pool: PathBuf,
    pub testset: PathBuf,
    pub truth: PathBuf,
}

impl SynthPaths {
    pub fn sources(&self) -> DataSources {
        DataSources {
            lexicon: self.lexicon.clone(),
            vectors: self.vectors.clone(),
            pool: self.pool.clone(),
            testset: Some(self.testset.clone()),
            space: StrategySpace::WordVector,
        }
    }
}

fn gloss_token(word: &str) -> String {
    format!("g{word}")
}

/// Exactly `round(n * fraction)` Mental labels, in shuffled order.
fn labels(n: usize, fraction: f64, rng: &mut ChaCha8Rng) -> Vec<Label> {
    let mental = (n as f64 * fraction).round() as usize;
    let mut out: Vec<Label> = (0..n)
        .map(|i| if i < mental { Label::Mental } else { Label::Physical })
        .collect();
    out.shuffle(rng);
    out
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthLexicon> {
    if cfg.dim == 0 || !(0.0..=1.0).contains(&cfg.mental_fraction) || !cfg.separation.is_finite() {
        return Err(Error::Config(format!("invalid synthetic config {cfg:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let offset = cfg.separation / 2.0 / (cfg.dim as f64).sqrt();
    let width = (cfg.pool_size + cfg.test_size).to_string().len();
    let sample = |prefix: &str, n: usize, rng: &mut ChaCha8Rng| -> Vec<SynthWord> {
        labels(n, cfg.mental_fraction, rng)
            .into_iter()
            .enumerate()
            .map(|(i, label)| {
                let sign = if label.is_positive() { 1.0 } else { -1.0 };
                let features = (0..cfg.dim)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(rng);
                        sign * offset + z
                    })
                    .collect::<Vec<f64>>();
                SynthWord {
                    word: format!("{prefix}{i:0width$}"),
                    label,
                    features,
                }
            })
            .collect()
    };
    let pool = sample("pool", cfg.pool_size, &mut rng);
    let test = sample("test", cfg.test_size, &mut rng);
    Ok(SynthLexicon { pool, test, dim: cfg.dim })
}

impl SynthLexicon {
    pub fn truth(&self) -> BTreeMap<String, Label> {
        self.pool.iter().map(|w| (w.word.clone(), w.label)).collect()
    }

    pub fn test_labels(&self) -> BTreeMap<String, Label> {
        self.test.iter().map(|w| (w.word.clone(), w.label)).collect()
    }

    pub fn testset(&self) -> Result<Vec<LabeledExample>> {
        self.test
            .iter()
            .map(|w| Ok(LabeledExample::new(w.word.clone(), FeatureVector::new(w.features.clone())?, w.label)))
            .collect()
    }

    pub fn lexicon(&self) -> Result<Lexicon> {
        let mut lex = Lexicon::new();
        for w in self.pool.iter().chain(&self.test) {
            lex.insert(&w.word, PartOfSpeech::Adjective, &gloss_token(&w.word))?;
        }
        Ok(lex)
    }

    /// Vectors for each gloss token and for each word itself.
    pub fn vectors(&self) -> Result<EmbeddingStore> {
        let mut store = EmbeddingStore::new(self.dim);
        for w in self.pool.iter().chain(&self.test) {
            let v = FeatureVector::new(w.features.clone())?;
            store.insert(gloss_token(&w.word), v.clone())?;
            store.insert(w.word.clone(), v)?;
        }
        Ok(store)
    }

    /// Writes `lexicon.tsv`, `vectors.txt`, `pool.txt`, `testset.tsv` and
    /// `truth.tsv` into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<SynthPaths> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let paths = SynthPaths {
            lexicon: dir.join("lexicon.tsv"),
            vectors: dir.join("vectors.txt"),
            pool: dir.join("pool.txt"),
            testset: dir.join("testset.tsv"),
            truth: dir.join("truth.tsv"),
        };
        let create = |p: &Path| fs::File::create(p).map_err(|e| Error::io(p, e));
        self.lexicon()?
            .write_to(create(&paths.lexicon)?)
            .map_err(|e| Error::io(&paths.lexicon, e))?;
        self.vectors()?
            .write_to(create(&paths.vectors)?)
            .map_err(|e| Error::io(&paths.vectors, e))?;
        let pool: String = self.pool.iter().map(|w| format!("{}\n", w.word)).collect();
        fs::write(&paths.pool, pool).map_err(|e| Error::io(&paths.pool, e))?;
        write_label_file(&self.test_labels(), create(&paths.testset)?).map_err(|e| Error::io(&paths.testset, e))?;
        write_label_file(&self.truth(), create(&paths.truth)?).map_err(|e| Error::io(&paths.truth, e))?;
        Ok(paths)
    }
}

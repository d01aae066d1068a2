//! Active learning for tagging lexicon words as Mental or Physical.
//!
//! Words are encoded from their dictionary glosses, a small classifier
//! predicts P(Mental), and an acquisition loop chooses which word a human
//! (or a simulated oracle) labels next.
//!
//! ```
//! use lexloop_core::synth::{generate, SynthConfig};
//! use lexloop_core::{run_session, Dataset, IterationConfig, SimulatedOracle};
//!
//! let lex = generate(&SynthConfig { pool_size: 120, test_size: 40, ..SynthConfig::default() })?;
//! let lexicon = lex.lexicon()?;
//! let store = lex.vectors()?;
//! let words: Vec<_> = lex.pool.iter().map(|w| w.word.as_str()).collect();
//! let data = Dataset::from_resources(&words, &lexicon, &store, Default::default())?;
//! let cfg = IterationConfig { iterations: 2, ..IterationConfig::default() };
//! let report = run_session(cfg, &mut SimulatedOracle::new(lex.truth()), data, lex.testset()?)?;
//! assert_eq!(report.iterations.len(), 2);
//! # Ok::<(), lexloop_core::Error>(())
//! ```

pub mod classifier;
pub mod dataset;
pub mod embedding;
pub mod engine;
pub mod error;
pub mod eval;
pub mod label;
pub mod lexicon;
pub mod senticompare;
pub mod strategies;
pub mod synth;

pub use classifier::{train, ClassifierModel, LabeledExample, TrainConfig, TrainOutcome};
pub use dataset::Dataset;
pub use embedding::{EmbeddingStore, FeatureVector, StrategySpace};
pub use engine::{
    run_session, IterationConfig, IterationReport, Oracle, Session, SessionRecord, SessionReport, SimulatedOracle,
    Status,
};
pub use error::{Error, Result};
pub use eval::{ClassMetrics, ConfusionCounts, Prf};
pub use label::Label;
pub use lexicon::{Lexicon, SentiSynset};
pub use strategies::{PoolItem, StrategyKind};

use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lexloop_core::classifier::TrainConfig;
use lexloop_core::engine::DataSources;
use lexloop_core::{IterationConfig, StrategyKind, StrategySpace};

#[derive(Debug, Parser)]
#[command(name = "lexloop", version, about = "Active learning for Mental/Physical word classification")]
pub struct Cli {
    /// `key = value` file with defaults for any flag (keys as flag names).
    #[arg(long, global = true, env = "LEXLOOP_CONFIG")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract gloss-bearing adjectives from a review corpus.
    Ingest(IngestArgs),
    /// Simulated sessions against a ground-truth label file.
    Run(RunArgs),
    /// Create a session directory for human annotation.
    Init(InitArgs),
    /// Serve a session directory over HTTP.
    Serve(ServeArgs),
    /// Score a session's model on its testset.
    Eval(EvalArgs),
    /// Cross-tabulate MPC labels against SentiWordNet subjectivity.
    Senticompare(SentiArgs),
    /// Dump every annotation of a session.
    Export(ExportArgs),
    /// Inter-annotator disagreement per adjudicated class.
    Disagreement(DisagreementArgs),
    /// Write a synthetic two-cluster lexicon.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Records,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Space {
    /// The word's own vector (gloss mean when missing).
    Word,
    /// Gloss mean, same as the classifier input.
    Gloss,
}

impl From<Space> for StrategySpace {
    fn from(s: Space) -> Self {
        match s {
            Space::Word => StrategySpace::WordVector,
            Space::Gloss => StrategySpace::GlossMean,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Gloss lexicon (word<TAB>pos<TAB>gloss).
    #[arg(long, env = "LEXLOOP_LEXICON")]
    pub lexicon: PathBuf,
    /// Word vectors in text format with a `count dim` header.
    #[arg(long, env = "LEXLOOP_VECTORS")]
    pub vectors: PathBuf,
    /// Unlabeled pool, one word per line.
    #[arg(long, env = "LEXLOOP_POOL")]
    pub pool: PathBuf,
    /// Held-out word<TAB>label file.
    #[arg(long, env = "LEXLOOP_TESTSET")]
    pub testset: Option<PathBuf>,
    /// Geometry used by coreset and cal.
    #[arg(long, value_enum, default_value = "word", env = "LEXLOOP_SPACE")]
    pub space: Space,
}

impl DataArgs {
    pub fn sources(&self) -> DataSources {
        DataSources {
            lexicon: self.lexicon.clone(),
            vectors: self.vectors.clone(),
            pool: self.pool.clone(),
            testset: self.testset.clone(),
            space: self.space.into(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct LoopArgs {
    /// Iterations (T).
    #[arg(long, default_value_t = 5, env = "LEXLOOP_ITERATIONS")]
    pub iterations: usize,
    /// Mental quota per iteration (K1).
    #[arg(long, default_value_t = 20, env = "LEXLOOP_POS_QUOTA")]
    pub pos_quota: usize,
    /// Physical quota per iteration (K2).
    #[arg(long, default_value_t = 20, env = "LEXLOOP_NEG_QUOTA")]
    pub neg_quota: usize,
    /// Annotation cap per iteration (M).
    #[arg(long, default_value_t = 120, env = "LEXLOOP_MAX_ANNOTATIONS")]
    pub max_annotations: usize,
    /// Neighbors consulted by cal.
    #[arg(long, default_value_t = lexloop_core::strategies::DEFAULT_CAL_K, env = "LEXLOOP_CAL_K")]
    pub cal_k: usize,
    /// Continue from the previous model instead of retraining from scratch.
    #[arg(long, env = "LEXLOOP_WARM_START")]
    pub warm_start: bool,
    #[arg(long, default_value_t = 20, env = "LEXLOOP_EPOCHS")]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1, env = "LEXLOOP_LR")]
    pub lr: f64,
    /// Epoch at which the learning rate drops tenfold.
    #[arg(long, default_value_t = 10, env = "LEXLOOP_LR_DROP_EPOCH")]
    pub lr_drop_epoch: usize,
    #[arg(long, default_value_t = 32, env = "LEXLOOP_BATCH_SIZE")]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.001, env = "LEXLOOP_WEIGHT_DECAY")]
    pub weight_decay: f64,
    /// Hidden units; 0 trains a plain logistic head.
    #[arg(long, default_value_t = 0, env = "LEXLOOP_HIDDEN_DIM")]
    pub hidden_dim: usize,
    #[arg(long, default_value_t = 0.3, env = "LEXLOOP_DROPOUT")]
    pub dropout: f64,
}

impl LoopArgs {
    pub fn strategy(&self, name: StrategyKind) -> anyhow::Result<StrategyKind> {
        Ok(match name {
            StrategyKind::Cal { .. } => StrategyKind::cal(self.cal_k)?,
            other => other,
        })
    }

    pub fn iteration_config(&self, strategy: StrategyKind, seed: u64) -> anyhow::Result<IterationConfig> {
        let cfg = IterationConfig {
            iterations: self.iterations,
            pos_quota: self.pos_quota,
            neg_quota: self.neg_quota,
            max_annotations: self.max_annotations,
            strategy: self.strategy(strategy)?,
            seed,
            warm_start: self.warm_start,
            train: TrainConfig {
                epochs: self.epochs,
                lr: self.lr,
                lr_drop_epoch: self.lr_drop_epoch,
                batch_size: self.batch_size,
                weight_decay: self.weight_decay,
                hidden_dim: self.hidden_dim,
                dropout_prob: self.dropout,
                ..TrainConfig::default()
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    /// Reviews, one per line.
    #[arg(long, env = "LEXLOOP_CORPUS")]
    pub corpus: PathBuf,
    #[arg(long, env = "LEXLOOP_LEXICON")]
    pub lexicon: PathBuf,
    /// Where to write the adjective list (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the candidate pairs as adjective<TAB>noun<TAB>review.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// One or more of entropy, coreset, cal, random.
    #[arg(long, value_delimiter = ',', default_value = "entropy", env = "LEXLOOP_STRATEGY")]
    pub strategy: Vec<StrategyKind>,
    /// Ground-truth word<TAB>label file answering for the annotator.
    #[arg(long, env = "LEXLOOP_ORACLE")]
    pub oracle: PathBuf,
    /// Number of sessions per strategy, seeded seed, seed+1, ...
    #[arg(long, default_value_t = 1, env = "LEXLOOP_SEEDS")]
    pub seeds: u64,
    #[arg(long, default_value_t = 0, env = "LEXLOOP_SEED")]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "table", env = "LEXLOOP_FORMAT")]
    pub format: Format,
    /// Directory for one JSON report per session.
    #[arg(long)]
    pub reports: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub r#loop: LoopArgs,
}

#[derive(Debug, Clone, Args)]
pub struct InitArgs {
    #[arg(long, env = "LEXLOOP_SESSION")]
    pub session: PathBuf,
    #[arg(long, default_value = "entropy", env = "LEXLOOP_STRATEGY")]
    pub strategy: StrategyKind,
    #[arg(long, default_value_t = 0, env = "LEXLOOP_SEED")]
    pub seed: u64,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub r#loop: LoopArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, env = "LEXLOOP_SESSION")]
    pub session: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080", env = "LEXLOOP_ADDR")]
    pub addr: SocketAddr,
    /// Origin allowed to call the API from a browser; any origin when omitted.
    #[arg(long, env = "LEXLOOP_CORS_ORIGIN")]
    pub cors_origin: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long, env = "LEXLOOP_SESSION")]
    pub session: PathBuf,
    /// Iteration whose checkpoint to score; the best one by default.
    #[arg(long)]
    pub iteration: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SentiArgs {
    /// MPC labels, word<TAB>label.
    #[arg(long)]
    pub mpc: PathBuf,
    /// SentiWordNet 3.0 file.
    #[arg(long)]
    pub swn: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[arg(long, env = "LEXLOOP_SESSION")]
    pub session: PathBuf,
    #[arg(long, value_enum, default_value = "records")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct DisagreementArgs {
    /// First annotator's word<TAB>label file.
    #[arg(long)]
    pub first: PathBuf,
    /// Second annotator's labels.
    #[arg(long)]
    pub second: PathBuf,
    /// Final labels after adjudication; rows are grouped by these.
    #[arg(long)]
    pub adjudicated: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub pool: usize,
    #[arg(long, default_value_t = 100)]
    pub test: usize,
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    #[arg(long, default_value_t = 3.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0.26)]
    pub mental_fraction: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

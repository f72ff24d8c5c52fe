use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hofs::data::{BinScheme, LabelColumn, LoadOptions, MissingPolicy};
use hofs::hofs::{Baseline, HofsConfig};
use hofs::ica::{IcaConfig, SignalEntropy};
use hofs::infotheory::Base;

#[derive(Parser, Debug)]
#[command(
    name = "hofs",
    about = "Higher-order mutual-information feature selection",
    disable_version_flag = true,
    arg_required_else_help = true
)]
pub struct Cli {
    /// Directory for output artifacts.
    #[arg(long, global = true, env = "HOFS_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = "HOFS_THREADS")]
    pub threads: Option<usize>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    pub config_dump: bool,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Print name and version as JSON and exit.
    #[arg(long)]
    pub version: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Rank features with one method and write the selection.
    Select(SelectArgs),
    /// Cross-validate several methods and write a comparison report.
    Bench(BenchArgs),
    /// Generate a synthetic dataset.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Report ICA quality diagnostics for a HOFS partition.
    Diagnose(DiagnoseArgs),
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Selection method: hofs, mim, mifs, jmi, mrmr, cmim or speccmi.
    #[arg(long, default_value = "hofs")]
    pub method: String,
    /// Redundancy weight for MIFS.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Number of features to select; defaults to min(10, M).
    #[arg(short = 'T', long = "num-features")]
    pub t: Option<usize>,
    #[command(flatten)]
    pub hofs: HofsArgs,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated methods to compare.
    #[arg(long, value_delimiter = ',', default_value = "mim,mrmr,jmi,cmim,speccmi,hofs")]
    pub methods: Vec<String>,
    /// Redundancy weight for MIFS.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Fold count, or `loo`; defaults to leave-one-out below 100 samples and 10 folds otherwise.
    #[arg(long)]
    pub folds: Option<String>,
    /// Comma-separated feature counts to evaluate.
    #[arg(long = "k", value_delimiter = ',')]
    pub feature_counts: Option<Vec<usize>>,
    /// L2 penalty of the linear classifier.
    #[arg(long, default_value_t = 1e-3)]
    pub lambda: f64,
    /// Gradient steps for the linear classifier.
    #[arg(long, default_value_t = 500)]
    pub train_epochs: usize,
    /// Step size for the linear classifier.
    #[arg(long, default_value_t = 0.1)]
    pub train_learning_rate: f64,
    #[command(flatten)]
    pub hofs: HofsArgs,
}

#[derive(Subcommand, Debug)]
pub enum SynthCommand {
    /// Binary-label tree model with nine continuous features.
    Tree(TreeArgs),
    /// Five-class model with twenty mixed-type features.
    Hetero(HeteroArgs),
}

#[derive(Args, Debug)]
pub struct TreeArgs {
    /// Number of samples.
    #[arg(short = 'n', long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Output CSV; defaults to tree.csv in the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct HeteroArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Output CSV; defaults to hetero.csv in the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Number of features to select when no partition is given; defaults to min(10, M).
    #[arg(short = 'T', long = "num-features")]
    pub t: Option<usize>,
    /// Reuse the subsets of an earlier `select` run instead of running HOFS.
    #[arg(long)]
    pub partition: Option<PathBuf>,
    #[command(flatten)]
    pub hofs: HofsArgs,
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// Input CSV file.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the label column.
    #[arg(long, default_value = "label", conflicts_with = "label_index")]
    pub label: String,
    /// Zero-based position of the label column.
    #[arg(long)]
    pub label_index: Option<usize>,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// The file has no header row; columns are named by position.
    #[arg(long)]
    pub no_header: bool,
    #[arg(long, value_enum, default_value_t = Missing::Drop)]
    pub missing: Missing,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Missing {
    Drop,
    Impute,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Scheme {
    Ef,
    Ew,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LogBase {
    Nats,
    Bits,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BaselineArg {
    Ica,
    Plugin,
}

#[derive(Args, Debug)]
pub struct HofsArgs {
    /// Correlation threshold for joining an existing subset.
    #[arg(short = 'C', long = "threshold", default_value_t = 0.3)]
    pub c: f64,
    /// Bins per continuous feature.
    #[arg(long, default_value_t = 5)]
    pub bins: usize,
    #[arg(long, value_enum, default_value_t = Scheme::Ef)]
    pub scheme: Scheme,
    /// Unit of reported information quantities.
    #[arg(long, value_enum, default_value_t = LogBase::Nats)]
    pub base: LogBase,
    /// Estimator for H(y | x_i) in the subset terms.
    #[arg(long, value_enum, default_value_t = BaselineArg::Ica)]
    pub baseline: BaselineArg,
    /// Top-level seed for every random stream.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.01)]
    pub ica_learning_rate: f64,
    /// Mini-batch size; defaults to min(N, 256).
    #[arg(long)]
    pub ica_batch_size: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub ica_epochs: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub ica_tol: f64,
    #[arg(long, default_value_t = 50)]
    pub ica_newton_steps: usize,
    /// Histogram bins for signal entropies; Gaussian entropies when absent.
    #[arg(long)]
    pub signal_bins: Option<usize>,
}

impl HofsArgs {
    pub fn config(&self, t: usize) -> HofsConfig {
        HofsConfig {
            t,
            c: self.c,
            bins: self.bins,
            scheme: match self.scheme {
                Scheme::Ef => BinScheme::EqualFrequency,
                Scheme::Ew => BinScheme::EqualWidth,
            },
            base: match self.base {
                LogBase::Nats => Base::Nats,
                LogBase::Bits => Base::Bits,
            },
            baseline: match self.baseline {
                BaselineArg::Ica => Baseline::Ica,
                BaselineArg::Plugin => Baseline::Plugin,
            },
            ica: IcaConfig {
                learning_rate: self.ica_learning_rate,
                batch_size: self.ica_batch_size,
                max_epochs: self.ica_epochs,
                convergence_tol: self.ica_tol,
                seed: self.seed,
                signal_entropy: match self.signal_bins {
                    Some(bins) => SignalEntropy::Histogram { bins },
                    None => SignalEntropy::Gaussian,
                },
                newton_steps: self.ica_newton_steps,
            },
        }
    }
}

impl DataArgs {
    pub fn load_options(&self) -> Result<LoadOptions, String> {
        if !self.delimiter.is_ascii() {
            return Err(format!("delimiter must be a single ASCII character, got {:?}", self.delimiter));
        }
        Ok(LoadOptions {
            label_column: match self.label_index {
                Some(i) => LabelColumn::Index(i),
                None => LabelColumn::Name(self.label.clone()),
            },
            delimiter: self.delimiter as u8,
            has_header: !self.no_header,
            missing_policy: match self.missing {
                Missing::Drop => MissingPolicy::Drop,
                Missing::Impute => MissingPolicy::Impute,
            },
            ..LoadOptions::default()
        })
    }
}

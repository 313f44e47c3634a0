//! `lexnorm`: train and evaluate concreteness/imageability regressors on word
//! embeddings, transfer them across languages and write predicted lexicons.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::HyperArgs;

pub enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<lexnorm::Error> for Failure {
    fn from(e: lexnorm::Error) -> Self {
        Failure::Data(e.into())
    }
}

#[derive(Parser, Debug)]
#[command(name = "lexnorm", version, about = "Predict word concreteness and imageability from word embeddings")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct Common {
    /// TOML config file; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice (default 0)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for reports and predicted lexicons (default lexnorm-out)
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Maximum number of experiment cells run concurrently
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Directory searched for relative resource paths
    #[arg(long, global = true, env = "LEXNORM_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    /// More log output (-v debug, -vv trace)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Args, Debug, Default)]
pub struct LexiconArgs {
    /// Norm lexicon TSV
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Language code of the lexicon
    #[arg(long)]
    pub lang: Option<String>,
    /// Rating scale as min,max (default 1,5)
    #[arg(long)]
    pub scale: Option<String>,
    /// Column mapping, e.g. word=Word,conc_mean=Conc.M
    #[arg(long)]
    pub schema: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct GoldArgs {
    /// Target-language gold lexicon for evaluation
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[arg(long)]
    pub gold_lang: Option<String>,
    /// Defaults to the source scale
    #[arg(long)]
    pub gold_scale: Option<String>,
    #[arg(long)]
    pub gold_schema: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct VecArgs {
    /// Read at most this many vectors per embedding file
    #[arg(long)]
    pub max_words: Option<usize>,
    /// Do not lowercase words
    #[arg(long)]
    pub keep_case: bool,
}

#[derive(Args, Debug, Default)]
pub struct GridArgs {
    /// Comma-separated variables: conc_mean, conc_std, imag_mean, imag_std
    #[arg(long)]
    pub variable: Option<String>,
    /// Comma-separated models: svr, ffn
    #[arg(long)]
    pub model: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Learn an orthogonal map between two embedding spaces
    Align {
        #[arg(long)]
        src_embeddings: Option<PathBuf>,
        #[arg(long)]
        tgt_embeddings: Option<PathBuf>,
        /// Seed translation pairs, source<TAB>target
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Transform file (default <out-dir>/transform.<src>-<tgt>.tsv)
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write the target-to-source transform
        #[arg(long)]
        inverse: bool,
        #[command(flatten)]
        vec: VecArgs,
    },
    /// In-language k-fold cross-validation
    EvalCv {
        #[command(flatten)]
        lexicon: LexiconArgs,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[command(flatten)]
        vec: VecArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Train on source embeddings, predict through aligned target embeddings
    TransferEmbed {
        #[command(flatten)]
        lexicon: LexiconArgs,
        #[arg(long)]
        src_embeddings: Option<PathBuf>,
        #[arg(long)]
        tgt_embeddings: Option<PathBuf>,
        /// Source-to-target transform; omit for pre-aligned spaces
        #[arg(long)]
        transform: Option<PathBuf>,
        #[command(flatten)]
        gold: GoldArgs,
        /// Write each trained model to the output directory
        #[arg(long)]
        save_models: bool,
        #[command(flatten)]
        vec: VecArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Project ratings through a bilingual dictionary
    TransferDict {
        #[command(flatten)]
        lexicon: LexiconArgs,
        /// Dictionary, source<TAB>target
        #[arg(long)]
        dictionary: Option<PathBuf>,
        #[command(flatten)]
        gold: GoldArgs,
        /// Combine colliding translations with the median instead of the mean
        #[arg(long)]
        median: bool,
        #[arg(long)]
        keep_case: bool,
        /// Comma-separated variables
        #[arg(long)]
        variable: Option<String>,
    },
    /// Cumulative mass of sorted linear-SVR coefficients
    CoefAnalysis {
        #[command(flatten)]
        lexicon: LexiconArgs,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[command(flatten)]
        vec: VecArgs,
        /// Comma-separated variables
        #[arg(long)]
        variable: Option<String>,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Apply a saved model to every word of an embedding space
    PredictLexicon {
        /// Model saved by transfer-embed --save-models
        #[arg(long)]
        model_file: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        variable: Option<String>,
        /// Scale the predictions are clamped to (default 1,5)
        #[arg(long)]
        scale: Option<String>,
        #[arg(long)]
        lang: Option<String>,
        /// Output TSV (default <out-dir>/predicted.<lang>.<variable>.tsv)
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        vec: VecArgs,
    },
    /// Print statistics about resource files
    Inspect {
        #[command(flatten)]
        lexicon: LexiconArgs,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        dictionary: Option<PathBuf>,
        #[arg(long)]
        model_file: Option<PathBuf>,
        #[command(flatten)]
        vec: VecArgs,
    },
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_target(false)
        .try_init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_logging(cli.common.verbose);
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("\nFor more information, try '--help'.");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

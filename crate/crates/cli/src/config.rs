//! Config file contents and the merge of file values with command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use lexnorm::ffn::{FfnParams, Optimizer};
use lexnorm::norms::{LexiconOptions, LexiconSchema, Scale, Variable};
use lexnorm::pipelines::{Averaging, ExperimentSpec, ModelKind, Task};
use lexnorm::svr::{KernelKind, SvrParams};
use serde::Deserialize;

use crate::Failure;

/// A list given either as `"a,b"` or as `["a", "b"]`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ListValue {
    One(String),
    Many(Vec<String>),
}

impl ListValue {
    fn joined(&self) -> String {
        match self {
            ListValue::One(s) => s.clone(),
            ListValue::Many(v) => v.join(","),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvrSection {
    pub c: Option<f64>,
    pub gamma: Option<f64>,
    pub epsilon: Option<f64>,
    pub kernel: Option<String>,
    pub tol: Option<f64>,
    pub max_passes: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FfnSection {
    pub dropout: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub optimizer: Option<String>,
    pub hidden: Option<ListValue>,
}

/// Everything a TOML config file may set. Flags win over file values.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,

    pub lexicon: Option<PathBuf>,
    pub lang: Option<String>,
    pub scale: Option<String>,
    pub schema: Option<String>,
    pub gold: Option<PathBuf>,
    pub gold_lang: Option<String>,
    pub gold_scale: Option<String>,
    pub gold_schema: Option<String>,
    pub embeddings: Option<PathBuf>,
    pub src_embeddings: Option<PathBuf>,
    pub tgt_embeddings: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub transform: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    pub model_file: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub max_words: Option<usize>,
    pub keep_case: Option<bool>,

    pub variable: Option<ListValue>,
    pub model: Option<ListValue>,
    pub baseline: Option<String>,
    pub averaging: Option<String>,
    pub folds: Option<usize>,
    pub iterations: Option<usize>,
    pub alpha: Option<f64>,
    pub save_models: Option<bool>,
    pub inverse: Option<bool>,

    #[serde(default)]
    pub svr: SvrSection,
    #[serde(default)]
    pub ffn: FfnSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

pub fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

pub fn require<T>(value: Option<T>, name: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("missing required option --{name} (flag or config key)")))
}

pub fn parse<T>(value: &str, what: &str) -> Result<T, Failure>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Failure::Usage(format!("invalid {what} '{value}': {e}")))
}

pub fn parse_list<T>(value: &str, what: &str) -> Result<Vec<T>, Failure>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(s, what))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(Failure::Usage(format!("empty {what} list")));
    }
    Ok(items)
}

pub fn list_or(flag: &Option<String>, file: &Option<ListValue>) -> Option<String> {
    flag.clone().or_else(|| file.as_ref().map(ListValue::joined))
}

/// Resolves a resource path; relative paths missing from the working
/// directory are looked up under the data directory.
pub fn resolve_path(path: PathBuf, data_dir: Option<&Path>) -> PathBuf {
    match data_dir {
        Some(dir) if path.is_relative() && !path.exists() => dir.join(path),
        _ => path,
    }
}

pub struct LexiconFlags<'a> {
    pub lang: &'a Option<String>,
    pub scale: &'a Option<String>,
    pub schema: &'a Option<String>,
}

pub fn lexicon_options(
    flags: LexiconFlags,
    file: (&Option<String>, &Option<String>, &Option<String>),
    default_lang: &str,
    default_scale: Option<Scale>,
    lowercase: bool,
) -> Result<LexiconOptions, Failure> {
    let lang = pick(flags.lang, file.0).unwrap_or_else(|| default_lang.to_string());
    let scale = match pick(flags.scale, file.1) {
        Some(s) => parse::<Scale>(&s, "scale")?,
        None => default_scale.unwrap_or_else(|| Scale::new(1.0, 5.0).expect("valid scale")),
    };
    let mut opts = LexiconOptions::new(lang, scale);
    if let Some(s) = pick(flags.schema, file.2) {
        opts.schema = parse::<LexiconSchema>(&s, "schema")?;
    }
    opts.lowercase = lowercase;
    Ok(opts)
}

/// Model hyperparameters and evaluation settings from flags or config.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct HyperArgs {
    /// SVR box constraint C
    #[arg(long = "svr-c")]
    pub svr_c: Option<f64>,
    /// RBF kernel width
    #[arg(long = "svr-gamma")]
    pub svr_gamma: Option<f64>,
    /// Insensitivity tube
    #[arg(long = "svr-epsilon")]
    pub svr_epsilon: Option<f64>,
    /// rbf or linear
    #[arg(long = "svr-kernel")]
    pub svr_kernel: Option<String>,
    /// KKT stopping tolerance
    #[arg(long = "svr-tol")]
    pub svr_tol: Option<f64>,
    #[arg(long = "svr-max-passes")]
    pub svr_max_passes: Option<usize>,
    /// Dropout probability (default 0.5 in-language, 0.8 for transfer)
    #[arg(long = "ffn-dropout")]
    pub ffn_dropout: Option<f64>,
    #[arg(long = "ffn-epochs")]
    pub ffn_epochs: Option<usize>,
    #[arg(long = "ffn-batch-size")]
    pub ffn_batch_size: Option<usize>,
    #[arg(long = "ffn-learning-rate")]
    pub ffn_learning_rate: Option<f64>,
    /// adam or sgd
    #[arg(long = "ffn-optimizer")]
    pub ffn_optimizer: Option<String>,
    /// Hidden layer sizes, e.g. 128,32
    #[arg(long = "ffn-hidden")]
    pub ffn_hidden: Option<String>,
    /// Number of cross-validation folds
    #[arg(long)]
    pub folds: Option<usize>,
    /// Compare against this model with a randomization test
    #[arg(long)]
    pub baseline: Option<String>,
    /// Randomization test iterations
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Significance level reported in the text table
    #[arg(long)]
    pub alpha: Option<f64>,
}

/// Builds the spec of one grid cell.
pub fn experiment_spec(
    task: Task,
    variable: Variable,
    model: ModelKind,
    seed: u64,
    hyper: &HyperArgs,
    file: &FileConfig,
) -> Result<ExperimentSpec, Failure> {
    let mut spec = ExperimentSpec::new(task, variable, model);
    spec.seed = seed;

    let svr_defaults = SvrParams::default();
    spec.svr = SvrParams {
        c: pick(&hyper.svr_c, &file.svr.c).unwrap_or(svr_defaults.c),
        gamma: pick(&hyper.svr_gamma, &file.svr.gamma).unwrap_or(svr_defaults.gamma),
        epsilon: pick(&hyper.svr_epsilon, &file.svr.epsilon).unwrap_or(svr_defaults.epsilon),
        kernel: match pick(&hyper.svr_kernel, &file.svr.kernel) {
            Some(k) => parse::<KernelKind>(&k, "kernel")?,
            None => svr_defaults.kernel,
        },
        tol: pick(&hyper.svr_tol, &file.svr.tol).unwrap_or(svr_defaults.tol),
        max_passes: pick(&hyper.svr_max_passes, &file.svr.max_passes).or(svr_defaults.max_passes),
    };
    spec.svr.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    let base = spec.ffn.clone();
    spec.ffn = FfnParams {
        hidden_sizes: match list_or(&hyper.ffn_hidden, &file.ffn.hidden) {
            Some(h) => parse_list::<usize>(&h, "hidden layer size")?,
            None => base.hidden_sizes,
        },
        dropout: pick(&hyper.ffn_dropout, &file.ffn.dropout).unwrap_or(base.dropout),
        epochs: pick(&hyper.ffn_epochs, &file.ffn.epochs).unwrap_or(base.epochs),
        batch_size: pick(&hyper.ffn_batch_size, &file.ffn.batch_size).unwrap_or(base.batch_size),
        learning_rate: pick(&hyper.ffn_learning_rate, &file.ffn.learning_rate).unwrap_or(base.learning_rate),
        optimizer: match pick(&hyper.ffn_optimizer, &file.ffn.optimizer) {
            Some(o) => parse::<Optimizer>(&o, "optimizer")?,
            None => base.optimizer,
        },
        seed,
    };
    spec.ffn.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    spec.folds = pick(&hyper.folds, &file.folds).unwrap_or(spec.folds);
    if spec.folds < 2 {
        return Err(Failure::Usage(format!("need at least 2 folds, got {}", spec.folds)));
    }
    spec.randomization_iterations = pick(&hyper.iterations, &file.iterations).unwrap_or(spec.randomization_iterations);
    spec.alpha = pick(&hyper.alpha, &file.alpha).unwrap_or(spec.alpha);
    if let Some(b) = pick(&hyper.baseline, &file.baseline) {
        spec.baseline = Some(parse::<ModelKind>(&b, "baseline")?);
    }
    if let Some(a) = &file.averaging {
        spec.averaging = parse::<Averaging>(a, "averaging")?;
    }
    Ok(spec)
}

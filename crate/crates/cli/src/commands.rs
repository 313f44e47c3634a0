use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use lexnorm::align::{learn_procrustes, AlignmentTransform, BilingualPairs};
use lexnorm::embed_store::{lang_from_path, parse_vec_file, standardize_own, EmbeddingSpace, VecOptions};
use lexnorm::io::write_atomic;
use lexnorm::norms::{load_lexicon, LexiconOptions, NormLexicon, Scale, TransferDictionary, Variable};
use lexnorm::pipelines::{
    predict_lexicon, run_coefficient_analysis, run_dictionary_transfer, run_embedding_transfer, run_in_language_cv,
    Averaging, ExperimentSpec, ModelKind, Task, TrainedModel,
};
use lexnorm::stats::{text_table, EvalReport};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{self, experiment_spec, lexicon_options, parse, parse_list, pick, require, FileConfig, LexiconFlags};
use crate::{Cli, Command, Failure, GoldArgs, GridArgs, LexiconArgs, VecArgs};

struct Ctx {
    file: FileConfig,
    seed: u64,
    out_dir: PathBuf,
    jobs: usize,
    data_dir: Option<PathBuf>,
}

impl Ctx {
    fn path(&self, flag: &Option<PathBuf>, file: &Option<PathBuf>) -> Option<PathBuf> {
        pick(flag, file).map(|p| config::resolve_path(p, self.data_dir.as_deref()))
    }

    fn required(&self, flag: &Option<PathBuf>, file: &Option<PathBuf>, name: &str) -> Result<PathBuf, Failure> {
        require(self.path(flag, file), name)
    }

    fn lowercase(&self, keep_case: bool) -> bool {
        !(keep_case || self.file.keep_case.unwrap_or(false))
    }

    fn vec_options(&self, vec: &VecArgs) -> VecOptions {
        VecOptions {
            lang: None,
            max_words: pick(&vec.max_words, &self.file.max_words),
            lowercase: self.lowercase(vec.keep_case),
        }
    }

    fn source_lexicon_options(&self, args: &LexiconArgs, default_lang: &str, lowercase: bool) -> Result<LexiconOptions, Failure> {
        lexicon_options(
            LexiconFlags {
                lang: &args.lang,
                scale: &args.scale,
                schema: &args.schema,
            },
            (&self.file.lang, &self.file.scale, &self.file.schema),
            default_lang,
            None,
            lowercase,
        )
    }

    fn gold_options(&self, args: &GoldArgs, default_lang: &str, scale: Scale, lowercase: bool) -> Result<LexiconOptions, Failure> {
        lexicon_options(
            LexiconFlags {
                lang: &args.gold_lang,
                scale: &args.gold_scale,
                schema: &args.gold_schema,
            },
            (&self.file.gold_lang, &self.file.gold_scale, &self.file.gold_schema),
            default_lang,
            Some(scale),
            lowercase,
        )
    }

    fn variables(&self, flag: &Option<String>) -> Result<Vec<Variable>, Failure> {
        match config::list_or(flag, &self.file.variable) {
            Some(v) => parse_list(&v, "variable"),
            None => Ok(vec![Variable::ConcMean]),
        }
    }

    fn grid(&self, grid: &GridArgs) -> Result<Vec<(Variable, ModelKind)>, Failure> {
        let models: Vec<ModelKind> = match config::list_or(&grid.model, &self.file.model) {
            Some(m) => parse_list(&m, "model")?,
            None => vec![ModelKind::Svr],
        };
        let vars = self.variables(&grid.variable)?;
        Ok(vars.iter().flat_map(|v| models.iter().map(move |m| (*v, *m))).collect())
    }

    fn pool(&self) -> Result<rayon::ThreadPool, Failure> {
        Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .context("cannot start worker threads")?)
    }
}

fn load_space(path: &Path, opts: &VecOptions) -> Result<EmbeddingSpace, Failure> {
    let parsed = parse_vec_file(path, opts)?;
    log::info!(
        "{}: {} vectors of dim {} ({} malformed, {} duplicate rows skipped)",
        path.display(),
        parsed.space.len(),
        parsed.space.dim(),
        parsed.malformed,
        parsed.duplicates
    );
    Ok(parsed.space)
}

fn load_lex(path: &Path, opts: &LexiconOptions) -> Result<NormLexicon, Failure> {
    let loaded = load_lexicon(path, opts)?;
    log::info!(
        "{}: {} entries ({} rows rejected, {} duplicates)",
        path.display(),
        loaded.lexicon.len(),
        loaded.rejected.len(),
        loaded.duplicates
    );
    Ok(loaded.lexicon)
}

fn check_variable(lexicon: &NormLexicon, var: Variable, path: &Path) -> Result<(), Failure> {
    if lexicon.has_variable(var) {
        Ok(())
    } else {
        Err(Failure::Data(anyhow::anyhow!("{} has no {var} ratings", path.display())))
    }
}

fn with_resources(mut report: EvalReport, resources: &Value) -> EvalReport {
    if let Some(obj) = report.config.as_object_mut() {
        obj.insert("resources".into(), resources.clone());
    }
    report
}

fn log_resolved(command: &str, resources: &Value, specs: &[ExperimentSpec]) {
    let snapshot = json!({
        "command": command,
        "resources": resources,
        "cells": specs.iter().map(ExperimentSpec::snapshot).collect::<Vec<_>>(),
    });
    log::info!("resolved config: {snapshot}");
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

/// Files produced by a command, written only after every cell succeeded.
#[derive(Default)]
struct Outputs {
    texts: Vec<(PathBuf, String)>,
    lexicons: Vec<(PathBuf, NormLexicon)>,
    models: Vec<(PathBuf, TrainedModel)>,
}

impl Outputs {
    fn reports(&mut self, dir: &Path, reports: &[EvalReport]) {
        if reports.is_empty() {
            return;
        }
        let jsonl: String = reports.iter().map(|r| r.to_json_line() + "\n").collect();
        self.texts.push((dir.join("report.jsonl"), jsonl));
        self.texts.push((dir.join("report.txt"), text_table(reports)));
    }

    fn write(self) -> Result<(), Failure> {
        let dirs = self
            .texts
            .iter()
            .map(|(p, _)| p)
            .chain(self.lexicons.iter().map(|(p, _)| p))
            .chain(self.models.iter().map(|(p, _)| p))
            .filter_map(|p| p.parent());
        for dir in dirs {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            }
        }
        for (path, text) in &self.texts {
            write_atomic(path, |w: &mut dyn Write| w.write_all(text.as_bytes()))?;
            log::info!("wrote {}", path.display());
        }
        for (path, lexicon) in &self.lexicons {
            lexicon.save(path)?;
            log::info!("wrote {} ({} words)", path.display(), lexicon.len());
        }
        for (path, model) in &self.models {
            model.save(path)?;
            log::info!("wrote {}", path.display());
        }
        Ok(())
    }
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.common.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let jobs = pick(&cli.common.jobs, &file.jobs)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    let ctx = Ctx {
        seed: pick(&cli.common.seed, &file.seed).unwrap_or(0),
        out_dir: pick(&cli.common.out_dir, &file.out_dir).unwrap_or_else(|| PathBuf::from("lexnorm-out")),
        data_dir: pick(&cli.common.data_dir, &file.data_dir),
        jobs,
        file,
    };
    match cli.command {
        Command::Align {
            src_embeddings,
            tgt_embeddings,
            pairs,
            output,
            inverse,
            vec,
        } => align(&ctx, src_embeddings, tgt_embeddings, pairs, output, inverse, &vec),
        Command::EvalCv {
            lexicon,
            embeddings,
            vec,
            grid,
            hyper,
        } => eval_cv(&ctx, &lexicon, embeddings, &vec, &grid, &hyper),
        Command::TransferEmbed {
            lexicon,
            src_embeddings,
            tgt_embeddings,
            transform,
            gold,
            save_models,
            vec,
            grid,
            hyper,
        } => {
            let paths = EmbedPaths {
                src: src_embeddings,
                tgt: tgt_embeddings,
                transform,
            };
            transfer_embed(&ctx, &lexicon, paths, &gold, save_models, &vec, &grid, &hyper)
        }
        Command::TransferDict {
            lexicon,
            dictionary,
            gold,
            median,
            keep_case,
            variable,
        } => transfer_dict(&ctx, &lexicon, dictionary, &gold, median, keep_case, &variable),
        Command::CoefAnalysis {
            lexicon,
            embeddings,
            vec,
            variable,
            hyper,
        } => coef_analysis(&ctx, &lexicon, embeddings, &vec, &variable, &hyper),
        Command::PredictLexicon {
            model_file,
            embeddings,
            variable,
            scale,
            lang,
            output,
            vec,
        } => predict(&ctx, model_file, embeddings, variable, scale, lang, output, &vec),
        Command::Inspect {
            lexicon,
            embeddings,
            dictionary,
            model_file,
            vec,
        } => inspect(&ctx, &lexicon, embeddings, dictionary, model_file, &vec),
    }
}

fn align(
    ctx: &Ctx,
    src: Option<PathBuf>,
    tgt: Option<PathBuf>,
    pairs: Option<PathBuf>,
    output: Option<PathBuf>,
    inverse: bool,
    vec: &VecArgs,
) -> Result<(), Failure> {
    let f = &ctx.file;
    let src = ctx.required(&src, &f.src_embeddings, "src-embeddings")?;
    let tgt = ctx.required(&tgt, &f.tgt_embeddings, "tgt-embeddings")?;
    let pairs_path = ctx.required(&pairs, &f.pairs, "pairs")?;
    let opts = ctx.vec_options(vec);
    let resources = json!({"src_embeddings": path_str(&src), "tgt_embeddings": path_str(&tgt), "pairs": path_str(&pairs_path), "vec": {"max_words": opts.max_words, "lowercase": opts.lowercase}});
    log_resolved("align", &resources, &[]);

    let src_space = load_space(&src, &opts)?;
    let tgt_space = load_space(&tgt, &opts)?;
    let pairs = BilingualPairs::load(&pairs_path, opts.lowercase)?;
    let transform = learn_procrustes(&src_space, &tgt_space, &pairs)?;
    log::info!("alignment learned from {} seed pairs", transform.pairs_used);

    let output = pick(&output, &f.output).unwrap_or_else(|| {
        ctx.out_dir
            .join(format!("transform.{}-{}.tsv", transform.source_lang, transform.target_lang))
    });
    let mut texts = vec![(output.clone(), transform_text(&transform)?)];
    if inverse || f.inverse.unwrap_or(false) {
        let inv = transform.inverse();
        let name = format!("transform.{}-{}.tsv", inv.source_lang, inv.target_lang);
        let path = output.parent().map_or_else(|| PathBuf::from(&name), |d| d.join(&name));
        texts.push((path, transform_text(&inv)?));
    }
    Outputs {
        texts,
        ..Outputs::default()
    }
    .write()
}

fn transform_text(t: &AlignmentTransform) -> Result<String, Failure> {
    let mut buf = Vec::new();
    t.write_tsv(&mut buf).context("cannot serialize transform")?;
    Ok(String::from_utf8(buf).expect("transform text is UTF-8"))
}

fn eval_cv(
    ctx: &Ctx,
    lex_args: &LexiconArgs,
    embeddings: Option<PathBuf>,
    vec: &VecArgs,
    grid: &GridArgs,
    hyper: &config::HyperArgs,
) -> Result<(), Failure> {
    let f = &ctx.file;
    let lex_path = ctx.required(&lex_args.lexicon, &f.lexicon, "lexicon")?;
    let emb_path = ctx.required(&embeddings, &f.embeddings, "embeddings")?;
    let vopts = ctx.vec_options(vec);
    let lopts = ctx.source_lexicon_options(lex_args, &lang_from_path(&emb_path), vopts.lowercase)?;
    let specs = ctx
        .grid(grid)?
        .into_iter()
        .map(|(v, m)| experiment_spec(Task::InLanguageCv, v, m, ctx.seed, hyper, f))
        .collect::<Result<Vec<_>, _>>()?;
    let resources = json!({"lexicon": path_str(&lex_path), "embeddings": path_str(&emb_path), "scale": lopts.scale.to_string(), "max_words": vopts.max_words, "lowercase": vopts.lowercase});
    log_resolved("eval-cv", &resources, &specs);

    let lexicon = load_lex(&lex_path, &lopts)?;
    for s in &specs {
        check_variable(&lexicon, s.variable, &lex_path)?;
    }
    let space = load_space(&emb_path, &vopts)?;
    let results: Vec<lexnorm::Result<EvalReport>> = ctx.pool()?.install(|| {
        specs
            .par_iter()
            .map(|s| run_in_language_cv(s, &lexicon, &space).map(|o| o.report))
            .collect()
    });
    let mut reports = Vec::new();
    for (spec, r) in specs.iter().zip(results) {
        let report = r.with_context(|| format!("{} with {}", spec.variable, spec.model))?;
        reports.push(with_resources(report, &resources));
    }
    print!("{}", text_table(&reports));
    let mut out = Outputs::default();
    out.reports(&ctx.out_dir, &reports);
    out.write()
}

struct EmbedPaths {
    src: Option<PathBuf>,
    tgt: Option<PathBuf>,
    transform: Option<PathBuf>,
}

#[allow(clippy::too_many_arguments)]
fn transfer_embed(
    ctx: &Ctx,
    lex_args: &LexiconArgs,
    paths: EmbedPaths,
    gold_args: &GoldArgs,
    save_models: bool,
    vec: &VecArgs,
    grid: &GridArgs,
    hyper: &config::HyperArgs,
) -> Result<(), Failure> {
    let f = &ctx.file;
    let lex_path = ctx.required(&lex_args.lexicon, &f.lexicon, "lexicon")?;
    let src_path = ctx.required(&paths.src, &f.src_embeddings, "src-embeddings")?;
    let tgt_path = ctx.required(&paths.tgt, &f.tgt_embeddings, "tgt-embeddings")?;
    let transform_path = ctx.path(&paths.transform, &f.transform);
    let gold_path = ctx.path(&gold_args.gold, &f.gold);
    let vopts = ctx.vec_options(vec);
    let lopts = ctx.source_lexicon_options(lex_args, &lang_from_path(&src_path), vopts.lowercase)?;
    let gopts = ctx.gold_options(gold_args, &lang_from_path(&tgt_path), lopts.scale, vopts.lowercase)?;
    let specs = ctx
        .grid(grid)?
        .into_iter()
        .map(|(v, m)| experiment_spec(Task::TransferEmbed, v, m, ctx.seed, hyper, f))
        .collect::<Result<Vec<_>, _>>()?;
    let resources = json!({
        "lexicon": path_str(&lex_path),
        "src_embeddings": path_str(&src_path),
        "tgt_embeddings": path_str(&tgt_path),
        "transform": transform_path.as_deref().map(path_str),
        "gold": gold_path.as_deref().map(path_str),
        "scale": lopts.scale.to_string(),
        "gold_scale": gopts.scale.to_string(),
        "max_words": vopts.max_words,
        "lowercase": vopts.lowercase,
    });
    log_resolved("transfer-embed", &resources, &specs);

    let lexicon = load_lex(&lex_path, &lopts)?;
    for s in &specs {
        check_variable(&lexicon, s.variable, &lex_path)?;
    }
    let gold = gold_path.as_deref().map(|p| load_lex(p, &gopts)).transpose()?;
    let src = load_space(&src_path, &vopts)?;
    let tgt = load_space(&tgt_path, &vopts)?;
    let transform = transform_path.as_deref().map(AlignmentTransform::load).transpose()?;

    let results: Vec<_> = ctx.pool()?.install(|| {
        specs
            .par_iter()
            .map(|s| run_embedding_transfer(s, &lexicon, &src, &tgt, transform.as_ref(), gold.as_ref()))
            .collect()
    });
    let save_models = save_models || f.save_models.unwrap_or(false);
    let mut out = Outputs::default();
    let mut reports = Vec::new();
    for (spec, r) in specs.iter().zip(results) {
        let outcome = r.with_context(|| format!("{} with {}", spec.variable, spec.model))?;
        if let Some(report) = outcome.report {
            reports.push(with_resources(report, &resources));
        }
        if let Some(lex) = outcome.lexicon {
            let name = format!("predicted.{}.{}.{}.tsv", tgt.lang, spec.variable, spec.model);
            out.lexicons.push((ctx.out_dir.join(name), lex));
        }
        if save_models {
            if let Some(model) = outcome.model {
                let name = format!("model.{}.{}.{}.txt", src.lang, spec.variable, spec.model);
                out.models.push((ctx.out_dir.join(name), model));
            }
        }
    }
    print!("{}", text_table(&reports));
    out.reports(&ctx.out_dir, &reports);
    out.write()
}

fn transfer_dict(
    ctx: &Ctx,
    lex_args: &LexiconArgs,
    dictionary: Option<PathBuf>,
    gold_args: &GoldArgs,
    median: bool,
    keep_case: bool,
    variable: &Option<String>,
) -> Result<(), Failure> {
    let f = &ctx.file;
    let lex_path = ctx.required(&lex_args.lexicon, &f.lexicon, "lexicon")?;
    let dict_path = ctx.required(&dictionary, &f.dictionary, "dictionary")?;
    let gold_path = ctx.path(&gold_args.gold, &f.gold);
    let lowercase = ctx.lowercase(keep_case);
    let lopts = ctx.source_lexicon_options(lex_args, "src", lowercase)?;
    let gopts = ctx.gold_options(gold_args, "tgt", lopts.scale, lowercase)?;
    let averaging = if median {
        Averaging::Median
    } else {
        match &f.averaging {
            Some(a) => parse::<Averaging>(a, "averaging")?,
            None => Averaging::Mean,
        }
    };
    let specs: Vec<ExperimentSpec> = ctx
        .variables(variable)?
        .into_iter()
        .map(|v| {
            let mut s = ExperimentSpec::new(Task::TransferDict, v, ModelKind::Svr);
            s.seed = ctx.seed;
            s.averaging = averaging;
            s
        })
        .collect();
    let resources = json!({
        "lexicon": path_str(&lex_path),
        "dictionary": path_str(&dict_path),
        "gold": gold_path.as_deref().map(path_str),
        "scale": lopts.scale.to_string(),
        "gold_scale": gopts.scale.to_string(),
        "lowercase": lowercase,
    });
    log_resolved("transfer-dict", &resources, &specs);

    let lexicon = load_lex(&lex_path, &lopts)?;
    let dict = TransferDictionary::load(&dict_path, lowercase)?;
    log::info!("{}: {} translation pairs", dict_path.display(), dict.len());
    let gold = gold_path.as_deref().map(|p| load_lex(p, &gopts)).transpose()?;

    let mut out = Outputs::default();
    let mut reports = Vec::new();
    for spec in &specs {
        check_variable(&lexicon, spec.variable, &lex_path)?;
        let outcome = run_dictionary_transfer(spec, &lexicon, &dict, gold.as_ref())
            .with_context(|| format!("dictionary transfer of {} through {}", spec.variable, dict_path.display()))?;
        if let Some(report) = outcome.report {
            reports.push(with_resources(report, &resources));
        }
        if let Some(lex) = outcome.lexicon {
            let name = format!("predicted.{}.{}.dict.tsv", lex.lang, spec.variable);
            out.lexicons.push((ctx.out_dir.join(name), lex));
        }
    }
    print!("{}", text_table(&reports));
    out.reports(&ctx.out_dir, &reports);
    out.write()
}

fn coef_analysis(
    ctx: &Ctx,
    lex_args: &LexiconArgs,
    embeddings: Option<PathBuf>,
    vec: &VecArgs,
    variable: &Option<String>,
    hyper: &config::HyperArgs,
) -> Result<(), Failure> {
    let f = &ctx.file;
    let lex_path = ctx.required(&lex_args.lexicon, &f.lexicon, "lexicon")?;
    let emb_path = ctx.required(&embeddings, &f.embeddings, "embeddings")?;
    let vopts = ctx.vec_options(vec);
    let lopts = ctx.source_lexicon_options(lex_args, &lang_from_path(&emb_path), vopts.lowercase)?;
    let specs = ctx
        .variables(variable)?
        .into_iter()
        .map(|v| experiment_spec(Task::CoefAnalysis, v, ModelKind::Svr, ctx.seed, hyper, f))
        .collect::<Result<Vec<_>, _>>()?;
    let resources = json!({"lexicon": path_str(&lex_path), "embeddings": path_str(&emb_path), "scale": lopts.scale.to_string(), "max_words": vopts.max_words, "lowercase": vopts.lowercase});
    log_resolved("coef-analysis", &resources, &specs);

    let lexicon = load_lex(&lex_path, &lopts)?;
    for s in &specs {
        check_variable(&lexicon, s.variable, &lex_path)?;
    }
    let space = load_space(&emb_path, &vopts)?;
    let results: Vec<_> = ctx.pool()?.install(|| {
        specs
            .par_iter()
            .map(|s| run_coefficient_analysis(s, &lexicon, &space))
            .collect()
    });
    let mut jsonl = String::new();
    let mut table = String::from("variable\tdims\tdims_for_50pct\tdims_for_80pct\n");
    for (spec, r) in specs.iter().zip(results) {
        let profile = r.with_context(|| format!("coefficient analysis of {}", spec.variable))?;
        let record = json!({
            "variable": spec.variable,
            "dims_for_50pct": profile.dims_for_50pct,
            "dims_for_80pct": profile.dims_for_80pct,
            "sorted_mass": profile.sorted_mass,
            "order": profile.order,
            "config": spec.snapshot(),
            "resources": resources,
        });
        jsonl.push_str(&record.to_string());
        jsonl.push('\n');
        table.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            spec.variable,
            profile.sorted_mass.len(),
            profile.dims_for_50pct,
            profile.dims_for_80pct
        ));
    }
    print!("{table}");
    Outputs {
        texts: vec![
            (ctx.out_dir.join("coef_profile.jsonl"), jsonl),
            (ctx.out_dir.join("coef_profile.txt"), table),
        ],
        ..Outputs::default()
    }
    .write()
}

#[allow(clippy::too_many_arguments)]
fn predict(
    ctx: &Ctx,
    model_file: Option<PathBuf>,
    embeddings: Option<PathBuf>,
    variable: Option<String>,
    scale: Option<String>,
    lang: Option<String>,
    output: Option<PathBuf>,
    vec: &VecArgs,
) -> Result<(), Failure> {
    let f = &ctx.file;
    let model_path = ctx.required(&model_file, &f.model_file, "model-file")?;
    let emb_path = ctx.required(&embeddings, &f.embeddings, "embeddings")?;
    let variable = match config::list_or(&variable, &f.variable) {
        Some(v) => parse::<Variable>(&v, "variable")?,
        None => Variable::ConcMean,
    };
    if !variable.is_mean() {
        return Err(Failure::Usage(format!("predicted lexicons carry mean ratings only, not {variable}")));
    }
    let scale = match pick(&scale, &f.scale) {
        Some(s) => parse::<Scale>(&s, "scale")?,
        None => Scale::new(1.0, 5.0).expect("valid scale"),
    };
    let mut vopts = ctx.vec_options(vec);
    vopts.lang = pick(&lang, &f.lang);
    let lang = vopts.lang.clone().unwrap_or_else(|| lang_from_path(&emb_path));
    let output = pick(&output, &f.output).unwrap_or_else(|| ctx.out_dir.join(format!("predicted.{lang}.{variable}.tsv")));
    let resources = json!({"model_file": path_str(&model_path), "embeddings": path_str(&emb_path), "variable": variable, "scale": scale.to_string(), "output": path_str(&output)});
    log_resolved("predict-lexicon", &resources, &[]);

    let model = TrainedModel::load(&model_path)?;
    let space = standardize_own(&load_space(&emb_path, &vopts)?)?;
    let lexicon = predict_lexicon(&model, &space, variable, scale, None)?;
    Outputs {
        lexicons: vec![(output, lexicon)],
        ..Outputs::default()
    }
    .write()
}

fn inspect(
    ctx: &Ctx,
    lex_args: &LexiconArgs,
    embeddings: Option<PathBuf>,
    dictionary: Option<PathBuf>,
    model_file: Option<PathBuf>,
    vec: &VecArgs,
) -> Result<(), Failure> {
    let f = &ctx.file;
    let lex_path = ctx.path(&lex_args.lexicon, &f.lexicon);
    let emb_path = ctx.path(&embeddings, &f.embeddings);
    let dict_path = ctx.path(&dictionary, &f.dictionary);
    let model_path = ctx.path(&model_file, &f.model_file);
    if lex_path.is_none() && emb_path.is_none() && dict_path.is_none() && model_path.is_none() {
        return Err(Failure::Usage(
            "inspect needs at least one of --lexicon, --embeddings, --dictionary, --model-file".into(),
        ));
    }
    let vopts = ctx.vec_options(vec);
    if let Some(p) = &emb_path {
        let parsed = parse_vec_file(p, &vopts)?;
        println!(
            "embeddings {}: lang {}, {} words, dim {}, {} malformed rows, {} duplicates",
            p.display(),
            parsed.space.lang,
            parsed.space.len(),
            parsed.space.dim(),
            parsed.malformed,
            parsed.duplicates
        );
    }
    if let Some(p) = &lex_path {
        let lopts = ctx.source_lexicon_options(lex_args, "und", vopts.lowercase)?;
        let loaded = load_lexicon(p, &lopts)?;
        println!(
            "lexicon {}: {} entries on scale {}, {} rejected rows, {} duplicates",
            p.display(),
            loaded.lexicon.len(),
            loaded.lexicon.scale,
            loaded.rejected.len(),
            loaded.duplicates
        );
        for var in Variable::ALL {
            let values: Vec<f64> = loaded.lexicon.ratings(var).map(|(_, v)| v).collect();
            if values.is_empty() {
                continue;
            }
            let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            println!("  {var}: {} rated, min {min}, max {max}, mean {mean:.4}", values.len());
        }
    }
    if let Some(p) = &dict_path {
        let dict = TransferDictionary::load(p, vopts.lowercase)?;
        let targets: std::collections::HashSet<&str> = dict.pairs().iter().map(|(_, t)| t.as_str()).collect();
        let sources: std::collections::HashSet<&str> = dict.pairs().iter().map(|(s, _)| s.as_str()).collect();
        println!(
            "dictionary {}: {} pairs, {} source words, {} target words",
            p.display(),
            dict.len(),
            sources.len(),
            targets.len()
        );
    }
    if let Some(p) = &model_path {
        match TrainedModel::load(p)? {
            TrainedModel::Svr(m) => println!(
                "model {}: svr, kernel {}, {} support vectors, dim {}, converged {}",
                p.display(),
                m.params.kernel,
                m.dual_coefs.len(),
                m.dim(),
                m.converged
            ),
            TrainedModel::Ffn(m) => println!(
                "model {}: ffn, input dim {}, hidden {:?}, dropout {}",
                p.display(),
                m.input_dim(),
                m.params.hidden_sizes,
                m.params.dropout
            ),
        }
    }
    Ok(())
}

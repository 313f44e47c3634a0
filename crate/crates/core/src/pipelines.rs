//! Experiment drivers: in-language cross-validation, cross-lingual transfer
//! through aligned embeddings or through a dictionary, linear-coefficient
//! analysis, and lexicon prediction for unannotated languages.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::align::{apply_transform, AlignmentTransform};
use crate::embed_store::{intersect, standardize_own, EmbeddingSpace};
use crate::ffn::{ffn_init, ffn_train, FfnModel, FfnParams, FFN_MAGIC};
use crate::io::open_text;
use crate::norms::{NormEntry, NormLexicon, Scale, TransferDictionary, Variable};
use crate::stats::{approx_randomization_test, make_folds, EvalReport, FoldScore, Metric};
use crate::svr::{svr_train, KernelKind, SvrModel, SvrParams, SVR_MAGIC};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    InLanguageCv,
    TransferEmbed,
    TransferDict,
    CoefAnalysis,
    PredictLexicon,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::InLanguageCv => "in_language_cv",
            Task::TransferEmbed => "transfer_embed",
            Task::TransferDict => "transfer_dict",
            Task::CoefAnalysis => "coef_analysis",
            Task::PredictLexicon => "predict_lexicon",
        }
    }

    /// FFN dropout used unless overridden: stronger regularization when the
    /// model has to generalize to another language's space.
    pub fn default_dropout(self) -> f64 {
        match self {
            Task::TransferEmbed | Task::PredictLexicon => 0.8,
            _ => 0.5,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Svr,
    Ffn,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Svr => "svr",
            ModelKind::Ffn => "ffn",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svr" => Ok(ModelKind::Svr),
            "ffn" => Ok(ModelKind::Ffn),
            _ => Err(Error::invalid(format!("unknown model '{s}' (expected svr or ffn)"))),
        }
    }
}

/// How colliding dictionary translations are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    Mean,
    Median,
}

impl FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Averaging::Mean),
            "median" => Ok(Averaging::Median),
            _ => Err(Error::invalid(format!("unknown averaging '{s}'"))),
        }
    }
}

/// One fully resolved experiment cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub task: Task,
    pub variable: Variable,
    pub model: ModelKind,
    /// Second system compared against `model` with the randomization test.
    pub baseline: Option<ModelKind>,
    pub svr: SvrParams,
    pub ffn: FfnParams,
    pub folds: usize,
    pub seed: u64,
    pub randomization_iterations: usize,
    pub alpha: f64,
    pub averaging: Averaging,
}

impl ExperimentSpec {
    pub fn new(task: Task, variable: Variable, model: ModelKind) -> Self {
        ExperimentSpec {
            task,
            variable,
            model,
            baseline: None,
            svr: SvrParams::default(),
            ffn: FfnParams {
                dropout: task.default_dropout(),
                ..FfnParams::default()
            },
            folds: 3,
            seed: 0,
            randomization_iterations: 10_000,
            alpha: 0.05,
            averaging: Averaging::Mean,
        }
    }

    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("spec is always serializable")
    }

    fn report(&self, model: &str, gold: &[f64], pred: &[f64]) -> Result<EvalReport> {
        let score = FoldScore::compute(gold, pred)?;
        Ok(EvalReport {
            task: self.task.to_string(),
            variable: self.variable.to_string(),
            model: model.to_string(),
            spearman: score.spearman,
            pearson: score.pearson,
            n: score.n,
            per_fold: None,
            baseline: None,
            p_value: None,
            config: self.snapshot(),
        })
    }

    fn compare(&self, report: &mut EvalReport, gold: &[f64], pred: &[f64], base: &[f64]) -> Result<()> {
        if let Some(b) = self.baseline {
            report.baseline = Some(b.to_string());
            report.p_value = Some(approx_randomization_test(
                gold,
                pred,
                base,
                Metric::Spearman,
                self.randomization_iterations,
                self.seed,
            )?);
        }
        Ok(())
    }
}

/// A trained regressor of either family.
#[derive(Clone, Debug, PartialEq)]
pub enum TrainedModel {
    Svr(SvrModel),
    Ffn(FfnModel),
}

impl TrainedModel {
    pub fn train(kind: ModelKind, x: &Array2<f64>, y: &[f64], spec: &ExperimentSpec, seed: u64) -> Result<Self> {
        match kind {
            ModelKind::Svr => Ok(TrainedModel::Svr(svr_train(x, y, &spec.svr, seed)?)),
            ModelKind::Ffn => {
                let params = FfnParams {
                    seed,
                    ..spec.ffn.clone()
                };
                let model = ffn_init(x.ncols(), &params)?;
                Ok(TrainedModel::Ffn(ffn_train(model, x, y, &params)?))
            }
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Svr(_) => ModelKind::Svr,
            TrainedModel::Ffn(_) => ModelKind::Ffn,
        }
    }

    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        match self {
            TrainedModel::Svr(m) => m.predict(x),
            TrainedModel::Ffn(m) => m.predict(x),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        match self {
            TrainedModel::Svr(m) => m.save(path),
            TrainedModel::Ffn(m) => m.save(path),
        }
    }

    /// Loads either model file format, recognised by its first line.
    pub fn load(path: &Path) -> Result<Self> {
        use std::io::BufRead;
        let lines: Vec<String> = open_text(path)?
            .lines()
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::io(path, e))?;
        match lines.first().map(|l| l.trim_end()) {
            Some(SVR_MAGIC) => Ok(TrainedModel::Svr(SvrModel::parse(&lines, path)?)),
            Some(FFN_MAGIC) => Ok(TrainedModel::Ffn(FfnModel::parse(&lines, path)?)),
            _ => Err(Error::format(path, "not a model file")),
        }
    }
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(fold as u64 + 1)
}

fn pooled_cv(
    kind: ModelKind,
    x: &Array2<f64>,
    y: &[f64],
    spec: &ExperimentSpec,
) -> Result<(Vec<f64>, Vec<FoldScore>)> {
    let plan = make_folds(y.len(), spec.folds, spec.seed)?;
    let mut pooled = vec![f64::NAN; y.len()];
    let mut per_fold = Vec::with_capacity(spec.folds);
    for fold in 0..spec.folds {
        let train = plan.train_indices(fold);
        let test = plan.test_indices(fold);
        let ytrain: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let model = TrainedModel::train(kind, &x.select(Axis(0), &train), &ytrain, spec, fold_seed(spec.seed, fold))?;
        let pred = model.predict(&x.select(Axis(0), &test))?;
        let gold: Vec<f64> = test.iter().map(|&i| y[i]).collect();
        per_fold.push(FoldScore::compute(&gold, &pred)?);
        for (&i, p) in test.iter().zip(pred) {
            pooled[i] = p;
        }
    }
    Ok((pooled, per_fold))
}

/// Outcome of in-language cross-validation.
#[derive(Clone, Debug)]
pub struct CvOutcome {
    pub report: EvalReport,
    pub words: Vec<String>,
    pub gold: Vec<f64>,
    /// Held-out prediction of every word, pooled over folds.
    pub predictions: Vec<f64>,
}

/// k-fold cross-validation over the lexicon words covered by the space.
/// Headline correlations are computed over the pooled held-out predictions;
/// per-fold scores are reported alongside.
pub fn run_in_language_cv(spec: &ExperimentSpec, lexicon: &NormLexicon, space: &EmbeddingSpace) -> Result<CvOutcome> {
    let space = standardize_own(space)?;
    let data = intersect(&space, lexicon, spec.variable)?;
    let (pred, per_fold) = pooled_cv(spec.model, &data.features, &data.targets, spec)?;
    let mut report = spec.report(&spec.model.to_string(), &data.targets, &pred)?;
    report.per_fold = Some(per_fold);
    if let Some(base) = spec.baseline {
        let (base_pred, _) = pooled_cv(base, &data.features, &data.targets, spec)?;
        spec.compare(&mut report, &data.targets, &pred, &base_pred)?;
    }
    Ok(CvOutcome {
        report,
        words: data.words,
        gold: data.targets,
        predictions: pred,
    })
}

/// Outcome of a cross-lingual transfer.
#[derive(Clone, Debug)]
pub struct TransferOutcome {
    /// Present when target gold ratings were supplied.
    pub report: Option<EvalReport>,
    /// `(target word, predicted rating)`.
    pub predictions: Vec<(String, f64)>,
    /// Predicted ratings as a lexicon; only for mean variables.
    pub lexicon: Option<NormLexicon>,
    /// The regressor, for embedding transfer.
    pub model: Option<TrainedModel>,
}

fn evaluate_against(
    spec: &ExperimentSpec,
    model: &str,
    predictions: &[(String, f64)],
    gold: &NormLexicon,
) -> Result<(EvalReport, Vec<usize>, Vec<f64>)> {
    let index: std::collections::HashMap<&str, usize> = predictions
        .iter()
        .enumerate()
        .map(|(i, (w, _))| (w.as_str(), i))
        .collect();
    let mut rows = Vec::new();
    let mut g = Vec::new();
    for (word, value) in gold.ratings(spec.variable) {
        if let Some(&i) = index.get(word) {
            rows.push(i);
            g.push(value);
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let p: Vec<f64> = rows.iter().map(|&i| predictions[i].1).collect();
    Ok((spec.report(model, &g, &p)?, rows, g))
}

fn lexicon_from_predictions(
    lang: &str,
    scale: Scale,
    variable: Variable,
    predictions: &[(String, f64)],
) -> Result<NormLexicon> {
    if !variable.is_mean() {
        return Err(Error::invalid(format!(
            "predicted lexicons carry mean ratings only, not {variable}"
        )));
    }
    let mut skipped = 0;
    let entries: Vec<NormEntry> = predictions
        .iter()
        .filter(|(w, _)| {
            let ok = !w.is_empty() && !w.chars().any(char::is_whitespace);
            skipped += usize::from(!ok);
            ok
        })
        .map(|(w, p)| NormEntry::new(w.clone()).with(variable, scale.clamp(*p)))
        .collect();
    if skipped > 0 {
        log::warn!("{skipped} vocabulary entries containing whitespace left out of the lexicon");
    }
    NormLexicon::new(lang, scale, entries)
}

/// Trains on every rated source word (features mapped into the target space
/// by `transform` and standardized per space) and predicts every target word.
pub fn run_embedding_transfer(
    spec: &ExperimentSpec,
    src_lexicon: &NormLexicon,
    src_space: &EmbeddingSpace,
    tgt_space: &EmbeddingSpace,
    transform: Option<&AlignmentTransform>,
    tgt_gold: Option<&NormLexicon>,
) -> Result<TransferOutcome> {
    if src_space.dim() != tgt_space.dim() {
        return Err(Error::DimensionMismatch {
            expected: src_space.dim(),
            actual: tgt_space.dim(),
        });
    }
    let aligned = match transform {
        Some(t) => apply_transform(src_space, t)?,
        None => src_space.clone(),
    };
    let src = standardize_own(&aligned)?;
    let tgt = standardize_own(tgt_space)?;
    let data = intersect(&src, src_lexicon, spec.variable)?;
    let model = TrainedModel::train(spec.model, &data.features, &data.targets, spec, spec.seed)?;

    let scores = model.predict(tgt.matrix())?;
    let predictions: Vec<(String, f64)> = tgt.words().iter().cloned().zip(scores).collect();

    let report = match tgt_gold {
        Some(gold) => {
            let (mut report, rows, g) = evaluate_against(spec, &spec.model.to_string(), &predictions, gold)?;
            if let Some(base) = spec.baseline {
                let base_model = TrainedModel::train(base, &data.features, &data.targets, spec, spec.seed)?;
                let feats = tgt.matrix().select(Axis(0), &rows);
                let base_pred = base_model.predict(&feats)?;
                let pred: Vec<f64> = rows.iter().map(|&i| predictions[i].1).collect();
                spec.compare(&mut report, &g, &pred, &base_pred)?;
            }
            Some(report)
        }
        None => None,
    };
    let lexicon = if spec.variable.is_mean() {
        Some(lexicon_from_predictions(&tgt.lang, src_lexicon.scale, spec.variable, &predictions)?)
    } else {
        None
    };
    Ok(TransferOutcome {
        report,
        predictions,
        lexicon,
        model: Some(model),
    })
}

/// Projects source ratings onto target words through the dictionary.
/// Targets reached from several source words get the mean (or median) of
/// the transferred ratings. Output is sorted by target word.
pub fn dictionary_transfer(
    variable: Variable,
    averaging: Averaging,
    src_lexicon: &NormLexicon,
    dict: &TransferDictionary,
) -> Vec<(String, f64)> {
    let ratings: std::collections::HashMap<&str, f64> = src_lexicon.ratings(variable).collect();
    let mut pooled: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (s, t) in dict.pairs() {
        if let Some(&r) = ratings.get(s.as_str()) {
            pooled.entry(t.as_str()).or_default().push(r);
        }
    }
    pooled
        .into_iter()
        .map(|(t, mut values)| {
            // sorted so the result does not depend on dictionary line order
            values.sort_by(f64::total_cmp);
            let n = values.len();
            let v = match averaging {
                Averaging::Mean => values.iter().sum::<f64>() / n as f64,
                Averaging::Median if n % 2 == 1 => values[n / 2],
                Averaging::Median => (values[n / 2 - 1] + values[n / 2]) / 2.0,
            };
            (t.to_string(), v)
        })
        .collect()
}

pub fn run_dictionary_transfer(
    spec: &ExperimentSpec,
    src_lexicon: &NormLexicon,
    dict: &TransferDictionary,
    tgt_gold: Option<&NormLexicon>,
) -> Result<TransferOutcome> {
    let predictions = dictionary_transfer(spec.variable, spec.averaging, src_lexicon, dict);
    if predictions.is_empty() {
        return Err(Error::invalid("dictionary transfer produced an empty lexicon"));
    }
    let report = match tgt_gold {
        Some(gold) => Some(evaluate_against(spec, "dic", &predictions, gold)?.0),
        None => None,
    };
    let lexicon = if spec.variable.is_mean() {
        let lang = tgt_gold.map_or("und", |g| g.lang.as_str());
        Some(lexicon_from_predictions(lang, src_lexicon.scale, spec.variable, &predictions)?)
    } else {
        None
    };
    Ok(TransferOutcome {
        report,
        predictions,
        lexicon,
        model: None,
    })
}

/// Cumulative share of absolute linear coefficients, largest first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientProfile {
    pub sorted_mass: Vec<f64>,
    pub dims_for_50pct: usize,
    pub dims_for_80pct: usize,
    /// Dimension indices ordered by decreasing absolute coefficient.
    pub order: Vec<usize>,
}

impl CoefficientProfile {
    pub fn from_weights(w: &Array1<f64>) -> Result<Self> {
        let abs: Vec<f64> = w.iter().map(|v| v.abs()).collect();
        let total: f64 = abs.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::invalid("coefficients are all zero"));
        }
        let mut order: Vec<usize> = (0..abs.len()).collect();
        order.sort_by(|&i, &j| abs[j].total_cmp(&abs[i]).then(i.cmp(&j)));
        let mut acc = 0.0;
        let mut sorted_mass: Vec<f64> = order
            .iter()
            .map(|&i| {
                acc += abs[i] / total;
                acc
            })
            .collect();
        // the running sum may end a few ulps away from 1
        *sorted_mass.last_mut().expect("at least one dimension") = 1.0;
        let dims_for = |frac: f64| sorted_mass.iter().position(|&m| m >= frac - 1e-12).unwrap() + 1;
        Ok(CoefficientProfile {
            dims_for_50pct: dims_for(0.5),
            dims_for_80pct: dims_for(0.8),
            sorted_mass,
            order,
        })
    }

    /// Smallest number of dimensions covering `frac` of the mass.
    pub fn dims_for(&self, frac: f64) -> usize {
        self.sorted_mass.iter().position(|&m| m >= frac - 1e-12).unwrap_or(self.sorted_mass.len() - 1) + 1
    }
}

/// Fits a linear-kernel SVR on the standardized space and profiles how the
/// coefficient mass spreads across dimensions.
pub fn run_coefficient_analysis(
    spec: &ExperimentSpec,
    lexicon: &NormLexicon,
    space: &EmbeddingSpace,
) -> Result<CoefficientProfile> {
    let space = standardize_own(space)?;
    let data = intersect(&space, lexicon, spec.variable)?;
    let params = SvrParams {
        kernel: KernelKind::Linear,
        ..spec.svr.clone()
    };
    let model = svr_train(&data.features, &data.targets, &params, spec.seed)?;
    CoefficientProfile::from_weights(&model.linear_weights()?)
}

/// Predicts `variable` for every word of an already standardized target
/// space, in vocabulary order, clamping to `scale`. Writes the canonical TSV
/// when `output` is given.
pub fn predict_lexicon(
    model: &TrainedModel,
    tgt_space: &EmbeddingSpace,
    variable: Variable,
    scale: Scale,
    output: Option<&Path>,
) -> Result<NormLexicon> {
    if !variable.is_mean() {
        return Err(Error::invalid(format!(
            "predicted lexicons carry mean ratings only, not {variable}"
        )));
    }
    let scores = model.predict(tgt_space.matrix())?;
    let predictions: Vec<(String, f64)> = tgt_space.words().iter().cloned().zip(scores).collect();
    let lexicon = lexicon_from_predictions(&tgt_space.lang, scale, variable, &predictions)?;
    if let Some(path) = output {
        lexicon.save(path)?;
    }
    Ok(lexicon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn lex(pairs: &[(&str, f64)]) -> NormLexicon {
        NormLexicon::new(
            "hr",
            Scale::new(1.0, 5.0).unwrap(),
            pairs
                .iter()
                .map(|(w, v)| NormEntry::new(*w).with(Variable::ConcMean, *v))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn collisions_are_averaged() {
        let src = lex(&[("s1", 3.0), ("s2", 5.0), ("s3", 2.7)]);
        let dict = TransferDictionary::new([("s1", "t"), ("s2", "t"), ("s3", "u"), ("zz", "v")]);
        let out = dictionary_transfer(Variable::ConcMean, Averaging::Mean, &src, &dict);
        assert_eq!(out, vec![("t".to_string(), 4.0), ("u".to_string(), 2.7)]);
        let src = lex(&[("a", 1.0), ("b", 2.0), ("c", 4.5)]);
        let dict = TransferDictionary::new([("a", "t"), ("b", "t"), ("c", "t")]);
        let med = dictionary_transfer(Variable::ConcMean, Averaging::Median, &src, &dict);
        assert_eq!(med[0].1, 2.0);
    }

    #[test]
    fn empty_dictionary_transfer_fails() {
        let spec = ExperimentSpec::new(Task::TransferDict, Variable::ConcMean, ModelKind::Svr);
        let src = lex(&[("s1", 3.0)]);
        let dict = TransferDictionary::new([("other", "t")]);
        assert!(run_dictionary_transfer(&spec, &src, &dict, None).is_err());
    }

    #[test]
    fn profile_from_hand_weights() {
        let p = CoefficientProfile::from_weights(&array![0.2, -0.5, 0.3]).unwrap();
        let expected = [0.5, 0.8, 1.0];
        for (a, b) in p.sorted_mass.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(p.order, vec![1, 2, 0]);
        assert_eq!(p.dims_for_50pct, 1);
        assert_eq!(p.dims_for_80pct, 2);
        assert!(CoefficientProfile::from_weights(&array![0.0, 0.0]).is_err());
    }

    #[test]
    fn dropout_default_follows_task() {
        let a = ExperimentSpec::new(Task::InLanguageCv, Variable::ConcMean, ModelKind::Ffn);
        let b = ExperimentSpec::new(Task::TransferEmbed, Variable::ConcMean, ModelKind::Ffn);
        assert_eq!(a.ffn.dropout, 0.5);
        assert_eq!(b.ffn.dropout, 0.8);
    }

    #[test]
    fn predict_lexicon_cardinality_and_std_rejection() {
        let space = EmbeddingSpace::new(
            "de",
            vec!["a".into(), "b".into(), "c".into()],
            array![[1.0], [2.0], [3.0]],
            true,
        )
        .unwrap();
        let model = TrainedModel::Svr(SvrModel::constant(1, 3.3, SvrParams::default()));
        let scale = Scale::new(1.0, 5.0).unwrap();
        let out = predict_lexicon(&model, &space, Variable::ConcMean, scale, None).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.entries().iter().all(|e| e.conc_mean == Some(3.3)));
        assert_eq!(out.entries()[2].word, "c");
        assert!(predict_lexicon(&model, &space, Variable::ConcStd, scale, None).is_err());
    }
}

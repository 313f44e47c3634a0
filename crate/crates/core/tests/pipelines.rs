mod common;

use common::*;
use lexnorm::align::{learn_procrustes, AlignmentTransform};
use lexnorm::embed_store::{intersect, standardize_own};
use lexnorm::norms::{load_lexicon, LexiconOptions, Variable};
use lexnorm::pipelines::*;
use lexnorm::svr::{svr_train, KernelKind, SvrParams};
use ndarray::Array2;

fn spec(task: Task, model: ModelKind) -> ExperimentSpec {
    ExperimentSpec::new(task, Variable::ConcMean, model)
}

#[test]
fn cross_validation_is_reproducible() {
    let data = monolingual(120, 8, 0.05, 4);
    for model in [ModelKind::Svr, ModelKind::Ffn] {
        let mut s = spec(Task::InLanguageCv, model);
        s.seed = 7;
        let a = run_in_language_cv(&s, &data.lexicon, &data.space).unwrap();
        let b = run_in_language_cv(&s, &data.lexicon, &data.space).unwrap();
        assert_eq!(a.report.to_json_line(), b.report.to_json_line());
        assert_eq!(a.report.per_fold.as_ref().unwrap().len(), 3);
        assert_eq!(a.report.n, 120);
        assert!(a.report.spearman > 0.5);
    }
}

#[test]
fn baseline_comparison_attaches_p_value() {
    let data = monolingual(90, 5, 0.05, 1);
    let mut s = spec(Task::InLanguageCv, ModelKind::Svr);
    s.baseline = Some(ModelKind::Ffn);
    s.randomization_iterations = 500;
    let out = run_in_language_cv(&s, &data.lexicon, &data.space).unwrap();
    let p = out.report.p_value.unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert_eq!(out.report.baseline.as_deref(), Some("ffn"));
}

#[test]
fn identity_transfer_equals_training_fit() {
    let data = monolingual(80, 6, 0.05, 9);
    let s = spec(Task::TransferEmbed, ModelKind::Svr);
    let id = AlignmentTransform::identity(6, "src", "src");
    let out = run_embedding_transfer(&s, &data.lexicon, &data.space, &data.space, Some(&id), Some(&data.lexicon)).unwrap();

    let std = standardize_own(&data.space).unwrap();
    let rows = intersect(&std, &data.lexicon, Variable::ConcMean).unwrap();
    let model = svr_train(&rows.features, &rows.targets, &s.svr, s.seed).unwrap();
    let fit = model.predict(&rows.features).unwrap();
    for ((w, p), f) in out.predictions.iter().zip(&fit) {
        assert!((p - f).abs() < 1e-9, "{w}: {p} vs {f}");
    }
    assert_eq!(out.report.unwrap().n, 80);
}

#[test]
fn noiseless_twin_transfer_keeps_in_language_quality() {
    let mut tw = twin(400, 12, 0.0, 0.6, 3);
    // identical gold on both sides
    tw.tgt_gold = lexicon_from("tgt", tw.tgt_space.words(), &tw.src.lexicon.ratings(Variable::ConcMean).map(|(_, v)| v).collect::<Vec<_>>());
    let in_lang = run_in_language_cv(&spec(Task::InLanguageCv, ModelKind::Svr), &tw.src.lexicon, &tw.src.space)
        .unwrap()
        .report
        .spearman;
    let t = learn_procrustes(&tw.src.space, &tw.tgt_space, &tw.seed_pairs).unwrap();
    let out = run_embedding_transfer(
        &spec(Task::TransferEmbed, ModelKind::Svr),
        &tw.src.lexicon,
        &tw.src.space,
        &tw.tgt_space,
        Some(&t),
        Some(&tw.tgt_gold),
    )
    .unwrap();
    let transfer = out.report.unwrap().spearman;
    assert!(transfer >= 0.95 * in_lang, "transfer {transfer} vs in-language {in_lang}");
    let lex = out.lexicon.unwrap();
    assert_eq!(lex.len(), 400);
    assert_eq!(lex.lang, "tgt");
}

#[test]
fn std_variables_are_predicted_but_not_emitted_as_lexicon() {
    let data = monolingual(50, 4, 0.05, 2);
    let entries = data
        .lexicon
        .entries()
        .iter()
        .map(|e| e.clone().with(Variable::ConcStd, 0.5 + e.conc_mean.unwrap().abs()))
        .collect();
    let lexicon = lexnorm::norms::NormLexicon::new("src", synth_scale(), entries).unwrap();
    let mut s = ExperimentSpec::new(Task::TransferEmbed, Variable::ConcStd, ModelKind::Svr);
    s.svr.epsilon = 0.01;
    let out = run_embedding_transfer(&s, &lexicon, &data.space, &data.space, None, Some(&lexicon)).unwrap();
    assert!(out.lexicon.is_none());
    assert_eq!(out.predictions.len(), 50);
    assert!(out.report.is_some());
}

#[test]
fn dictionary_transfer_reports_on_covered_words() {
    let tw = twin(200, 6, 0.1, 0.6, 5);
    let out = run_dictionary_transfer(&spec(Task::TransferDict, ModelKind::Svr), &tw.src.lexicon, &tw.dictionary, Some(&tw.tgt_gold)).unwrap();
    let report = out.report.unwrap();
    assert_eq!(report.model, "dic");
    assert_eq!(report.n, out.predictions.len());
    assert!(report.spearman > 0.5);
}

#[test]
fn coefficient_profile_from_planted_dimension() {
    let mut r = rng(6);
    let x = normal_matrix(&mut r, 200, 10);
    let words: Vec<String> = (0..200).map(|i| format!("w{i}")).collect();
    let y: Vec<f64> = x.column(3).iter().map(|v| 0.5 + 0.3 * v).collect();
    let space = lexnorm::embed_store::EmbeddingSpace::new("xx", words.clone(), x, true).unwrap();
    let lex = lexicon_from("xx", &words, &y);
    let mut s = spec(Task::CoefAnalysis, ModelKind::Svr);
    s.svr.epsilon = 0.01;
    let profile = run_coefficient_analysis(&s, &lex, &space).unwrap();
    assert_eq!(profile.dims_for_50pct, 1);
    assert_eq!(profile.order[0], 3);
    assert!(profile.sorted_mass.windows(2).all(|w| w[0] <= w[1]));
    assert!((profile.sorted_mass.last().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn predicted_lexicon_round_trips_through_tsv() {
    let data = monolingual(30, 4, 0.05, 8);
    let std = standardize_own(&data.space).unwrap();
    let rows = intersect(&std, &data.lexicon, Variable::ConcMean).unwrap();
    let params = SvrParams {
        kernel: KernelKind::Rbf,
        ..SvrParams::default()
    };
    let model = TrainedModel::Svr(svr_train(&rows.features, &rows.targets, &params, 0).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pred.tsv");
    let lex = predict_lexicon(&model, &std, Variable::ConcMean, synth_scale(), Some(&path)).unwrap();
    let opts = LexiconOptions::new("src", synth_scale());
    let back = load_lexicon(&path, &opts).unwrap();
    assert_eq!(back.lexicon.entries(), lex.entries());
    assert!(back.rejected.is_empty());

    let model_path = dir.path().join("model.txt");
    model.save(&model_path).unwrap();
    let loaded = TrainedModel::load(&model_path).unwrap();
    let probe = Array2::from_elem((3, 4), 0.25);
    assert_eq!(loaded.predict(&probe).unwrap(), model.predict(&probe).unwrap());
}

#[test]
fn downsampling_yields_requested_size() {
    let data = monolingual(5000, 2, 0.05, 1);
    let small = data.lexicon.downsample(3000, 11).unwrap();
    assert_eq!(small.len(), 3000);
}

//! Stage-by-stage pipeline execution.
//!
//! Stages run in a fixed order: load, exclude, split, preprocess, then the
//! optional lasso / rfe / smote / grid_search stages, training, evaluation and
//! the optional explain stage. Every output file is hashed into
//! `manifest.json`; when a stage fails the manifest records the stage, the
//! error, and marks the run as failed.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::index::sample;
use riskforest_core::explain::{global_summary, shap_exact, shap_sampled, shap_values_csv};
use riskforest_core::forest::fit_forest;
use riskforest_core::metrics::ReportMetadata;
use riskforest_core::resample::smote;
use riskforest_core::seed::{derive_seed, rng_from_seed};
use riskforest_core::selection::{fit_lasso, lambda_grid, lambda_max, lasso_select, rfe, RfeConfig};
use riskforest_core::tabular::{
    apply_preprocessor, exclude_rows, fit_preprocessor, load_csv, load_schema, split,
};
use riskforest_core::tuning::{cross_validate, grid_search, stratified_kfold};
use riskforest_core::{
    CvResult, Dataset, DesignMatrix, EvalReport, SelectionMethod, SelectionResult,
    ShapExplanation, SplitResult, ValueFunction,
};
use serde::Serialize;

use crate::bundle::ModelBundle;
use crate::config::{PipelineConfig, StageOrder};
use crate::error::{CliError, Result};
use crate::manifest::{sha256_hex, Manifest, OutputDir, RunLock, RunStatus};
use crate::synth::{generate_synthetic, write_dataset_csv};

pub const MODEL_BUNDLE: &str = "model_bundle.json";
pub const EVAL_REPORT: &str = "eval_report.json";
pub const ROC_CSV: &str = "roc.csv";
pub const SELECTION: &str = "selection.json";
pub const CV_RESULTS: &str = "cv_results.csv";
pub const SMOTE_AUDIT: &str = "smote_audit.csv";
pub const SHAP_VALUES: &str = "shap_values.csv";
pub const SHAP_SUMMARY: &str = "shap_summary.json";

/// Every file name a run may write, besides the manifest.
pub const OUTPUT_FILES: &[&str] = &[
    MODEL_BUNDLE,
    EVAL_REPORT,
    ROC_CSV,
    SELECTION,
    CV_RESULTS,
    SMOTE_AUDIT,
    SHAP_VALUES,
    SHAP_SUMMARY,
    crate::manifest::MANIFEST_FILE,
];

fn at<T>(stage: &'static str, r: riskforest_core::Result<T>) -> Result<T> {
    r.map_err(|source| CliError::Stage { stage, source })
}

/// Load the configured input: a CSV with its schema, or the synthetic spec.
pub fn load_input(cfg: &PipelineConfig) -> Result<Dataset> {
    match (&cfg.input.csv, &cfg.input.schema) {
        (Some(csv), Some(schema)) => {
            let schema = load_schema(schema).map_err(CliError::Data)?;
            load_csv(csv, &schema, &cfg.label_column).map_err(CliError::Data)
        }
        _ => generate_synthetic(&cfg.synthetic_spec()),
    }
}

/// Content hash of the dataset's canonical CSV form.
pub fn dataset_id(d: &Dataset, label_column: &str) -> Result<String> {
    let mut buf = Vec::new();
    write_dataset_csv(d, label_column, &mut buf)?;
    Ok(sha256_hex(&buf))
}

/// Input after loading, exclusion and the train/test split.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub dataset_id: String,
    /// The dataset after exclusion.
    pub data: Dataset,
    pub excluded_row_ids: Vec<String>,
    pub split: SplitResult,
}

pub fn prepare_data(cfg: &PipelineConfig) -> Result<PreparedData> {
    let raw = load_input(cfg)?;
    let dataset_id = dataset_id(&raw, &cfg.label_column)?;
    let (data, excluded_row_ids) = exclude_rows(&raw);
    let split = split(&data, cfg.train_fraction, cfg.seed).map_err(CliError::Data)?;
    Ok(PreparedData {
        dataset_id,
        data,
        excluded_row_ids,
        split,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaScore {
    pub lambda: f64,
    pub kept_columns: Vec<usize>,
    pub cv_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LassoReport {
    pub lambda_max: f64,
    pub lambda: f64,
    pub coefficients: Vec<f64>,
    pub converged: bool,
    pub iterations_run: usize,
    /// Empty when the penalty was fixed in the config.
    pub path: Vec<LambdaScore>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub report: EvalReport,
    pub bundle: ModelBundle,
    pub selection: Option<SelectionResult>,
    pub cv: Option<CvResult>,
    pub explanations: Vec<ShapExplanation>,
}

#[derive(Debug)]
struct RunState {
    out: OutputDir,
    stage: &'static str,
    seeds: BTreeMap<String, u64>,
    dataset_id: String,
    test_row_ids: Vec<String>,
    excluded_row_ids: Vec<String>,
    warnings: Vec<String>,
}

impl RunState {
    fn manifest(&self, cfg: &PipelineConfig, failure: Option<&CliError>) -> Manifest {
        Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            status: if failure.is_some() {
                RunStatus::Failed
            } else {
                RunStatus::Complete
            },
            failed_stage: failure.map(|_| self.stage.to_string()),
            error: failure.map(|e| e.to_string()),
            seed: cfg.seed,
            seeds: self.seeds.clone(),
            stages: cfg.stages.enabled().into_iter().map(String::from).collect(),
            config: cfg.to_toml(),
            dataset_id: self.dataset_id.clone(),
            test_row_ids: self.test_row_ids.clone(),
            excluded_row_ids: self.excluded_row_ids.clone(),
            warnings: self.warnings.clone(),
            files: self.out.files().to_vec(),
        }
    }

    fn seed(&mut self, cfg: &PipelineConfig, stage: &str) -> u64 {
        let s = cfg.stage_seed(stage);
        self.seeds.insert(stage.to_string(), s);
        s
    }
}

/// Execute the pipeline into `cfg.output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let dir = cfg.output_dir.clone();
    let _lock = RunLock::acquire(&dir)?;
    let out = OutputDir::new(&dir);
    out.clear(OUTPUT_FILES)?;
    let mut state = RunState {
        out,
        stage: "load",
        seeds: BTreeMap::new(),
        dataset_id: String::new(),
        test_row_ids: Vec::new(),
        excluded_row_ids: Vec::new(),
        warnings: Vec::new(),
    };
    match execute(cfg, &mut state) {
        Ok(mut output) => {
            let manifest = state.manifest(cfg, None);
            state.out.write_manifest(&manifest)?;
            output.manifest = manifest;
            Ok(output)
        }
        Err(e) => {
            // best effort: the original error matters more than a failed write
            let _ = state.out.write_manifest(&state.manifest(cfg, Some(&e)));
            Err(e)
        }
    }
}

fn execute(cfg: &PipelineConfig, st: &mut RunState) -> Result<PipelineOutput> {
    st.stage = "load";
    let prepared = prepare_data(cfg)?;
    st.seeds.insert("split".into(), cfg.seed);
    st.dataset_id = prepared.dataset_id.clone();
    st.excluded_row_ids = prepared.excluded_row_ids.clone();
    if !prepared.excluded_row_ids.is_empty() {
        st.warnings.push(format!(
            "{} rows excluded for missing more than half of the critical features",
            prepared.excluded_row_ids.len()
        ));
    }
    let SplitResult { train, test, .. } = &prepared.split;
    st.test_row_ids = test.row_ids().to_vec();

    st.stage = "preprocess";
    let fit_rows = match cfg.order {
        StageOrder::Default => train,
        StageOrder::Paper => &prepared.data,
    };
    let pre = at("preprocess", fit_preprocessor(fit_rows))?;
    let train_m = at("preprocess", apply_preprocessor(&pre, train))?;
    let test_m = at("preprocess", apply_preprocessor(&pre, test))?;
    st.warnings.extend(test_m.warnings.iter().map(|w| format!("test rows: {w}")));
    let columns = pre.output_columns();

    // selection
    let selection_input = match cfg.order {
        StageOrder::Default => train_m.clone(),
        StageOrder::Paper => at("preprocess", apply_preprocessor(&pre, &prepared.data))?,
    };
    let mut selection: Option<SelectionResult> = None;
    let mut lasso_report = None;
    if cfg.stages.lasso {
        st.stage = "lasso";
        let seed = st.seed(cfg, "lasso");
        let (result, report) = at("lasso", lasso_stage(cfg, &selection_input, seed))?;
        selection = Some(result);
        lasso_report = Some(report);
    }
    if cfg.stages.rfe {
        st.stage = "rfe";
        let seed = st.seed(cfg, "rfe");
        let before = selection
            .clone()
            .unwrap_or_else(|| SelectionResult::identity(columns.len(), SelectionMethod::Rfe));
        let sub = selection_input.x.select(Axis(1), &before.kept_columns);
        let target = cfg.rfe.target_count;
        let step = if sub.ncols() <= target {
            let mut r = SelectionResult::identity(sub.ncols(), SelectionMethod::Rfe);
            r.warnings.push(format!(
                "rfe skipped: {} columns already at or below target {target}",
                sub.ncols()
            ));
            r
        } else {
            let rcfg = RfeConfig {
                target_count: target,
                step: cfg.rfe.step,
                cv_folds: cfg.rfe.cv_folds,
                seed,
                forest: cfg.selection_forest.to_config(seed),
            };
            at("rfe", rfe(sub.view(), &selection_input.y, &rcfg))?
        };
        selection = Some(if cfg.stages.lasso { before.then(step) } else { step });
    }
    let kept: Vec<usize> = selection
        .as_ref()
        .map_or_else(|| (0..columns.len()).collect(), |s| s.kept_columns.clone());
    if let Some(sel) = &selection {
        st.warnings.extend(sel.warnings.iter().cloned());
        let doc = serde_json::json!({
            "selection": sel.to_report(&columns),
            "lasso": lasso_report,
        });
        st.out.write(SELECTION, serde_json::to_string_pretty(&doc).expect("json").as_bytes())?;
    }
    let train_sel = train_m.select_columns(&kept);
    let test_sel = test_m.select_columns(&kept);

    // resampling parameters are shared by the smote stage and the CV folds
    let smote_cfg = if cfg.stages.smote {
        Some(cfg.smote.to_config(st.seed(cfg, "smote")))
    } else {
        None
    };
    let forest_seed = st.seed(cfg, "forest");
    let base = cfg.forest.to_config(forest_seed);

    let (fit_x, fit_y) = match &smote_cfg {
        Some(scfg) => {
            st.stage = "smote";
            let res = at("smote", smote(train_sel.x.view(), &train_sel.y, scfg))?;
            if cfg.smote.audit {
                st.out.write(SMOTE_AUDIT, smote_audit_csv(&train_sel.row_ids, &res).as_bytes())?;
            }
            (res.x, res.y)
        }
        None => (train_sel.x.clone(), train_sel.y.clone()),
    };

    let mut cv = None;
    let forest_cfg = if cfg.stages.grid_search {
        st.stage = "grid_search";
        let folds = at(
            "grid_search",
            stratified_kfold(&train_sel.y, cfg.grid.cv_folds, st.seed(cfg, "grid_search")),
        )?;
        let result = at(
            "grid_search",
            grid_search(
                train_sel.x.view(),
                &train_sel.y,
                &cfg.grid.spec(),
                &base,
                &folds,
                smote_cfg.as_ref(),
                cfg.grid.metric,
            ),
        )?;
        st.out.write(CV_RESULTS, result.to_csv().as_bytes())?;
        let best = result.best_cell().clone();
        cv = Some(result);
        best
    } else {
        base
    };

    st.stage = "train";
    let forest = at(
        "train",
        fit_forest(fit_x.view(), &fit_y, &forest_cfg, train_sel.columns.clone()),
    )?;
    let bundle = ModelBundle {
        preprocessor: pre,
        selected_columns: kept,
        selected_names: train_sel.columns.clone(),
        forest,
    };
    let bundle_json = bundle.to_json();
    st.out.write(MODEL_BUNDLE, bundle_json.as_bytes())?;

    st.stage = "evaluate";
    let report = at(
        "evaluate",
        evaluate_matrix(
            &bundle,
            &test_sel,
            ReportMetadata {
                model_id: sha256_hex(bundle_json.as_bytes()),
                dataset_id: st.dataset_id.clone(),
                seed: cfg.seed,
            },
        ),
    )?;
    st.out.write(EVAL_REPORT, at("evaluate", report.to_json())?.as_bytes())?;
    st.out.write(ROC_CSV, report.roc.to_csv().as_bytes())?;

    let mut explanations = Vec::new();
    if cfg.stages.explain {
        st.stage = "explain";
        let seed = st.seed(cfg, "explain");
        let n_inst = cfg.explain.instances.min(test_sel.x.nrows());
        let instances: Vec<usize> = (0..n_inst).collect();
        let background = background_rows(train_sel.x.view(), cfg.explain.background, seed);
        explanations = at(
            "explain",
            explain_rows(&bundle, background.view(), test_sel.x.view(), &instances, cfg, seed),
        )?;
        let ids: Vec<String> = instances.iter().map(|&i| test_sel.row_ids[i].clone()).collect();
        write_shap_outputs(&mut st.out, &ids, &bundle.selected_names, &explanations)?;
    }

    Ok(PipelineOutput {
        dir: cfg.output_dir.clone(),
        manifest: st.manifest(cfg, None),
        report,
        bundle,
        selection,
        cv,
        explanations,
    })
}

/// Score a fixed penalty, or choose one from the log grid by stratified CV
/// accuracy of the selection forest on the kept columns. Ties keep the larger
/// penalty.
fn lasso_stage(
    cfg: &PipelineConfig,
    m: &DesignMatrix,
    seed: u64,
) -> riskforest_core::Result<(SelectionResult, LassoReport)> {
    let y: Vec<f64> = m.y.iter().map(|&v| f64::from(v)).collect();
    let lmax = lambda_max(m.x.view(), &y)?;
    let p = &cfg.lasso;
    let fit = |lambda: f64| fit_lasso(m.x.view(), &y, lambda, p.max_iter, p.tol);

    let mut path = Vec::new();
    let chosen = match p.lambda {
        Some(l) => fit(l)?,
        None => {
            let folds = stratified_kfold(&m.y, cfg.grid.cv_folds, seed)?;
            let forest = cfg.selection_forest.to_config(seed);
            let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
            let mut best: Option<(f64, riskforest_core::LassoModel)> = None;
            for lambda in lambda_grid(lmax, p.grid_points, p.grid_ratio) {
                let model = fit(lambda)?;
                let kept = lasso_select(&model, p.threshold).kept_columns;
                let score = match cache.get(&kept) {
                    Some(&s) => s,
                    None => {
                        let sub = m.x.select(Axis(1), &kept);
                        let s = cross_validate(sub.view(), &m.y, &forest, &folds, None, Default::default())?
                            .mean;
                        cache.insert(kept.clone(), s);
                        s
                    }
                };
                path.push(LambdaScore {
                    lambda,
                    kept_columns: kept,
                    cv_accuracy: score,
                });
                if best.as_ref().is_none_or(|(s, _)| score > *s) {
                    best = Some((score, model));
                }
            }
            best.expect("lambda grid is never empty").1
        }
    };
    let mut result = lasso_select(&chosen, p.threshold);
    if !chosen.converged {
        result.warnings.push(format!(
            "lasso did not converge within {} sweeps at lambda {}",
            p.max_iter, chosen.lambda
        ));
    }
    let report = LassoReport {
        lambda_max: lmax,
        lambda: chosen.lambda,
        coefficients: chosen.coefficients.clone(),
        converged: chosen.converged,
        iterations_run: chosen.iterations_run,
        path,
    };
    Ok((result, report))
}

fn smote_audit_csv(train_ids: &[String], res: &riskforest_core::SmoteOutput) -> String {
    let n_orig = train_ids.len();
    let mut out = String::from("synthetic_index,base_row_id,neighbor_row_id,interp\n");
    for (k, p) in res.provenance.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            n_orig + k,
            train_ids[p.base],
            train_ids[p.neighbor],
            p.interp
        ));
    }
    out
}

pub fn evaluate_matrix(
    bundle: &ModelBundle,
    m: &DesignMatrix,
    metadata: ReportMetadata,
) -> riskforest_core::Result<EvalReport> {
    let pred = bundle.forest.predict_batch(m.x.view())?;
    let proba = bundle.forest.predict_proba_batch(m.x.view())?;
    EvalReport::evaluate(&m.y, &pred, &proba, metadata)
}

/// Up to `n` rows sampled without replacement, kept in their original order.
pub fn background_rows(x: ArrayView2<f64>, n: usize, seed: u64) -> Array2<f64> {
    let total = x.nrows();
    if n >= total {
        return x.to_owned();
    }
    let mut idx = sample(&mut rng_from_seed(seed), total, n).into_vec();
    idx.sort_unstable();
    x.select(Axis(0), &idx)
}

/// Exact Shapley values when the width allows it, sampled otherwise.
pub fn explain_rows(
    bundle: &ModelBundle,
    background: ArrayView2<f64>,
    x: ArrayView2<f64>,
    rows: &[usize],
    cfg: &PipelineConfig,
    seed: u64,
) -> riskforest_core::Result<Vec<ShapExplanation>> {
    let exact = x.ncols() <= cfg.explain.exact_limit;
    rows.iter()
        .map(|&i| {
            let instance = x.row(i).to_vec();
            let v = ValueFunction::new(&bundle.forest, background, &instance)?;
            if exact {
                shap_exact(&v, cfg.explain.exact_limit)
            } else {
                shap_sampled(&v, cfg.explain.permutations, derive_seed(seed, "instance", i as u64))
            }
        })
        .collect()
}

pub fn write_shap_outputs(
    out: &mut OutputDir,
    ids: &[String],
    columns: &[String],
    explanations: &[ShapExplanation],
) -> Result<()> {
    out.write(SHAP_VALUES, shap_values_csv(ids, columns, explanations).as_bytes())?;
    let summary = at("explain", global_summary(explanations))?;
    let doc = serde_json::json!({
        "columns": columns,
        "mean_abs": summary.mean_abs,
        "mean": summary.mean,
        "ranking": summary.ranking.iter().map(|&j| &columns[j]).collect::<Vec<_>>(),
        "methods": explanations.iter().map(|e| e.method).collect::<Vec<_>>(),
        "max_efficiency_gap": explanations.iter().map(|e| e.efficiency_gap().abs()).fold(0.0, f64::max),
    });
    out.write(SHAP_SUMMARY, serde_json::to_string_pretty(&doc).expect("json").as_bytes())
}

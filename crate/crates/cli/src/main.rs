use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use riskforest_cli::config::{ExplainParams, PipelineConfig, StageOrder};
use riskforest_cli::error::{CliError, Result};
use riskforest_cli::manifest::OutputDir;
use riskforest_cli::pipeline::{
    background_rows, dataset_id, evaluate_matrix, explain_rows, write_shap_outputs, ROC_CSV,
};
use riskforest_cli::synth::{generate_synthetic, write_synthetic, LABEL_COLUMN};
use riskforest_cli::{run_ablation, run_pipeline, ModelBundle, SyntheticSpec};
use riskforest_core::metrics::ReportMetadata;
use riskforest_core::seed::derive_seed;
use riskforest_core::tabular::{load_csv, load_schema};
use riskforest_core::Dataset;

#[derive(Parser)]
#[command(name = "riskforest", version, about = "Random-forest mortality risk pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset (data.csv + schema.toml).
    Synth(SynthArgs),
    /// Run the full pipeline into a run directory.
    Pipeline(PipelineArgs),
    /// Run the four ablation rows and write ablation.csv.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
        /// Enable each stage on its own instead of cumulatively.
        #[arg(long)]
        independent: bool,
    },
    /// Score a labelled CSV with a saved model bundle.
    Evaluate(EvaluateArgs),
    /// Shapley explanations for rows of a CSV under a saved model bundle.
    Explain(ExplainArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// TOML file with a synthetic spec; flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    positive_rate: Option<f64>,
    #[arg(long)]
    missing_rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    /// Pipeline config (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_order)]
    order: Option<StageOrder>,
    /// Fit preprocessing and selection on all rows before splitting; same as `--order paper`.
    #[arg(long, conflicts_with = "order")]
    paper_order: bool,
    /// Write smote_audit.csv with the provenance of every synthetic row.
    #[arg(long)]
    audit: bool,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    no_lasso: bool,
    #[arg(long)]
    no_rfe: bool,
    #[arg(long)]
    no_smote: bool,
    #[arg(long)]
    no_grid_search: bool,
    #[arg(long)]
    no_explain: bool,
    /// Print the resolved config as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long, default_value = LABEL_COLUMN)]
    label: String,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Output directory for eval_report.json and roc.csv.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Output directory for shap_values.csv and shap_summary.json.
    #[arg(long)]
    out: PathBuf,
    /// Rows sampled from the data as background.
    #[arg(long, default_value_t = ExplainParams::default().background)]
    background: usize,
    /// Number of leading rows to explain.
    #[arg(long, default_value_t = ExplainParams::default().instances)]
    instances: usize,
    #[arg(long, default_value_t = ExplainParams::default().exact_limit)]
    exact_limit: usize,
    #[arg(long, default_value_t = ExplainParams::default().permutations)]
    permutations: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn parse_order(s: &str) -> std::result::Result<StageOrder, String> {
    match s {
        "default" => Ok(StageOrder::Default),
        "paper" => Ok(StageOrder::Paper),
        _ => Err(format!("unknown order `{s}` (expected `default` or `paper`)")),
    }
}

fn resolve_config(args: &RunArgs) -> Result<PipelineConfig> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(order) = args.order {
        cfg.order = order;
    }
    if args.paper_order {
        cfg.order = StageOrder::Paper;
    }
    cfg.smote.audit |= args.audit;
    cfg.validate()?;
    Ok(cfg)
}

fn load_data(args: &DataArgs) -> Result<(ModelBundle, Dataset)> {
    let bundle = ModelBundle::load(&args.bundle)?;
    let schema = load_schema(&args.schema).map_err(CliError::Data)?;
    let data = load_csv(&args.data, &schema, &args.label).map_err(CliError::Data)?;
    Ok((bundle, data))
}

fn stage<T>(name: &'static str, r: riskforest_core::Result<T>) -> Result<T> {
    r.map_err(|source| CliError::Stage { stage: name, source })
}

fn synth(args: SynthArgs) -> Result<()> {
    let mut spec = match &args.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(CliError::io(p))?;
            toml::from_str::<SyntheticSpec>(&text)?
        }
        None => SyntheticSpec::default(),
    };
    spec.n_rows = args.rows.unwrap_or(spec.n_rows);
    spec.positive_rate = args.positive_rate.unwrap_or(spec.positive_rate);
    spec.missing_rate = args.missing_rate.unwrap_or(spec.missing_rate);
    spec.seed = args.seed.unwrap_or(spec.seed);
    let d = generate_synthetic(&spec)?;
    write_synthetic(&d, &args.out)?;
    let pos = d.labels().iter().filter(|&&l| l == 1).count();
    println!(
        "wrote {} rows ({pos} positive, {} missing cells) to {}",
        d.n_rows(),
        d.missing_count(),
        args.out.display()
    );
    Ok(())
}

fn pipeline(args: PipelineArgs) -> Result<()> {
    let mut cfg = resolve_config(&args.run)?;
    let s = &mut cfg.stages;
    s.lasso &= !args.no_lasso;
    s.rfe &= !args.no_rfe;
    s.smote &= !args.no_smote;
    s.grid_search &= !args.no_grid_search;
    s.explain &= !args.no_explain;
    if args.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let out = run_pipeline(&cfg)?;
    let r = &out.report;
    println!("run directory: {}", out.dir.display());
    println!("stages: {}", out.manifest.stages.join(", "));
    println!("features: {}", out.bundle.selected_names.join(", "));
    println!(
        "test accuracy {:.4}  precision {:.4}  recall {:.4}  f1 {:.4}  auc {:.4}",
        r.accuracy, r.precision, r.recall, r.f1, r.roc.auc
    );
    for w in &out.manifest.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn ablate(run: RunArgs, independent: bool) -> Result<()> {
    let cfg = resolve_config(&run)?;
    let table = run_ablation(&cfg, independent)?;
    print!("{}", table.to_csv());
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let (bundle, data) = load_data(&args.data)?;
    let m = bundle.design(&data).map_err(CliError::Data)?;
    let metadata = ReportMetadata {
        model_id: riskforest_cli::manifest::sha256_hex(bundle.to_json().as_bytes()),
        dataset_id: dataset_id(&data, &args.data.label)?,
        seed: args.seed,
    };
    let report = stage("evaluate", evaluate_matrix(&bundle, &m, metadata))?;
    let mut out = prepare_out(&args.out)?;
    out.write("eval_report.json", stage("evaluate", report.to_json())?.as_bytes())?;
    out.write(ROC_CSV, report.roc.to_csv().as_bytes())?;
    println!(
        "accuracy {:.4}  precision {:.4}  recall {:.4}  f1 {:.4}  auc {:.4}",
        report.accuracy, report.precision, report.recall, report.f1, report.roc.auc
    );
    Ok(())
}

fn explain(args: ExplainArgs) -> Result<()> {
    let (bundle, data) = load_data(&args.data)?;
    let m = bundle.design(&data).map_err(CliError::Data)?;
    let cfg = PipelineConfig {
        explain: ExplainParams {
            background: args.background,
            instances: args.instances,
            exact_limit: args.exact_limit,
            permutations: args.permutations,
        },
        ..PipelineConfig::default()
    };
    cfg.validate()?;
    let seed = derive_seed(args.seed, "explain", 0);
    let background = background_rows(m.x.view(), args.background, seed);
    let rows: Vec<usize> = (0..args.instances.min(m.x.nrows())).collect();
    let expls = stage(
        "explain",
        explain_rows(&bundle, background.view(), m.x.view(), &rows, &cfg, seed),
    )?;
    let ids: Vec<String> = rows.iter().map(|&i| m.row_ids[i].clone()).collect();
    let mut out = prepare_out(&args.out)?;
    write_shap_outputs(&mut out, &ids, &bundle.selected_names, &expls)?;
    println!("explained {} rows into {}", rows.len(), args.out.display());
    Ok(())
}

fn prepare_out(dir: &Path) -> Result<OutputDir> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    Ok(OutputDir::new(dir))
}

fn main() -> ExitCode {
    // Usage errors are config errors (1); clap's own default of 2 means data errors here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Pipeline(a) => pipeline(a),
        Command::Ablate { run, independent } => ablate(run, independent),
        Command::Evaluate(a) => evaluate(a),
        Command::Explain(a) => explain(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

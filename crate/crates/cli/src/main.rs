use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mace_cli::config::{merge_json, Domain, ExperimentConfig, RUNS_DIR_ENV};
use mace_cli::data::{train_from_dataset, write_file, Dataset};
use mace_cli::error::{CliError, Result};
use mace_cli::report::{compare, MetricsReport};
use mace_cli::{evaluate, run_experiment};
use mace_core::adapt::Method;
use mace_core::models::TrainConfig;
use mace_core::tasks::ik::IkTaskConfig;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Cross-entropy adaptation of generative models to observed evidence.
///
/// Every verb accepts `--config <file>`; values present in the file take
/// precedence over flags.
#[derive(Parser)]
#[command(name = "mace", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample valid chain configurations and their end-effector positions.
    GenData(GenDataArgs),
    /// Fit an autoregressive prior to a dataset.
    TrainPrior(TrainArgs),
    /// Tune a model with the configured method and evaluate it.
    Tune(ExperimentArgs),
    /// Evaluate a model without tuning.
    Eval(EvalArgs),
    /// Tabulate reports of one domain; exits 1 if mace > is > prior_only fails.
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Pairs to keep [default: 200000].
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    links: Option<usize>,
    #[arg(long)]
    link_length: Option<f64>,
    #[arg(long)]
    joint_limit: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenDataOptions {
    out: PathBuf,
    #[serde(default = "default_count")]
    count: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    task: IkTaskConfig,
}

fn default_count() -> usize {
    200_000
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    components: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainOptions {
    data: PathBuf,
    out: PathBuf,
    #[serde(default)]
    train: TrainConfig,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    domain: Option<Domain>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    /// Model document to start from.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = RUNS_DIR_ENV)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    eval_samples: Option<usize>,
    #[arg(long)]
    prior_only_batches: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    grad_steps: Option<usize>,
    #[arg(long)]
    quantile: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    minibatch_fraction: Option<f64>,
    #[arg(long)]
    weight_clip: Option<f64>,
    /// IK goal as `x,y`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    goal: Option<Vec<f64>>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Write the report here as well as to stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Report files, or run directories holding `report.json`.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    serde_json::from_value(Value::String(s.into())).map_err(|_| format!("unknown method `{s}` (mace, is, prior_only)"))
}

fn set(obj: &mut Value, path: &[&str], v: Option<Value>) {
    let Some(v) = v else { return };
    let mut slot = obj;
    for key in &path[..path.len() - 1] {
        slot = &mut slot[*key];
    }
    slot[path[path.len() - 1]] = v;
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Flag values overlaid by the config file, then parsed.
fn resolve<T: serde::de::DeserializeOwned>(mut base: Value, file: &Option<PathBuf>) -> Result<T> {
    if let Some(path) = file {
        merge_json(&mut base, read_json(path)?);
    }
    serde_json::from_value(base).map_err(CliError::config)
}

fn experiment_config(a: &ExperimentArgs) -> Result<ExperimentConfig> {
    let file = a.config.as_deref().map(read_json).transpose()?;
    let file_domain = file.as_ref().and_then(|f| f.get("domain")).map(|d| serde_json::from_value::<Domain>(d.clone()));
    let domain = match (file_domain, a.domain) {
        (Some(d), _) => d.map_err(CliError::config)?,
        (None, Some(d)) => d,
        (None, None) => return Err(CliError::Config("no domain given (--domain or config file)".into())),
    };
    let mut base = serde_json::to_value(ExperimentConfig::preset(domain)).expect("config serializes");
    set(&mut base, &["name"], a.name.as_ref().map(|v| json!(v)));
    set(&mut base, &["method"], a.method.map(|m| json!(m)));
    set(&mut base, &["model", "path"], a.model.as_ref().map(|v| json!(v)));
    set(&mut base, &["seed"], a.seed.map(|v| json!(v)));
    set(&mut base, &["output_dir"], a.output_dir.as_ref().map(|v| json!(v)));
    set(&mut base, &["eval_samples"], a.eval_samples.map(|v| json!(v)));
    set(&mut base, &["prior_only_batches"], a.prior_only_batches.map(|v| json!(v)));
    set(&mut base, &["mace", "iterations"], a.iterations.map(|v| json!(v)));
    set(&mut base, &["mace", "batch_size"], a.batch_size.map(|v| json!(v)));
    set(&mut base, &["mace", "grad_steps"], a.grad_steps.map(|v| json!(v)));
    set(&mut base, &["mace", "quantile"], a.quantile.map(|v| json!(v)));
    set(&mut base, &["mace", "learning_rate"], a.lr.map(|v| json!(v)));
    set(&mut base, &["mace", "minibatch_fraction"], a.minibatch_fraction.map(|v| json!(v)));
    set(&mut base, &["mace", "weight_clip"], a.weight_clip.map(|v| json!(v)));
    if let Some(g) = &a.goal {
        if domain != Domain::Ik {
            return Err(CliError::Config("--goal only applies to the ik domain".into()));
        }
        set(&mut base, &["score", "params", "goal"], Some(json!({"x": g[0], "y": g[1]})));
    }
    if let Some(f) = file {
        merge_json(&mut base, f);
    }
    let cfg: ExperimentConfig = serde_json::from_value(base).map_err(CliError::config)?;
    cfg.validate()?;
    Ok(cfg)
}

fn gen_data(a: GenDataArgs) -> Result<()> {
    let mut base = json!({"task": IkTaskConfig::default(), "seed": 0});
    set(&mut base, &["out"], a.out.map(|v| json!(v)));
    set(&mut base, &["count"], a.count.map(|v| json!(v)));
    set(&mut base, &["seed"], a.seed.map(|v| json!(v)));
    set(&mut base, &["task", "links"], a.links.map(|v| json!(v)));
    set(&mut base, &["task", "link_length"], a.link_length.map(|v| json!(v)));
    set(&mut base, &["task", "joint_limit"], a.joint_limit.map(|v| json!(v)));
    let o: GenDataOptions = resolve(base, &a.config)?;
    let data = Dataset::generate(&o.task, o.count, o.seed)?;
    data.save(&o.out)?;
    println!("wrote {} pairs to {}", data.pairs.len(), o.out.display());
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let mut base = json!({"train": TrainConfig::default()});
    set(&mut base, &["data"], a.data.map(|v| json!(v)));
    set(&mut base, &["out"], a.out.map(|v| json!(v)));
    set(&mut base, &["train", "steps"], a.steps.map(|v| json!(v)));
    set(&mut base, &["train", "batch_size"], a.batch_size.map(|v| json!(v)));
    set(&mut base, &["train", "learning_rate"], a.lr.map(|v| json!(v)));
    set(&mut base, &["train", "seed"], a.seed.map(|v| json!(v)));
    set(&mut base, &["train", "arch", "hidden"], a.hidden.map(|v| json!(v)));
    set(&mut base, &["train", "arch", "components"], a.components.map(|v| json!(v)));
    let o: TrainOptions = resolve(base, &a.config)?;
    let data = Dataset::load(&o.data)?;
    let (doc, report) = train_from_dataset(&data, &o.train)?;
    write_file(&o.out, &doc.to_json()?)?;
    println!(
        "trained on {} pairs; final mean log-likelihood {:.4}; wrote {}",
        data.pairs.len(),
        report.final_mean_log_likelihood,
        o.out.display()
    );
    Ok(())
}

fn print_report(r: &MetricsReport) {
    let mut line = format!(
        "{} {} {}: score {:.4} ± {:.4} over {}",
        r.domain, r.method, r.name, r.mean_score, r.std_score, r.samples
    );
    if let Some(s) = r.success_rate {
        line += &format!(", success {s:.3}");
    }
    if let Some(d) = r.diversity {
        line += &format!(", diversity {d:.3}");
    }
    if let Some(b) = r.best_score {
        line += &format!(", best {b:.4}");
    }
    if let Some(d) = r.best_goal_distance {
        line += &format!(" at goal distance {d:.4}");
    }
    line += &format!(" ({:.2}s)", r.timings.total_secs);
    println!("{line}");
}

fn tune(a: ExperimentArgs) -> Result<()> {
    let cfg = experiment_config(&a)?;
    let out = run_experiment(&cfg)?;
    print_report(&out.report);
    println!("run directory {}", out.dir.display());
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let cfg = experiment_config(&a.experiment)?;
    let report = evaluate(&cfg, None)?;
    if let Some(path) = &a.report {
        write_file(path, &report.to_json())?;
    }
    // a closed pipe (e.g. `| head`) is not an error
    let _ = writeln!(std::io::stdout(), "{}", report.to_json());
    Ok(())
}

fn compare_reports(a: CompareArgs) -> Result<bool> {
    let reports = a
        .reports
        .iter()
        .map(|p| MetricsReport::load(&if p.is_dir() { p.join("report.json") } else { p.clone() }))
        .collect::<Result<Vec<_>>>()?;
    let table = compare(&reports)?;
    print!("{}", table.text);
    if let Some(path) = &a.csv {
        write_file(path, &table.csv)?;
    }
    Ok(table.ordering_holds)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(a) => gen_data(a).map(|_| true),
        Command::TrainPrior(a) => train(a).map(|_| true),
        Command::Tune(a) => tune(a).map(|_| true),
        Command::Eval(a) => eval(a).map(|_| true),
        Command::Compare(a) => compare_reports(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

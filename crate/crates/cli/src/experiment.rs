//! Running one configured experiment end to end and writing its artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mace_core::adapt::{AdaptationRun, Identity, Method, PriorOnlyResult, Score, Simulator};
use mace_core::models::{
    AnyModel, ConditionedGmm, LatentGaussianModel, LatentSample, ModelDocument, Provenance, TunableModel,
};
use mace_core::scoring::{diversity, ik_score, ScoreSpec};
use mace_core::simulators::IkObservation;
use mace_core::tasks::grasp::{clouds, grasp_objective};
use mace_core::tasks::ik::summarize;
use mace_core::tasks::toy::{laplace_score, mean_std, window_score};
use mace_core::{is_tune, mace_tune, prior_only_best, rng, PointCloud, Vec2};
use serde::Serialize;

use crate::config::{ExperimentConfig, SimulatorConfig};
use crate::data::{load_document, write_file};
use crate::error::{CliError, Result};
use crate::report::{MetricsReport, Timings};

/// Where a finished run was written and what it measured.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub report: MetricsReport,
}

struct Tuned<M: TunableModel> {
    model: M,
    run: Option<AdaptationRun>,
    search: Option<PriorOnlyResult<M::Sample>>,
    secs: f64,
}

/// Everything a run leaves on disk, before it is written.
struct Artifacts {
    before: ModelDocument,
    after: ModelDocument,
    run_json: String,
    metrics_csv: String,
    report: MetricsReport,
    samples: Vec<(String, String)>,
}

#[derive(Serialize)]
struct SearchRecord {
    method: Method,
    batches: usize,
    batch_size: usize,
    seed: u64,
    best_index: usize,
    best_score: f64,
    elapsed_secs: f64,
}

fn tune<M, S, F, E>(
    cfg: &ExperimentConfig,
    model: &M,
    sim: &S,
    score: &F,
    evidence: &E,
    enabled: bool,
) -> Result<Tuned<M>>
where
    M: TunableModel,
    S: Simulator<M::Sample>,
    F: Score<S::Output, E>,
    E: Sync,
{
    let clock = Instant::now();
    let tuning = cfg.tuning();
    let mut out = Tuned { model: model.clone(), run: None, search: None, secs: 0.0 };
    if enabled {
        match cfg.method {
            Method::Mace => {
                let (m, run) = mace_tune(model, sim, score, evidence, &tuning)?;
                out.model = m;
                out.run = Some(run);
            }
            Method::Is => {
                let (m, run) = is_tune(model, sim, score, evidence, &tuning)?;
                out.model = m;
                out.run = Some(run);
            }
            Method::PriorOnly => {
                out.search = Some(prior_only_best(
                    model,
                    sim,
                    score,
                    evidence,
                    cfg.prior_only_batches,
                    tuning.batch_size,
                    cfg.seed,
                )?);
            }
        }
    }
    out.secs = clock.elapsed().as_secs_f64();
    Ok(out)
}

fn draw_eval<M: TunableModel>(cfg: &ExperimentConfig, model: &M) -> Result<Vec<M::Sample>> {
    Ok(model.draw(cfg.eval_samples, &mut rng::stream(cfg.seed, rng::STREAM_EVAL))?)
}

fn run_records<M: TunableModel>(cfg: &ExperimentConfig, t: &Tuned<M>, success_column: bool) -> (String, String) {
    if let Some(run) = &t.run {
        return (run.to_json(), run.metrics_csv(success_column));
    }
    let Some(search) = &t.search else {
        return ("{}".into(), String::new());
    };
    let record = SearchRecord {
        method: Method::PriorOnly,
        batches: cfg.prior_only_batches,
        batch_size: cfg.mace.batch_size,
        seed: cfg.seed,
        best_index: search.best_index,
        best_score: search.best_score,
        elapsed_secs: search.elapsed_secs,
    };
    let mut csv = String::from("batch,mean_score,max_score,best_so_far\n");
    let mut best = f64::NEG_INFINITY;
    for (b, chunk) in search.evaluated.chunks(cfg.mace.batch_size).enumerate() {
        let mean = chunk.iter().map(|(_, s)| s).sum::<f64>() / chunk.len() as f64;
        let max = chunk.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
        best = best.max(max);
        let _ = writeln!(csv, "{b},{mean},{max},{best}");
    }
    (serde_json::to_string_pretty(&record).expect("record serializes"), csv)
}

fn base_report(cfg: &ExperimentConfig, scores: &[f64]) -> MetricsReport {
    let (mean, std) = mean_std(scores);
    MetricsReport {
        name: cfg.name.clone(),
        domain: cfg.domain,
        method: cfg.method,
        seed: cfg.seed,
        samples: scores.len(),
        mean_score: mean,
        std_score: std,
        success_rate: None,
        mean_goal_distance: None,
        diversity: None,
        diversity_samples: None,
        best_score: None,
        best_goal_distance: None,
        timings: Timings::default(),
    }
}

fn autoregressive(doc: ModelDocument) -> Result<mace_core::AutoregressiveGmmModel> {
    match doc.into_model()? {
        AnyModel::Autoregressive(m) => Ok(m),
        AnyModel::Latent(_) => Err(CliError::Config("expected an autoregressive model document".into())),
    }
}

fn latent(
    doc: Option<ModelDocument>,
    fallback: impl FnOnce() -> std::result::Result<LatentGaussianModel, mace_core::ModelError>,
) -> Result<LatentGaussianModel> {
    match doc {
        None => Ok(fallback()?),
        Some(doc) => match doc.into_model()? {
            AnyModel::Latent(m) => Ok(m),
            AnyModel::Autoregressive(_) => Err(CliError::Config("expected a latent-Gaussian model document".into())),
        },
    }
}

fn provenance(cfg: &ExperimentConfig, stage: &str) -> Provenance {
    Provenance { seed: Some(cfg.seed), note: format!("{} {stage} {}", cfg.name, cfg.method) }
}

fn ar_documents(
    cfg: &ExperimentConfig,
    before: &ConditionedGmm,
    after: &ConditionedGmm,
) -> (ModelDocument, ModelDocument) {
    (
        ModelDocument::from_autoregressive(&before.model, provenance(cfg, "before")),
        ModelDocument::from_autoregressive(&after.model, provenance(cfg, "after")),
    )
}

fn latent_documents(
    cfg: &ExperimentConfig,
    before: &LatentGaussianModel,
    after: &LatentGaussianModel,
) -> (ModelDocument, ModelDocument) {
    (
        ModelDocument::from_latent(before, provenance(cfg, "before")),
        ModelDocument::from_latent(after, provenance(cfg, "after")),
    )
}

fn run_ik(cfg: &ExperimentConfig, doc: ModelDocument, enabled: bool) -> Result<Artifacts> {
    let SimulatorConfig::Ik(task) = &cfg.simulator else { unreachable!("validated") };
    let ScoreSpec::Ik { goal } = cfg.score else { unreachable!("validated") };
    let sim = task.simulator()?;
    let base = autoregressive(doc)?;
    if base.dof() != sim.chain.dof() {
        return Err(CliError::Config(format!("model has {} joints, chain has {}", base.dof(), sim.chain.dof())));
    }
    let prior = ConditionedGmm::new(base, vec![goal.x, goal.y])?;
    let score = |o: &IkObservation, g: &Vec2| ik_score(o, *g);
    let t = tune(cfg, &prior, &sim, &score, &goal, enabled)?;

    let clock = Instant::now();
    let xs = draw_eval(cfg, &t.model)?;
    let obs: Vec<IkObservation> = xs.iter().map(|q| sim.simulate(q)).collect();
    let scores: Vec<f64> = obs.iter().map(|o| ik_score(o, goal)).collect();
    let summary = summarize(&obs, goal);
    let mut report = base_report(cfg, &scores);
    report.success_rate = Some(summary.success_rate);
    report.mean_goal_distance = summary.mean_goal_distance;
    let mut samples = Vec::new();
    if let Some(search) = &t.search {
        report.best_score = Some(search.best_score);
        report.best_goal_distance = Some(sim.simulate(&search.best).ee_position.distance(goal));
        let best = serde_json::json!({
            "q": search.best,
            "score": search.best_score,
            "index": search.best_index,
            "observation": sim.simulate(&search.best),
        });
        samples.push(("best.json".into(), serde_json::to_string_pretty(&best).expect("json")));
    }
    report.timings.eval_secs = clock.elapsed().as_secs_f64();
    report.timings.tune_secs = t.secs;

    let dof = sim.chain.dof();
    let mut csv = String::from("index");
    (0..dof).for_each(|j| {
        let _ = write!(csv, ",q{j}");
    });
    csv.push_str(",ee_x,ee_y,collision,score\n");
    for (i, ((q, o), s)) in xs.iter().zip(&obs).zip(&scores).enumerate() {
        let _ = write!(csv, "{i}");
        q.iter().for_each(|v| {
            let _ = write!(csv, ",{v}");
        });
        let _ = writeln!(csv, ",{},{},{},{s}", o.ee_position.x, o.ee_position.y, o.collision);
    }
    samples.push(("eval.csv".into(), csv));

    let (before, after) = ar_documents(cfg, &prior, &t.model);
    let (run_json, metrics_csv) = run_records(cfg, &t, true);
    Ok(Artifacts { before, after, run_json, metrics_csv, report, samples })
}

fn run_toy(cfg: &ExperimentConfig, doc: Option<ModelDocument>, enabled: bool) -> Result<Artifacts> {
    let toy = cfg.model.toy.as_ref().expect("validated");
    let prior = match doc {
        Some(doc) => ConditionedGmm::new(autoregressive(doc)?, Vec::new())?,
        None => toy.build(cfg.seed)?,
    };
    let wanted = cfg.score.clone();
    let score = move |x: &Vec<f64>, _: &()| match wanted {
        ScoreSpec::Laplace { target } => laplace_score(x[0], target),
        ScoreSpec::Window { target, half_width } => window_score(x[0], target, half_width),
        _ => unreachable!("validated"),
    };
    let t = tune(cfg, &prior, &Identity, &score, &(), enabled)?;

    let clock = Instant::now();
    let xs = draw_eval(cfg, &t.model)?;
    let scores: Vec<f64> = xs.iter().map(|x| score(x, &())).collect();
    let mut report = base_report(cfg, &scores);
    let mut samples = Vec::new();
    if let Some(search) = &t.search {
        report.best_score = Some(search.best_score);
        let best = serde_json::json!({"x": search.best, "score": search.best_score, "index": search.best_index});
        samples.push(("best.json".into(), serde_json::to_string_pretty(&best).expect("json")));
    }
    report.timings.eval_secs = clock.elapsed().as_secs_f64();
    report.timings.tune_secs = t.secs;
    let mut csv = String::from("index,x,score\n");
    for (i, (x, s)) in xs.iter().zip(&scores).enumerate() {
        let _ = writeln!(csv, "{i},{},{s}", x[0]);
    }
    samples.push(("eval.csv".into(), csv));

    let (before, after) = ar_documents(cfg, &prior, &t.model);
    let (run_json, metrics_csv) = run_records(cfg, &t, false);
    Ok(Artifacts { before, after, run_json, metrics_csv, report, samples })
}

/// Report and dump for latent-Gaussian domains, where samples are clouds.
fn cloud_artifacts(
    cfg: &ExperimentConfig,
    prior: &LatentGaussianModel,
    t: Tuned<LatentGaussianModel>,
    score_of: impl Fn(&LatentSample) -> f64,
    evidence_cloud: &PointCloud,
) -> Result<Artifacts> {
    let clock = Instant::now();
    let xs = draw_eval(cfg, &t.model)?;
    let scores: Vec<f64> = xs.iter().map(&score_of).collect();
    let mut report = base_report(cfg, &scores);
    let kept = cfg.cloud_dump.min(xs.len());
    if kept >= 2 {
        report.diversity = Some(diversity(&clouds(&xs[..kept])).map_err(CliError::config)?);
        report.diversity_samples = Some(kept);
    }
    let mut samples = vec![("evidence.xyz".to_string(), evidence_cloud.to_xyz())];
    if let Some(search) = &t.search {
        report.best_score = Some(search.best_score);
        samples.push(("best.xyz".into(), search.best.cloud.to_xyz()));
    }
    report.timings.eval_secs = clock.elapsed().as_secs_f64();
    report.timings.tune_secs = t.secs;

    let mut csv = String::from("index,z0,z1,z2,z3,score\n");
    for (i, (x, s)) in xs.iter().zip(&scores).enumerate() {
        let _ = write!(csv, "{i}");
        x.latent.iter().for_each(|v| {
            let _ = write!(csv, ",{v}");
        });
        let _ = writeln!(csv, ",{s}");
    }
    samples.push(("eval.csv".into(), csv));
    for (i, x) in xs.iter().take(kept).enumerate() {
        samples.push((format!("cloud_{i:04}.xyz"), x.cloud.to_xyz()));
    }

    let (before, after) = latent_documents(cfg, prior, &t.model);
    let (run_json, metrics_csv) = run_records(cfg, &t, false);
    Ok(Artifacts { before, after, run_json, metrics_csv, report, samples })
}

fn run_grasp(cfg: &ExperimentConfig, doc: Option<ModelDocument>, enabled: bool) -> Result<Artifacts> {
    let SimulatorConfig::Grasp(task) = &cfg.simulator else { unreachable!("validated") };
    let prior = latent(doc, || task.prior())?;
    let sim = task.simulator();
    let target = task.target_cloud()?;
    let evidence = sim.observe(&target);
    let t = tune(cfg, &prior, &sim, &grasp_objective, &evidence, enabled)?;
    cloud_artifacts(cfg, &prior, t, |x| grasp_objective(&sim.simulate(x), &evidence), &target)
}

fn run_completion(cfg: &ExperimentConfig, doc: Option<ModelDocument>, enabled: bool) -> Result<Artifacts> {
    let SimulatorConfig::PcComplete(task) = &cfg.simulator else { unreachable!("validated") };
    let prior = latent(doc, || task.prior())?;
    let inst = task.instance()?;
    let score = |o: &Option<PointCloud>, e: &PointCloud| task.score(o, e);
    let t = tune(cfg, &prior, &inst.simulator, &score, &inst.partial, enabled)?;
    cloud_artifacts(cfg, &prior, t, |x| score(&inst.simulator.simulate(x), &inst.partial), &inst.partial)
}

fn execute(cfg: &ExperimentConfig, doc: Option<ModelDocument>, enabled: bool) -> Result<Artifacts> {
    let clock = Instant::now();
    let doc = match (doc, &cfg.model.path) {
        (Some(d), _) => Some(d),
        (None, Some(path)) => Some(load_document(path)?),
        (None, None) => None,
    };
    let mut art = match &cfg.simulator {
        SimulatorConfig::Ik(_) => {
            run_ik(cfg, doc.ok_or_else(|| CliError::Config("the ik domain needs a model".into()))?, enabled)
        }
        SimulatorConfig::Toy => run_toy(cfg, doc, enabled),
        SimulatorConfig::Grasp(_) => run_grasp(cfg, doc, enabled),
        SimulatorConfig::PcComplete(_) => run_completion(cfg, doc, enabled),
    }?;
    art.report.timings.total_secs = clock.elapsed().as_secs_f64();
    Ok(art)
}

fn create_run_dir(root: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(root).map_err(CliError::io(root))?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    let mut dir = root.join(format!("{stamp}-{name}"));
    let mut k = 1;
    loop {
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                dir = root.join(format!("{stamp}-{name}-{k}"));
                k += 1;
            }
            Err(e) => return Err(CliError::io(&dir)(e)),
        }
    }
}

/// Executes the configured method, evaluates the result on fresh samples and
/// writes `<output_dir>/<timestamp>-<name>/`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let art = execute(cfg, None, true).map_err(|e| e.context(&cfg.name))?;
    let dir = create_run_dir(&cfg.output_dir, &cfg.name)?;
    let config_json = serde_json::to_string_pretty(cfg).expect("config serializes");
    write_file(&dir.join("config.json"), &config_json)?;
    write_file(&dir.join("model_before.json"), &art.before.to_json()?)?;
    write_file(&dir.join("model_after.json"), &art.after.to_json()?)?;
    write_file(&dir.join("run.json"), &art.run_json)?;
    write_file(&dir.join("metrics.csv"), &art.metrics_csv)?;
    write_file(&dir.join("report.json"), &art.report.to_json())?;
    write_file(&dir.join("report.csv"), &art.report.to_csv())?;
    for (name, contents) in &art.samples {
        write_file(&dir.join("samples").join(name), contents)?;
    }
    Ok(RunOutput { dir, report: art.report })
}

/// Evaluates a model without tuning it. `doc` replaces the configured prior.
pub fn evaluate(cfg: &ExperimentConfig, doc: Option<ModelDocument>) -> Result<MetricsReport> {
    cfg.validate()?;
    Ok(execute(cfg, doc, false).map_err(|e| e.context(&cfg.name))?.report)
}

use std::path::Path;

use mace_cli::config::{Domain, ExperimentConfig};
use mace_cli::data::{train_from_dataset, Dataset};
use mace_cli::{compare, evaluate, run_experiment, CliError, MetricsReport};
use mace_core::adapt::{AdaptationRun, Method};
use mace_core::models::{ArchitectureConfig, TrainConfig};
use mace_core::simulators::kinematics::{ik_simulate, ObstacleSet};
use mace_core::tasks::ik::IkTaskConfig;

fn toy(dir: &Path, method: Method) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(Domain::Toy);
    cfg.method = method;
    cfg.name = format!("toy-{method}");
    cfg.output_dir = dir.to_path_buf();
    cfg
}

fn small_ik_prior(dir: &Path) -> std::path::PathBuf {
    let data = Dataset::generate(&IkTaskConfig::default(), 2000, 3).unwrap();
    let cfg = TrainConfig {
        arch: ArchitectureConfig { hidden: vec![16, 16], ..ArchitectureConfig::default() },
        steps: 100,
        ..TrainConfig::default()
    };
    let (doc, _) = train_from_dataset(&data, &cfg).unwrap();
    let path = dir.join("prior.json");
    std::fs::write(&path, doc.to_json().unwrap()).unwrap();
    path
}

#[test]
fn toy_mace_reaches_high_mean_score() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_experiment(&toy(tmp.path(), Method::Mace)).unwrap();
    assert_eq!(out.report.samples, 1000);
    assert!(out.report.mean_score >= 0.9, "mean score {}", out.report.mean_score);
    for f in [
        "config.json",
        "model_before.json",
        "model_after.json",
        "run.json",
        "metrics.csv",
        "report.json",
        "report.csv",
        "samples/eval.csv",
    ] {
        assert!(out.dir.join(f).is_file(), "missing {f}");
    }
    let name = out.dir.file_name().unwrap().to_string_lossy().into_owned();
    assert!(name.ends_with("-toy-mace"), "{name}");
    let saved = MetricsReport::load(&out.dir.join("report.json")).unwrap();
    assert_eq!(saved, out.report);
}

#[test]
fn reruns_reproduce_report_numerics_and_run_record() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = toy(tmp.path(), Method::Mace);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_ne!(a.dir, b.dir);
    assert_eq!(a.report.numerics(), b.report.numerics());
    let load = |d: &Path| -> AdaptationRun {
        serde_json::from_str(&std::fs::read_to_string(d.join("run.json")).unwrap()).unwrap()
    };
    assert_eq!(load(&a.dir).canonical_json(), load(&b.dir).canonical_json());
    let saved: ExperimentConfig =
        serde_json::from_str(&std::fs::read_to_string(a.dir.join("config.json")).unwrap()).unwrap();
    assert_eq!(saved, cfg);
}

#[test]
fn model_after_reloads_to_the_same_evaluation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = toy(tmp.path(), Method::Mace);
    let out = run_experiment(&cfg).unwrap();
    let mut eval_cfg = cfg.clone();
    eval_cfg.model.path = Some(out.dir.join("model_after.json"));
    let report = evaluate(&eval_cfg, None).unwrap();
    assert_eq!(report.mean_score, out.report.mean_score);
    assert_eq!(report.std_score, out.report.std_score);
}

#[test]
fn dataset_pairs_are_valid_and_deterministic() {
    let task = IkTaskConfig::default();
    let a = Dataset::generate(&task, 500, 9).unwrap();
    let b = Dataset::generate(&task, 500, 9).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_ne!(a.to_json(), Dataset::generate(&task, 500, 10).unwrap().to_json());
    let chain = task.chain().unwrap();
    let empty = ObstacleSet::default();
    for p in &a.pairs {
        assert!(chain.within_limits(&p.x));
        let obs = ik_simulate(&chain, &empty, &p.x);
        assert!(!obs.collision);
        assert!((obs.ee_position.x - p.condition[0]).abs() < 1e-12);
        assert!((obs.ee_position.y - p.condition[1]).abs() < 1e-12);
    }
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("d.json");
    a.save(&path).unwrap();
    assert_eq!(Dataset::load(&path).unwrap(), a);
}

#[test]
fn ik_prior_only_reports_best_sample_and_success_matches_dump() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::preset(Domain::Ik);
    cfg.model.path = Some(small_ik_prior(tmp.path()));
    cfg.output_dir = tmp.path().join("runs");
    cfg.method = Method::PriorOnly;
    cfg.prior_only_batches = 5;
    let out = run_experiment(&cfg).unwrap();
    let r = &out.report;
    let best = r.best_score.unwrap();
    assert!((0.0..=1.0).contains(&best));
    assert!(r.best_goal_distance.unwrap() >= 0.0);
    assert!(r.timings.tune_secs > 0.0);

    let mut rows = csv::Reader::from_path(out.dir.join("samples/eval.csv")).unwrap();
    let headers = rows.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "collision").unwrap();
    let records: Vec<csv::StringRecord> = rows.records().map(|r| r.unwrap()).collect();
    assert_eq!(records.len(), r.samples);
    let collisions = records.iter().filter(|rec| &rec[col] == "true").count();
    assert!((r.success_rate.unwrap() - (1.0 - collisions as f64 / records.len() as f64)).abs() < 1e-12);

    // evaluation draws are not the searched ones
    let search: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.dir.join("samples/best.json")).unwrap()).unwrap();
    let best_q: Vec<String> = search["q"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap().to_string()).collect();
    assert!(records.iter().all(|rec| (0..best_q.len()).any(|j| rec[1 + j] != best_q[j])));
}

#[test]
fn ik_numerical_fault_keeps_run_context() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::preset(Domain::Ik);
    cfg.model.path = Some(tmp.path().join("absent.json"));
    match run_experiment(&cfg) {
        Err(CliError::Io { .. }) => {}
        other => panic!("expected an io error, got {other:?}"),
    }

    // exp(-1000) underflows, so every score is zero
    cfg.model.path = Some(small_ik_prior(tmp.path()));
    cfg.output_dir = tmp.path().join("runs");
    cfg.score = mace_core::ScoreSpec::Ik { goal: mace_core::Vec2::new(1000.0, 0.0) };
    cfg.mace.iterations = 2;
    match run_experiment(&cfg) {
        Err(e @ CliError::Numerical(_)) => {
            assert_eq!(e.exit_code(), 3);
            assert!(e.to_string().contains("ik"), "{e}");
        }
        other => panic!("expected a numerical fault, got {other:?}"),
    }
}

#[test]
fn grasp_report_carries_diversity() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::preset(Domain::Grasp);
    cfg.output_dir = tmp.path().to_path_buf();
    cfg.mace.iterations = 2;
    cfg.mace.grad_steps = 2;
    cfg.eval_samples = 40;
    cfg.cloud_dump = 8;
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.report.diversity_samples, Some(8));
    assert!(out.report.diversity.unwrap() > 0.0);
    assert!(out.report.success_rate.is_none());
    assert!(out.dir.join("samples/cloud_0007.xyz").is_file());
    assert!(!out.dir.join("samples/cloud_0008.xyz").exists());
    assert!(out.dir.join("samples/evidence.xyz").is_file());
}

#[test]
fn compare_tabulates_and_checks_ordering() {
    let tmp = tempfile::tempdir().unwrap();
    let reports: Vec<MetricsReport> = [Method::Mace, Method::Is, Method::PriorOnly]
        .into_iter()
        .map(|m| run_experiment(&toy(tmp.path(), m)).unwrap().report)
        .collect();
    let table = compare(&reports).unwrap();
    assert!(table.ordering_holds, "{}", table.text);
    let body: Vec<&str> = table.text.lines().skip(2).take_while(|l| !l.starts_with("domain")).collect();
    assert_eq!(body.len(), 3);
    assert_eq!(table.csv.lines().count(), 4);

    let mut swapped = reports.clone();
    swapped[0].mean_score = swapped[1].mean_score;
    assert!(!compare(&swapped).unwrap().ordering_holds);

    assert!(matches!(compare(&reports[..1]), Err(CliError::Config(_))));
    let mut mixed = reports.clone();
    mixed[1].domain = Domain::Grasp;
    assert!(matches!(compare(&mixed), Err(CliError::Config(_))));
}

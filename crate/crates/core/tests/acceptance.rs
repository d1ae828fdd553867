//! End-to-end acceptance checks. Runs every criterion in sequence, prints one
//! `PASS`/`FAIL` line per criterion and exits non-zero if any failed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use mace_core::adapt::{
    is_tune, mace_tune, prior_only_best, rejection_posterior, AcceptRule, AdaptationRun, Identity, MaceConfig,
    Simulator,
};
use mace_core::models::latent::kl_diag_gaussian;
use mace_core::models::{
    train_prior, ArchitectureConfig, AutoregressiveGmmModel, ConditionedGmm, DiagGaussian, TrainConfig, TunableModel,
};
use mace_core::rng::{self, RunRng};
use mace_core::scoring::{chamfer_k, diversity, ik_score};
use mace_core::simulators::{IkObservation, IkSimulator, PointCloud};
use mace_core::space::{JointLimit, Vec2, Vec3};
use mace_core::tasks::completion::CompletionTaskConfig;
use mace_core::tasks::grasp::{clouds, grasp_objective, GraspTaskConfig};
use mace_core::tasks::ik::{generate_dataset, sample_goals, summarize, IkTaskConfig};
use mace_core::tasks::toy::{mean_std, window_score, ToyPrior};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Shared state: the IK prior is trained once and reused by criteria 3 and 7.
#[derive(Default)]
struct Context {
    ik_prior: Option<AutoregressiveGmmModel>,
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

fn central_difference(f: impl Fn(&[f64]) -> f64, at: &[f64], h: f64) -> Vec<f64> {
    let mut p = at.to_vec();
    (0..at.len())
        .map(|i| {
            p[i] = at[i] + h;
            let up = f(&p);
            p[i] = at[i] - h;
            let down = f(&p);
            p[i] = at[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn random_ar_instance(rng: &mut RunRng) -> (AutoregressiveGmmModel, Vec<f64>, Vec<f64>) {
    let dof = rng.random_range(1..=4);
    let cond = rng.random_range(0..=3);
    let layers = rng.random_range(1..=3);
    let arch = ArchitectureConfig {
        hidden: (0..layers).map(|_| rng.random_range(3..=8)).collect(),
        components: rng.random_range(1..=3),
        ..ArchitectureConfig::default()
    };
    let limits: Vec<JointLimit> = (0..dof).map(|_| JointLimit::symmetric(rng.random_range(1.0..3.0))).collect();
    let mut model = AutoregressiveGmmModel::new(cond, limits.clone(), arch, rng).unwrap();
    let params: Vec<f64> = model.params().iter().map(|p| p + rng.random_range(-0.3..0.3)).collect();
    model.set_params(&params).unwrap();
    let condition = (0..cond).map(|_| rng.random_range(-2.0..2.0)).collect();
    let x = limits.iter().map(|l| rng.random_range(0.9 * l.lo..0.9 * l.hi)).collect();
    (model, condition, x)
}

fn criterion_1(_: &mut Context) -> Outcome {
    const H: f64 = 1e-5;
    const TOL: f64 = 1e-4;
    let mut rng = rng::stream(1, rng::STREAM_TASK);
    let mut worst_ar: f64 = 0.0;
    for _ in 0..100 {
        let (model, c, x) = random_ar_instance(&mut rng);
        let (_, analytic) = model.grad_log_likelihood(&c, &x).unwrap();
        let theta = model.params();
        let numeric = central_difference(
            |p| {
                let mut m = model.clone();
                m.set_params(p).unwrap();
                m.log_likelihood(&c, &x).unwrap()
            },
            &theta,
            H,
        );
        worst_ar = worst_ar.max(relative_error(&analytic, &numeric));
    }
    let mut worst_kl: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.random_range(1..=6);
        let q = DiagGaussian {
            mean: (0..d).map(|_| rng.random_range(-2.0..2.0)).collect(),
            std: (0..d).map(|_| rng.random_range(0.05..2.0)).collect(),
        };
        let theta: Vec<f64> =
            (0..2 * d).map(|i| if i < d { rng.random_range(-2.0..2.0) } else { rng.random_range(-1.5..1.0) }).collect();
        let (_, analytic) = kl_diag_gaussian(&q, &theta[..d], &theta[d..]);
        let numeric = central_difference(|p| kl_diag_gaussian(&q, &p[..d], &p[d..]).0, &theta, H);
        worst_kl = worst_kl.max(relative_error(&analytic, &numeric));
    }
    outcome(
        worst_ar < TOL && worst_kl < TOL,
        format!("max relative error: autoregressive {worst_ar:.2e}, latent KL {worst_kl:.2e} (limit {TOL:.0e})"),
    )
}

fn criterion_2(_: &mut Context) -> Outcome {
    const SAMPLES: usize = 2000;
    let prior = ToyPrior::default().build(0).unwrap();
    let score = |x: &Vec<f64>, _: &()| window_score(x[0], 1.0, 0.75);
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for seed in 0..5u64 {
        let cfg = MaceConfig {
            iterations: 1,
            batch_size: 16384,
            grad_steps: 150,
            learning_rate: 0.1,
            minibatch_fraction: 1.0,
            seed,
            ..MaceConfig::default()
        };
        let (tuned, _) = mace_tune(&prior, &Identity, &score, &(), &cfg).unwrap();
        let xs: Vec<f64> =
            tuned.draw(SAMPLES, &mut rng::stream(seed, rng::STREAM_EVAL)).unwrap().iter().map(|x| x[0]).collect();
        let oracle =
            rejection_posterior(&prior, &Identity, &score, &(), AcceptRule::Bernoulli, SAMPLES, 10_000_000, seed)
                .unwrap();
        let os: Vec<f64> = oracle.accepted.iter().map(|x| x[0]).collect();
        let (m1, s1) = mean_std(&xs);
        let (m2, s2) = mean_std(&os);
        let n = SAMPLES as f64;
        let z_mean = (m1 - m2) / (s1 * s1 / n + s2 * s2 / n).sqrt();
        let z_std = (s1 - s2) / (s1 * s1 / (2.0 * (n - 1.0)) + s2 * s2 / (2.0 * (n - 1.0))).sqrt();
        worst = worst.max(z_mean.abs()).max(z_std.abs());
        lines.push(format!("seed {seed}: z_mean {z_mean:+.2} z_std {z_std:+.2}"));
    }
    outcome(worst <= 3.0, format!("max |z| {worst:.2} (limit 3); {}", lines.join(", ")))
}

fn train_ik_prior(task: &IkTaskConfig) -> AutoregressiveGmmModel {
    let chain = task.chain().unwrap();
    let data = generate_dataset(&chain, 50_000, 0).unwrap();
    let cfg = TrainConfig { steps: 2000, ..TrainConfig::default() };
    train_prior(&data, chain.joint_limits.clone(), &cfg).unwrap().0
}

fn ik_success(model: &ConditionedGmm, sim: &IkSimulator, goal: Vec2, seed: u64) -> f64 {
    let xs = model.draw(1000, &mut rng::stream(seed, rng::STREAM_EVAL)).unwrap();
    let obs: Vec<IkObservation> = xs.iter().map(|x| sim.simulate(x)).collect();
    summarize(&obs, goal).success_rate
}

fn criterion_3(ctx: &mut Context) -> Outcome {
    let task = IkTaskConfig::default();
    let sim = task.simulator().unwrap();
    let base = ctx.ik_prior.get_or_insert_with(|| train_ik_prior(&task)).clone();
    let goals = sample_goals(&sim, &task.goal_region, 10, 0).unwrap();
    let score = |o: &IkObservation, g: &Vec2| ik_score(o, *g);
    let (mut prior, mut mace, mut is) = (0.0, 0.0, 0.0);
    for (g, goal) in goals.iter().enumerate() {
        let model = ConditionedGmm::new(base.clone(), vec![goal.x, goal.y]).unwrap();
        let cfg = MaceConfig { seed: g as u64, ..MaceConfig::ik_reference() };
        let (tuned, _) = mace_tune(&model, &sim, &score, goal, &cfg).unwrap();
        let (baseline, _) = is_tune(&model, &sim, &score, goal, &cfg).unwrap();
        prior += ik_success(&model, &sim, *goal, g as u64) / goals.len() as f64;
        mace += ik_success(&tuned, &sim, *goal, g as u64) / goals.len() as f64;
        is += ik_success(&baseline, &sim, *goal, g as u64) / goals.len() as f64;
    }
    outcome(
        mace >= 0.8 && prior <= 0.4 && mace >= 2.0 * is,
        format!(
            "success rate prior {prior:.3} (<= 0.4: {}), MACE {mace:.3} (>= 0.8: {}), IS {is:.3} (MACE >= 2x IS: {})",
            prior <= 0.4,
            mace >= 0.8,
            mace >= 2.0 * is
        ),
    )
}

fn criterion_4(_: &mut Context) -> Outcome {
    const SAMPLES: usize = 49;
    let task = GraspTaskConfig::default();
    let prior = task.prior().unwrap();
    let sim = task.simulator();
    let evidence = task.evidence().unwrap();
    let mut pass = true;
    let mut lines = Vec::new();
    for seed in 0..3u64 {
        let (tuned, _) = mace_tune(&prior, &sim, &grasp_objective, &evidence, &task.tuning(seed)).unwrap();
        let eval = |m: &mace_core::LatentGaussianModel| {
            let xs = m.draw(SAMPLES, &mut rng::stream(seed, rng::STREAM_EVAL)).unwrap();
            let mean = xs.iter().map(|x| grasp_objective(&sim.simulate(x), &evidence)).sum::<f64>() / SAMPLES as f64;
            (mean, diversity(&clouds(&xs)).unwrap())
        };
        let (ps, pd) = eval(&prior);
        let (ts, td) = eval(&tuned);
        let ok = ts >= 3.0 * ps && td > 0.0 && td >= 0.25 * pd;
        pass &= ok;
        lines.push(format!(
            "seed {seed}: score {ps:.3} -> {ts:.3} ({:.2}x), diversity {pd:.1} -> {td:.1} ({:.0}%)",
            ts / ps,
            100.0 * td / pd
        ));
    }
    outcome(pass, format!("need >= 3x score and >= 25% diversity; {}", lines.join("; ")))
}

fn criterion_5(_: &mut Context) -> Outcome {
    let task = CompletionTaskConfig::default();
    let prior = task.prior().unwrap();
    let inst = task.instance().unwrap();
    let score = |o: &Option<PointCloud>, e: &PointCloud| task.score(o, e);
    let evaluate = |m: &mace_core::LatentGaussianModel, n: usize, seed: u64| {
        let xs = m.draw(n, &mut rng::stream(seed, rng::STREAM_EVAL)).unwrap();
        let mean = xs.iter().map(|x| score(&inst.simulator.simulate(x), &inst.partial)).sum::<f64>() / n as f64;
        let dists: Vec<f64> = xs
            .iter()
            .map(|x| task.partial_distance(&inst.simulator, &x.cloud, &inst.partial).unwrap_or(f64::INFINITY))
            .collect();
        (mean, dists)
    };
    let (prior_score, mut prior_dists) = evaluate(&prior, 1000, 100);
    prior_dists.sort_by(|a, b| a.total_cmp(b));
    let p10 = prior_dists[prior_dists.len() / 10];
    let mut pass = true;
    let mut lines = Vec::new();
    for seed in 0..2u64 {
        let cfg = MaceConfig { seed, ..MaceConfig::completion_reference() };
        let (tuned, _) = mace_tune(&prior, &inst.simulator, &score, &inst.partial, &cfg).unwrap();
        let (s, d) = evaluate(&tuned, 200, seed);
        let worst = d.iter().copied().fold(0.0, f64::max);
        pass &= s >= 2.0 * prior_score && worst < p10;
        lines.push(format!("seed {seed}: score {:.2}x, worst posterior CD_k {worst:.2}", s / prior_score));
    }
    outcome(pass, format!("prior score {prior_score:.4}, prior 10th percentile CD_k {p10:.2}; {}", lines.join("; ")))
}

fn brute_force_chamfer(a: &[Vec3], b: &[Vec3]) -> f64 {
    let directed = |a: &[Vec3], b: &[Vec3]| {
        let mut total = 0.0;
        for p in a {
            let mut best = f64::INFINITY;
            for q in b {
                let d = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
                if d < best {
                    best = d;
                }
            }
            total += best;
        }
        total
    };
    directed(a, b) + directed(b, a)
}

fn selection_invariants(run: &AdaptationRun) -> Result<(), String> {
    let k = run.config.elite_count();
    for r in &run.records {
        if r.scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(format!("iteration {}: score outside [0, 1]", r.t));
        }
        let mut sorted = r.scores.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let delta = r.delta.ok_or("missing threshold")?;
        if delta != sorted[k - 1] {
            return Err(format!("iteration {}: delta {delta} is not the {k}-th largest score", r.t));
        }
        let above = r.scores.iter().filter(|s| **s >= delta).count();
        if r.selected < k || r.selected != above {
            return Err(format!("iteration {}: selected {} of {} at or above delta", r.t, r.selected, above));
        }
    }
    Ok(())
}

fn criterion_6(_: &mut Context) -> Outcome {
    let mut failures = Vec::new();

    // Selection and score range on a discrete-score toy run, where ties are common.
    let prior = ToyPrior::default().build(0).unwrap();
    let coarse = |x: &Vec<f64>, _: &()| ((1.0 - (x[0] - 1.0).abs() / 4.0).max(0.0) * 8.0).floor() / 8.0;
    let cfg = MaceConfig {
        iterations: 20,
        batch_size: 64,
        grad_steps: 4,
        learning_rate: 0.01,
        seed: 5,
        ..MaceConfig::default()
    };
    let (_, run_a) = mace_tune(&prior, &Identity, &coarse, &(), &cfg).unwrap();
    if let Err(e) = selection_invariants(&run_a) {
        failures.push(e);
    }
    let (_, run_b) = mace_tune(&prior, &Identity, &coarse, &(), &cfg).unwrap();
    if run_a.canonical_json() != run_b.canonical_json() {
        failures.push("toy rerun is not bit-identical".into());
    }

    // Chamfer with k = 1 against a brute-force reference.
    let mut rng = rng::stream(6, rng::STREAM_TASK);
    for i in 0..20 {
        let mut cloud = |n: usize| -> Vec<Vec3> {
            (0..n)
                .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                .collect()
        };
        let (na, nb) = (10 + 7 * i, 60 - 2 * i);
        let (a, b) = (cloud(na), cloud(nb));
        let fast = chamfer_k(&PointCloud::new(a.clone()).unwrap(), &PointCloud::new(b.clone()).unwrap(), 1).unwrap();
        if fast != brute_force_chamfer(&a, &b) {
            failures.push(format!("pair {i}: chamfer mismatch"));
        }
    }

    // Frozen codec under latent tuning, plus rerun determinism.
    let task = GraspTaskConfig::default();
    let latent = task.prior().unwrap();
    let sim = task.simulator();
    let evidence = task.evidence().unwrap();
    let before = latent.codec.fingerprint();
    let cfg = MaceConfig { iterations: 5, ..task.tuning(9) };
    let (tuned, run_c) = mace_tune(&latent, &sim, &grasp_objective, &evidence, &cfg).unwrap();
    if tuned.codec.fingerprint() != before {
        failures.push("codec fingerprint changed by tuning".into());
    }
    if let Err(e) = selection_invariants(&run_c) {
        failures.push(e);
    }
    let (_, run_d) = mace_tune(&latent, &sim, &grasp_objective, &evidence, &cfg).unwrap();
    if run_c.canonical_json() != run_d.canonical_json() {
        failures.push("latent rerun is not bit-identical".into());
    }
    let pass = failures.is_empty();
    outcome(
        pass,
        if pass {
            "selection, score range, chamfer reference, frozen codec and reruns all hold".into()
        } else {
            failures.join("; ")
        },
    )
}

fn criterion_7(ctx: &mut Context) -> Outcome {
    let task = IkTaskConfig::default();
    let sim = task.simulator().unwrap();
    let base = ctx.ik_prior.get_or_insert_with(|| train_ik_prior(&task)).clone();
    let goal = sample_goals(&sim, &task.goal_region, 1, 7).unwrap()[0];
    let model = ConditionedGmm::new(base, vec![goal.x, goal.y]).unwrap();
    let score = |o: &IkObservation, g: &Vec2| ik_score(o, *g);
    let result = prior_only_best(&model, &sim, &score, &goal, 20, 64, 7).unwrap();
    let rescored: Vec<f64> = result.evaluated.iter().map(|(x, _)| ik_score(&sim.simulate(x), goal)).collect();
    let mut argmax = 0;
    for (i, s) in rescored.iter().enumerate() {
        if *s > rescored[argmax] {
            argmax = i;
        }
    }
    let pass = result.evaluated.len() == 20 * 64
        && argmax == result.best_index
        && rescored[argmax] == result.best_score
        && result.evaluated[argmax].0 == result.best;
    outcome(
        pass,
        format!(
            "best score {:.4} at index {} of {}; re-scan argmax {} ({:.2}s)",
            result.best_score,
            result.best_index,
            result.evaluated.len(),
            argmax,
            result.elapsed_secs
        ),
    )
}

type Criterion = fn(&mut Context) -> Outcome;

fn main() {
    let criteria: [(&str, Criterion, Duration); 7] = [
        ("1 gradient correctness", criterion_1, Duration::from_secs(10)),
        ("2 oracle equivalence", criterion_2, Duration::from_secs(30)),
        ("3 IK ordering", criterion_3, Duration::from_secs(300)),
        ("4 grasp shape inference", criterion_4, Duration::from_secs(120)),
        ("5 point-cloud completion", criterion_5, Duration::from_secs(120)),
        ("6 algorithmic invariants", criterion_6, Duration::from_secs(120)),
        ("7 prior-only argmax", criterion_7, Duration::from_secs(300)),
    ];
    let mut ctx = Context::default();
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| run(&mut ctx)));
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed <= limit, o.detail),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {name}: {} [{:.1}s / limit {}s] {detail}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} of 7 criteria failed");
        std::process::exit(1);
    }
    println!("all 7 criteria passed");
}

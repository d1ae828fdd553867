//! Evaluation reports and the cross-method comparison table.

use std::fmt::Write as _;
use std::path::Path;

use mace_core::adapt::Method;
use serde::{Deserialize, Serialize};

use crate::config::Domain;
use crate::error::{CliError, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub tune_secs: f64,
    pub eval_secs: f64,
    pub total_secs: f64,
}

/// Outcome of one experiment, measured on fresh samples from the final model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub name: String,
    pub domain: Domain,
    pub method: Method,
    pub seed: u64,
    pub samples: usize,
    pub mean_score: f64,
    pub std_score: f64,
    /// IK only: fraction of configurations not in collision.
    pub success_rate: Option<f64>,
    /// IK only: mean end-effector distance to the goal over collision-free samples.
    pub mean_goal_distance: Option<f64>,
    /// Cloud domains only: mean pairwise `CD_1` over the first `diversity_samples` clouds.
    pub diversity: Option<f64>,
    pub diversity_samples: Option<usize>,
    /// Prior-only method: best sample found and, for IK, its raw goal distance.
    pub best_score: Option<f64>,
    pub best_goal_distance: Option<f64>,
    pub timings: Timings,
}

impl MetricsReport {
    /// Copy with wall-clock fields zeroed; equal across reruns of one config.
    pub fn numerics(&self) -> MetricsReport {
        MetricsReport { timings: Timings::default(), ..self.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(ROW_HEADER).expect("in-memory csv");
        w.write_record(self.row()).expect("in-memory csv");
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
    }

    fn row(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.name.clone(),
            self.domain.to_string(),
            self.method.to_string(),
            self.seed.to_string(),
            self.samples.to_string(),
            self.mean_score.to_string(),
            self.std_score.to_string(),
            opt(self.success_rate),
            opt(self.diversity),
            opt(self.best_score),
            opt(self.best_goal_distance),
            self.timings.total_secs.to_string(),
        ]
    }
}

const ROW_HEADER: [&str; 12] = [
    "name",
    "domain",
    "method",
    "seed",
    "samples",
    "mean_score",
    "std_score",
    "success_rate",
    "diversity",
    "best_score",
    "best_goal_distance",
    "wall_clock_secs",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub text: String,
    pub csv: String,
    /// Every MACE report outscores every IS report, which outscores every
    /// prior-only report. Methods that are absent impose no constraint.
    pub ordering_holds: bool,
}

pub fn compare(reports: &[MetricsReport]) -> Result<Comparison> {
    if reports.len() < 2 {
        return Err(CliError::Config(format!("compare needs at least 2 reports, got {}", reports.len())));
    }
    let domain = reports[0].domain;
    if let Some(r) = reports.iter().find(|r| r.domain != domain) {
        return Err(CliError::Config(format!(
            "cannot compare domain {} with {} (report `{}`)",
            domain, r.domain, r.name
        )));
    }

    let scores = |m: Method| reports.iter().filter(move |r| r.method == m).map(|r| r.mean_score);
    let beats = |hi: Method, lo: Method| scores(hi).all(|a| scores(lo).all(|b| a > b));
    let ordering_holds = beats(Method::Mace, Method::Is)
        && beats(Method::Is, Method::PriorOnly)
        && beats(Method::Mace, Method::PriorOnly);

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ROW_HEADER).expect("in-memory csv");
    for r in reports {
        w.write_record(r.row()).expect("in-memory csv");
    }
    let csv = String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv");

    let dash = |v: Option<f64>, digits: usize| v.map(|x| format!("{x:.digits$}")).unwrap_or_else(|| "-".into());
    let cells: Vec<[String; 6]> = reports
        .iter()
        .map(|r| {
            [
                r.name.clone(),
                r.method.to_string(),
                format!("{:.3} ± {:.3}", r.mean_score, r.std_score),
                dash(r.success_rate, 3),
                dash(r.diversity, 2),
                format!("{:.2}", r.timings.total_secs),
            ]
        })
        .collect();
    let head = ["name", "method", "score", "success", "diversity", "time (s)"];
    let widths: Vec<usize> = (0..head.len())
        .map(|c| cells.iter().map(|row| row[c].chars().count()).chain([head[c].len()]).max().unwrap())
        .collect();
    let mut text = String::new();
    let line = |text: &mut String, row: &[String]| {
        let padded: Vec<String> = row.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        let _ = writeln!(text, "{}", padded.join("  ").trim_end());
    };
    line(&mut text, &head.map(String::from));
    line(&mut text, &widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>());
    for row in &cells {
        line(&mut text, row);
    }
    let _ = writeln!(
        text,
        "domain {domain}; ordering mace > is > prior_only: {}",
        if ordering_holds { "holds" } else { "violated" }
    );
    Ok(Comparison { text, csv, ordering_holds })
}

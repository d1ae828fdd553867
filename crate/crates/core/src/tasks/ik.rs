//! Planar inverse kinematics with obstacles: dataset generation, goal
//! sampling and collision-based success metrics.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::models::TrainingPair;
use crate::rng;
use crate::scoring::ik_score;
use crate::simulators::{
    ik_simulate, IkObservation, IkSimulator, KinematicChain, ObstaclePreset, ObstacleSet, SimError,
};
use crate::space::Vec2;

/// Generation stops with an error when fewer than this fraction of uniform
/// draws are valid.
pub const MIN_VALIDITY_RATE: f64 = 1e-3;

const PROBE_DRAWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TaskError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("validity rate {rate:e} below minimum; check the chain geometry")]
    LowValidity { rate: f64 },
    #[error("{0}")]
    Config(String),
}

/// Axis-aligned region goals are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalRegion {
    pub min: Vec2,
    pub max: Vec2,
}

impl GoalRegion {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IkTaskConfig {
    pub links: usize,
    pub link_length: f64,
    pub joint_limit: f64,
    pub obstacles: ObstaclePreset,
    pub goal_region: GoalRegion,
}

impl Default for IkTaskConfig {
    /// Four unit links and a wall between the base and the goal region.
    fn default() -> Self {
        Self {
            links: 4,
            link_length: 1.0,
            joint_limit: 2.6,
            obstacles: ObstaclePreset::Wall { x: 1.3, thickness: 0.3, y_lo: -0.8, y_hi: 0.8 },
            goal_region: GoalRegion { min: Vec2::new(2.0, -0.5), max: Vec2::new(2.6, 0.5) },
        }
    }
}

impl IkTaskConfig {
    pub fn chain(&self) -> Result<KinematicChain, SimError> {
        if self.links < 2 || !(self.joint_limit > 0.0) {
            return Err(SimError::InvalidGeometry("need at least two links and a positive joint limit".into()));
        }
        KinematicChain::uniform(self.links, self.link_length, self.joint_limit)
    }

    pub fn simulator(&self) -> Result<IkSimulator, SimError> {
        Ok(IkSimulator { chain: self.chain()?, obstacles: self.obstacles.build()? })
    }
}

fn uniform_configuration<R: Rng + ?Sized>(chain: &KinematicChain, rng: &mut R) -> Vec<f64> {
    chain.joint_limits.iter().map(|l| rng.random_range(l.lo..=l.hi)).collect()
}

/// Draws uniform configurations until one is collision-free against
/// `obstacles` (and itself) and satisfies `accept`. Returns `None` after
/// `max_draws` failures.
fn draw_valid<R: Rng + ?Sized>(
    chain: &KinematicChain,
    obstacles: &ObstacleSet,
    rng: &mut R,
    max_draws: usize,
    accept: impl Fn(&IkObservation) -> bool,
) -> Option<(Vec<f64>, IkObservation)> {
    for _ in 0..max_draws {
        let q = uniform_configuration(chain, rng);
        let obs = ik_simulate(chain, obstacles, &q);
        if !obs.collision && accept(&obs) {
            return Some((q, obs));
        }
    }
    None
}

/// Valid configurations (within limits, no self-collision) paired with their
/// end-effector positions as conditions.
pub fn generate_dataset(chain: &KinematicChain, count: usize, seed: u64) -> Result<Vec<TrainingPair>, TaskError> {
    if count == 0 {
        return Err(TaskError::Config("dataset size must be at least 1".into()));
    }
    let empty = ObstacleSet::default();
    let mut rng = rng::stream(seed, rng::STREAM_DATA);
    let mut data = Vec::with_capacity(count);
    let mut draws = 0usize;
    while data.len() < count {
        let q = uniform_configuration(chain, &mut rng);
        draws += 1;
        let obs = ik_simulate(chain, &empty, &q);
        if !obs.collision {
            data.push(TrainingPair { condition: vec![obs.ee_position.x, obs.ee_position.y], x: q });
        }
        if draws >= PROBE_DRAWS {
            let rate = data.len() as f64 / draws as f64;
            if rate < MIN_VALIDITY_RATE {
                return Err(TaskError::LowValidity { rate });
            }
        }
    }
    Ok(data)
}

/// Goals inside `region` that some collision-free configuration reaches.
pub fn sample_goals(sim: &IkSimulator, region: &GoalRegion, count: usize, seed: u64) -> Result<Vec<Vec2>, TaskError> {
    let mut rng = rng::stream(seed, rng::STREAM_TASK);
    (0..count)
        .map(|_| {
            draw_valid(&sim.chain, &sim.obstacles, &mut rng, 10_000_000, |o| region.contains(o.ee_position))
                .map(|(_, o)| o.ee_position)
                .ok_or(TaskError::LowValidity { rate: 0.0 })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IkSummary {
    pub samples: usize,
    pub success_rate: f64,
    pub mean_score: f64,
    pub std_score: f64,
    /// Mean end-effector distance to the goal over collision-free samples.
    pub mean_goal_distance: Option<f64>,
}

pub fn summarize(observations: &[IkObservation], goal: Vec2) -> IkSummary {
    let n = observations.len();
    if n == 0 {
        return IkSummary::default();
    }
    let scores: Vec<f64> = observations.iter().map(|o| ik_score(o, goal)).collect();
    let mean = scores.iter().sum::<f64>() / n as f64;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64;
    let free: Vec<f64> = observations.iter().filter(|o| !o.collision).map(|o| o.ee_position.distance(goal)).collect();
    IkSummary {
        samples: n,
        success_rate: free.len() as f64 / n as f64,
        mean_score: mean,
        std_score: var.sqrt(),
        mean_goal_distance: (!free.is_empty()).then(|| free.iter().sum::<f64>() / free.len() as f64),
    }
}

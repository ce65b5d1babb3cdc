//! Per-episode navigation metrics and run-level aggregation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, Pose};
use crate::planner::PlannerDecision;
use crate::world::{geodesic, Episode, GeodesicField, Scene, WorldError};

pub const SUCCESS_RADIUS: f64 = 3.0;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("episode {0} is invalid: {1}")]
    Invalid(String, WorldError),
    #[error("trajectory has no poses")]
    EmptyTrajectory,
    #[error("nothing to aggregate")]
    Empty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub step: u32,
    pub decision: PlannerDecision,
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub episode_id: String,
    /// Start pose first, then one pose per executed low-level action.
    pub poses: Vec<Pose>,
    pub decisions: Vec<DecisionRecord>,
    /// True when the agent chose to stop; false on budget exhaustion or abort.
    pub stopped: bool,
    pub steps_used: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    #[default]
    Geodesic,
    Euclidean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode_id: String,
    pub ne: f64,
    pub tl: f64,
    pub sr: u8,
    pub osr: u8,
    pub spl: f64,
}

type GoalDistance<'a> = dyn Fn(&Point) -> Result<f64, WorldError> + 'a;

pub fn trajectory_length(poses: &[Pose]) -> f64 {
    poses
        .windows(2)
        .map(|w| w[0].position().distance(&w[1].position()))
        .sum()
}

pub fn evaluate(
    traj: &TrajectoryLog,
    episode: &Episode,
    scene: &Scene,
    mode: DistanceMode,
) -> Result<EpisodeResult, MetricsError> {
    let last = traj.poses.last().ok_or(MetricsError::EmptyTrajectory)?;
    let invalid = |e| MetricsError::Invalid(episode.id.clone(), e);
    let goal = episode.goal;
    let start = episode.start.position();
    let (l, dist_to_goal): (f64, Box<GoalDistance>) = match mode {
        DistanceMode::Geodesic => {
            let field = GeodesicField::new(scene, &goal).map_err(invalid)?;
            let l = geodesic(scene, &start, &goal).map_err(invalid)?;
            (l, Box::new(move |p: &Point| field.distance(scene, p)))
        }
        DistanceMode::Euclidean => (start.distance(&goal), Box::new(move |p: &Point| Ok(p.distance(&goal)))),
    };
    let ne = dist_to_goal(&last.position()).map_err(invalid)?;
    let mut closest = f64::INFINITY;
    for p in &traj.poses {
        closest = closest.min(dist_to_goal(&p.position()).map_err(invalid)?);
    }
    let tl = trajectory_length(&traj.poses);
    let sr = u8::from(traj.stopped && ne <= SUCCESS_RADIUS);
    let osr = u8::from(closest <= SUCCESS_RADIUS);
    let spl = if sr == 1 {
        let denom = l.max(tl);
        if denom > 0.0 {
            l / denom
        } else {
            1.0
        }
    } else {
        0.0
    };
    Ok(EpisodeResult {
        episode_id: episode.id.clone(),
        ne,
        tl,
        sr,
        osr,
        spl,
    })
}

/// Means over episodes; SR and OSR in percent, SPL scaled by 100.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub episodes: usize,
    pub ne: f64,
    pub tl: f64,
    pub sr: f64,
    pub osr: f64,
    pub spl: f64,
}

pub fn aggregate(results: &[EpisodeResult]) -> Result<SummaryRow, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = results.len() as f64;
    let mean = |f: &dyn Fn(&EpisodeResult) -> f64| results.iter().map(f).sum::<f64>() / n;
    Ok(SummaryRow {
        episodes: results.len(),
        ne: mean(&|r| r.ne),
        tl: mean(&|r| r.tl),
        sr: 100.0 * mean(&|r| r.sr as f64),
        osr: 100.0 * mean(&|r| r.osr as f64),
        spl: 100.0 * mean(&|r| r.spl),
    })
}

/// Fixed-width table in NE, TL, SR, OSR, SPL column order.
pub fn render_table(rows: &[(String, SummaryRow)]) -> String {
    let width = rows.iter().map(|(m, _)| m.len()).max().unwrap_or(0).max(6);
    let mut out = format!(
        "{:<width$}  {:>8}  {:>6}  {:>6}  {:>6}  {:>6}  {:>6}\n",
        "Method", "Episodes", "NE", "TL", "SR", "OSR", "SPL"
    );
    for (method, r) in rows {
        let _ = writeln!(
            out,
            "{method:<width$}  {:>8}  {:>6.2}  {:>6.2}  {:>6.1}  {:>6.1}  {:>6.1}",
            r.episodes, r.ne, r.tl, r.sr, r.osr, r.spl
        );
    }
    out
}

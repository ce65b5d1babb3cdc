use serde::{Deserialize, Serialize};

use super::grid::CELL;
use super::scene::Scene;
use super::WorldError;
use crate::geometry::{normalize_heading, Point, Pose, Sector};

pub const ANGLE_BINS: usize = 120;
pub const ANGLE_STEP_DEG: i32 = 3;
pub const DISTANCE_BINS: usize = 12;
pub const MAX_WAYPOINT_DISTANCE: f64 = DISTANCE_BINS as f64 * CELL;
/// Minimum distance from a waypoint to the nearest occupied cell.
pub const WAYPOINT_CLEARANCE: f64 = 0.15;
/// Sampling spacing of the feasibility check along a waypoint segment.
pub const SEGMENT_SAMPLE: f64 = 0.05;
/// Doors farther than this are not offered as door-directed candidates.
const DOOR_SIGHT: f64 = 8.0;
/// Door candidates aim this far past the door center.
const DOOR_OVERSHOOT: f64 = 0.75;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub index: usize,
    /// Clockwise heading relative to the emitting pose, in [0, 360), a
    /// multiple of 3.
    pub rel_heading: i32,
    pub sector: Sector,
    pub distance: f64,
    pub position: Point,
}

impl Waypoint {
    pub fn sector_name(&self) -> &'static str {
        self.sector.name()
    }
}

/// Farthest feasible distance bin (1..=12) along one absolute heading.
fn farthest_bin(scene: &Scene, origin: &Point, heading: f64, limit: usize) -> Option<usize> {
    let grid = scene.grid();
    let free = grid.free_distance(origin, heading, MAX_WAYPOINT_DISTANCE + CELL);
    let top = ((free / CELL + 1e-9).floor() as usize).min(limit);
    (1..=top).rev().find(|&bin| {
        let p = origin.offset(heading, bin as f64 * CELL);
        grid.clearance(&p, WAYPOINT_CLEARANCE) >= WAYPOINT_CLEARANCE
            && grid.segment_free_sampled(origin, &p, SEGMENT_SAMPLE)
    })
}

/// Geometric stand-in for a learned waypoint predictor over the 120 x 12
/// polar grid. Each heading keeps its farthest feasible distance; the
/// returned set starts with one candidate per visible door and is filled
/// greedily with the heading farthest (in angle) from those already taken.
pub fn predict_waypoints(scene: &Scene, pose: &Pose, k: usize) -> Result<Vec<Waypoint>, WorldError> {
    let origin = pose.position();
    if !scene.is_free(&origin) {
        return Err(WorldError::Collision(origin));
    }
    if k == 0 {
        return Err(WorldError::InvalidArgument("K must be at least 1".into()));
    }
    let abs = |bin: usize| normalize_heading(pose.heading + (bin as i32 * ANGLE_STEP_DEG) as f64);
    let reach: Vec<Option<usize>> = (0..ANGLE_BINS)
        .map(|b| farthest_bin(scene, &origin, abs(b), DISTANCE_BINS))
        .collect();

    let mut chosen: Vec<(usize, usize)> = Vec::new();

    let mut doors: Vec<(f64, usize, usize)> = scene
        .doors
        .iter()
        .filter_map(|door| {
            let c = door.center();
            let dist = origin.distance(&c);
            if !(0.5..=DOOR_SIGHT).contains(&dist) {
                return None;
            }
            let h = origin.heading_to(&c);
            if scene.grid().free_distance(&origin, h, dist) < dist {
                return None;
            }
            let rel = normalize_heading(h - pose.heading);
            let bin = ((rel / ANGLE_STEP_DEG as f64).round() as usize) % ANGLE_BINS;
            reach[bin]?;
            let wanted = (((dist + DOOR_OVERSHOOT) / CELL).round() as usize).clamp(1, DISTANCE_BINS);
            let d = farthest_bin(scene, &origin, abs(bin), wanted)?;
            Some((dist, bin, d))
        })
        .collect();
    doors.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (_, bin, d) in doors {
        if chosen.len() < k && chosen.iter().all(|&(b, _)| b != bin) {
            chosen.push((bin, d));
        }
    }

    let gap = |a: usize, b: usize| {
        let d = a.abs_diff(b);
        d.min(ANGLE_BINS - d)
    };
    while chosen.len() < k {
        let best = (0..ANGLE_BINS)
            .filter_map(|b| reach[b].map(|d| (b, d)))
            .filter(|&(b, _)| chosen.iter().all(|&(c, _)| c != b))
            .max_by(|&(b1, d1), &(b2, d2)| {
                let g1 = chosen.iter().map(|&(c, _)| gap(b1, c)).min().unwrap_or(ANGLE_BINS);
                let g2 = chosen.iter().map(|&(c, _)| gap(b2, c)).min().unwrap_or(ANGLE_BINS);
                g1.cmp(&g2).then(d1.cmp(&d2)).then(b2.cmp(&b1))
            });
        match best {
            Some(pick) => chosen.push(pick),
            None => break,
        }
    }

    chosen.sort_by_key(|&(b, _)| b);
    Ok(chosen
        .into_iter()
        .enumerate()
        .map(|(i, (bin, d))| {
            let rel = bin as i32 * ANGLE_STEP_DEG;
            let distance = d as f64 * CELL;
            Waypoint {
                index: i + 1,
                rel_heading: rel,
                sector: Sector::of_heading(rel as f64),
                distance,
                position: origin.offset(abs(bin), distance),
            }
        })
        .collect())
}

//! Deterministic synthetic indoor world: floor plans, tasks, waypoint
//! candidates, motion and geodesic distances.

pub mod episode;
pub mod format;
pub mod grid;
pub mod motion;
pub mod scene;
pub mod waypoint;

use thiserror::Error;

use crate::geometry::Point;

pub use episode::{generate_episode, Episode, Region, SubGoalAnnotation, SubGoalKind};
pub use grid::{DistanceField, OccupancyGrid, CELL};
pub use motion::{execute, execute_traced, Action};
pub use scene::{generate_scene, Door, Rect, Room, Scene, SceneObject, ROOM_TYPES};
pub use waypoint::{predict_waypoints, Waypoint};

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("scene ungeneratable: seed {seed} with {n_rooms} rooms exhausted its retries")]
    Ungeneratable { seed: u64, n_rooms: usize },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("pose ({}, {}) is in collision", .0.x, .0.y)]
    Collision(Point),
    #[error("points are disconnected")]
    Disconnected,
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

/// Length of the shortest 8-connected grid path between the free cells
/// nearest to `a` and `b`. Exactly symmetric in its arguments.
pub fn geodesic(scene: &Scene, a: &Point, b: &Point) -> Result<f64, WorldError> {
    let grid = scene.grid();
    let ca = grid.nearest_free_cell(a).ok_or(WorldError::Disconnected)?;
    let cb = grid.nearest_free_cell(b).ok_or(WorldError::Disconnected)?;
    if ca == cb {
        return Ok(0.0);
    }
    grid.distance_field(ca).meters(cb).ok_or(WorldError::Disconnected)
}

/// Distances from one fixed target to arbitrary query points. Equivalent
/// to calling [`geodesic`] with `target` as one endpoint.
#[derive(Clone, Debug)]
pub struct GeodesicField {
    field: DistanceField,
}

impl GeodesicField {
    pub fn new(scene: &Scene, target: &Point) -> Result<Self, WorldError> {
        let cell = scene.grid().nearest_free_cell(target).ok_or(WorldError::Disconnected)?;
        Ok(Self {
            field: scene.grid().distance_field(cell),
        })
    }

    pub fn distance(&self, scene: &Scene, p: &Point) -> Result<f64, WorldError> {
        let cell = scene.grid().nearest_free_cell(p).ok_or(WorldError::Disconnected)?;
        self.field.meters(cell).ok_or(WorldError::Disconnected)
    }
}

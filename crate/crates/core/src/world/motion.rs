use std::fmt;

use serde::{Deserialize, Serialize};

use super::grid::CELL;
use super::scene::Scene;
use crate::geometry::Pose;

pub const TURN_STEP_DEG: f64 = 3.0;
pub const FORWARD_STEP: f64 = CELL;
/// Gap left between the agent and an obstacle after a truncated step, so
/// the final position stays inside a free cell.
const CONTACT_GAP: f64 = 1e-6;

/// Low-level action. Right turns are clockwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    TurnLeft,
    TurnRight,
    Forward,
    Stop,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::TurnLeft => "turn(-3)",
            Action::TurnRight => "turn(+3)",
            Action::Forward => "forward",
            Action::Stop => "stop",
        })
    }
}

/// Runs `actions` from `pose`, returning every intermediate pose (one per
/// executed action, starting pose excluded) and the distance travelled.
/// Forward steps that would enter an occupied cell stop at its boundary.
/// Execution ends at the first `Stop`.
pub fn execute_traced(scene: &Scene, pose: &Pose, actions: &[Action]) -> (Vec<Pose>, f64) {
    let mut current = *pose;
    let mut traveled = 0.0;
    let mut poses = Vec::with_capacity(actions.len());
    for action in actions {
        match action {
            Action::TurnLeft => current = Pose::new(current.x, current.y, current.heading - TURN_STEP_DEG),
            Action::TurnRight => current = Pose::new(current.x, current.y, current.heading + TURN_STEP_DEG),
            Action::Forward => {
                let from = current.position();
                let free = scene.grid().free_distance(&from, current.heading, FORWARD_STEP);
                let step = if free >= FORWARD_STEP {
                    FORWARD_STEP
                } else {
                    (free - CONTACT_GAP).max(0.0)
                };
                let to = from.offset(current.heading, step);
                if step > 0.0 && scene.is_free(&to) {
                    current = Pose::new(to.x, to.y, current.heading);
                    traveled += step;
                }
            }
            Action::Stop => break,
        }
        poses.push(current);
    }
    (poses, traveled)
}

/// Final pose and distance travelled after running `actions`.
pub fn execute(scene: &Scene, pose: &Pose, actions: &[Action]) -> (Pose, f64) {
    let (poses, traveled) = execute_traced(scene, pose, actions);
    (poses.last().copied().unwrap_or(*pose), traveled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::test_support::open_room_scene;

    #[test]
    fn turns_then_forward_in_open_space() {
        let scene = open_room_scene();
        let start = Pose::new(5.0, 5.0, 0.0);
        let mut actions = vec![Action::TurnRight; 15];
        actions.extend([Action::Forward; 3]);
        let (end, traveled) = execute(&scene, &start, &actions);
        assert_eq!(end.heading, 45.0);
        assert!((traveled - 0.75).abs() < 1e-12);
        let expect = start.position().offset(45.0, 0.75);
        assert!(end.position().distance(&expect) < 1e-9);
    }

    #[test]
    fn forward_into_wall_truncates() {
        let scene = open_room_scene();
        // north wall face at y = 10.25
        let start = Pose::new(5.0, 10.15, 0.0);
        let (end, traveled) = execute(&scene, &start, &[Action::Forward]);
        assert!((traveled - 0.1).abs() < 1e-5, "{traveled}");
        assert!((end.y - 10.25).abs() < 1e-5);
        assert!(scene.is_free(&end.position()));
        let (again, more) = execute(&scene, &end, &[Action::Forward, Action::Forward]);
        assert!(more < 1e-5);
        assert!(scene.is_free(&again.position()));
    }

    #[test]
    fn empty_actions_are_identity() {
        let scene = open_room_scene();
        let start = Pose::new(3.0, 4.0, 123.0);
        assert_eq!(execute(&scene, &start, &[]), (start, 0.0));
    }

    #[test]
    fn heading_wraps_left() {
        let scene = open_room_scene();
        let (end, _) = execute(&scene, &Pose::new(3.0, 3.0, 0.0), &[Action::TurnLeft; 2]);
        assert_eq!(end.heading, 354.0);
    }

    #[test]
    fn stop_ends_execution() {
        let scene = open_room_scene();
        let start = Pose::new(3.0, 3.0, 0.0);
        let (poses, traveled) = execute_traced(&scene, &start, &[Action::Forward, Action::Stop, Action::Forward]);
        assert_eq!(poses.len(), 1);
        assert!((traveled - 0.25).abs() < 1e-12);
    }
}

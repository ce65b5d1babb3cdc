use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::{Cell, OccupancyGrid, CELL};
use super::scene::Scene;
use super::WorldError;
use crate::geometry::{angular_gap, normalize_heading, Point, Pose};

/// Longest ground-truth segment; matches the farthest waypoint distance.
const MAX_SEGMENT: f64 = 3.0;
/// How far past a doorway a room-entry anchor sits, in path cells.
const ENTRY_DEPTH_CELLS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubGoalKind {
    Where,
    What,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Room { room: usize },
    Object { room: usize, object: usize },
}

/// Ground-truth annotation for one instruction clause. `anchor` is the
/// point an oracle heads for while the clause is active.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubGoalAnnotation {
    pub kind: SubGoalKind,
    pub target: String,
    pub region: Region,
    pub anchor: Point,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub id: String,
    pub instruction: String,
    pub start: Pose,
    pub goal: Point,
    pub gt_path: Vec<Point>,
    pub sub_goals: Vec<SubGoalAnnotation>,
}

/// Builds a start/goal task in two different rooms of `scene`, with a
/// ground-truth path and a templated instruction whose clauses align
/// one-to-one with `sub_goals`.
pub fn generate_episode(scene: &Scene, seed: u64) -> Result<Episode, WorldError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ scene.seed.rotate_left(17));
    let n = scene.rooms.len();
    let start_room = rng.random_range(0..n);
    let goal_room = (start_room + rng.random_range(1..n)) % n;

    let goal_obj_idx = rng.random_range(0..scene.rooms[goal_room].objects.len());
    let goal_obj = &scene.rooms[goal_room].objects[goal_obj_idx];
    let goal = goal_obj.position;

    let sr = &scene.rooms[start_room].bounds;
    let inner: Vec<Cell> = {
        let x0 = (sr.min_x / CELL).round() as i64 + 2;
        let x1 = (sr.max_x / CELL).round() as i64 - 2;
        let y0 = (sr.min_y / CELL).round() as i64 + 2;
        let y1 = (sr.max_y / CELL).round() as i64 - 2;
        (y0..y1).flat_map(|y| (x0..x1).map(move |x| (x, y))).collect()
    };
    let start_cell = *inner.choose(&mut rng).expect("room interior larger than margins");
    let start_pos = OccupancyGrid::cell_center(start_cell);
    let start = Pose::new(start_pos.x, start_pos.y, 3.0 * rng.random_range(0..120) as f64);

    let grid = scene.grid();
    let field = grid.distance_field(OccupancyGrid::cell_of(&goal));
    let cells = field.descend(grid, start_cell).ok_or(WorldError::Disconnected)?;

    // rooms along the path, doorway cells skipped, consecutive repeats merged
    let mut route: Vec<(usize, usize)> = Vec::new();
    for (k, c) in cells.iter().enumerate() {
        if let Some(room) = scene.room_at(&OccupancyGrid::cell_center(*c)) {
            if route.last().map(|(r, _)| *r) != Some(room.id) {
                route.push((room.id, k));
            }
        }
    }

    let mut sub_goals = Vec::new();
    let mut clauses = Vec::new();
    for (step, &(room, first_cell)) in route.iter().enumerate().skip(1) {
        let anchor_cell = cells[(first_cell + ENTRY_DEPTH_CELLS).min(cells.len() - 1)];
        let anchor = OccupancyGrid::cell_center(anchor_cell);
        let room_type = scene.rooms[room].room_type.clone();
        if step == 1 {
            let from = &scene.rooms[route[0].0].room_type;
            clauses.push(format!("Exit the {from}"));
            sub_goals.push(SubGoalAnnotation {
                kind: SubGoalKind::Where,
                target: room_type.clone(),
                region: Region::Room { room },
                anchor,
            });
        }
        clauses.push(turn_clause(&cells, first_cell, &room_type));
        sub_goals.push(SubGoalAnnotation {
            kind: SubGoalKind::Where,
            target: room_type,
            region: Region::Room { room },
            anchor,
        });
    }
    clauses.push(format!("Find the {}", goal_obj.label));
    sub_goals.push(SubGoalAnnotation {
        kind: SubGoalKind::What,
        target: goal_obj.label.clone(),
        region: Region::Object {
            room: goal_room,
            object: goal_obj_idx,
        },
        anchor: goal,
    });

    Ok(Episode {
        id: format!("s{}-e{}", scene.seed, seed),
        instruction: join_clauses(&clauses),
        start,
        goal,
        gt_path: compress_path(&cells),
        sub_goals,
    })
}

/// First two clauses share a sentence joined by "and"; every later clause
/// is its own sentence.
fn join_clauses(clauses: &[String]) -> String {
    let mut sentences = Vec::new();
    let mut rest = clauses;
    if clauses.len() >= 2 {
        let second = lowercase_first(&clauses[1]);
        sentences.push(format!("{} and {}.", clauses[0], second));
        rest = &clauses[2..];
    }
    sentences.extend(rest.iter().map(|c| format!("{c}.")));
    sentences.join(" ")
}

fn lowercase_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// "Turn left/right into the X" or "Go straight into the X", judged from
/// the path direction a meter before and after the room is entered.
fn turn_clause(cells: &[Cell], entry: usize, room_type: &str) -> String {
    let at = |k: usize| OccupancyGrid::cell_center(cells[k.min(cells.len() - 1)]);
    let before = entry.saturating_sub(ENTRY_DEPTH_CELLS + 2);
    let door = entry.saturating_sub(1);
    let after = entry + ENTRY_DEPTH_CELLS;
    let h_in = at(before).heading_to(&at(door));
    let h_out = at(door).heading_to(&at(after));
    let turn = normalize_heading(h_out - h_in);
    if angular_gap(h_in, h_out) < 30.0 || at(before) == at(door) {
        format!("Go straight into the {room_type}")
    } else if turn < 180.0 {
        format!("Turn right into the {room_type}")
    } else {
        format!("Turn left into the {room_type}")
    }
}

/// Keeps the corners of a grid path and splits straight runs so that no
/// segment exceeds `MAX_SEGMENT`. The polyline length equals the grid
/// path length.
fn compress_path(cells: &[Cell]) -> Vec<Point> {
    let mut out = vec![OccupancyGrid::cell_center(cells[0])];
    let mut run = 0usize;
    for k in 1..cells.len() {
        let d = (cells[k].0 - cells[k - 1].0, cells[k].1 - cells[k - 1].1);
        let run_len = if d.0 != 0 && d.1 != 0 {
            CELL * std::f64::consts::SQRT_2
        } else {
            CELL
        };
        let next_turns = k + 1 < cells.len() && (cells[k + 1].0 - cells[k].0, cells[k + 1].1 - cells[k].1) != d;
        run += 1;
        let too_long = (run + 1) as f64 * run_len > MAX_SEGMENT + 1e-9;
        if next_turns || too_long || k + 1 == cells.len() {
            out.push(OccupancyGrid::cell_center(cells[k]));
            run = 0;
        }
    }
    out
}

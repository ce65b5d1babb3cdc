//! Line-delimited JSON fixture format for scenes and episodes.
//!
//! One record per line, tagged by `record`. A scene file holds a `scene`
//! header followed by its `room`, `object` and `door` records; an episode
//! file is a scene file followed by one `episode` record, its
//! `path_point` records in order and its `sub_goal` records in order.
//! The occupancy grid is not stored; it is rasterized from rooms and doors
//! on load.

use serde::{Deserialize, Serialize};

use super::episode::{Episode, Region, SubGoalAnnotation, SubGoalKind};
use super::scene::{Door, Rect, Room, Scene, SceneObject};
use super::WorldError;
use crate::geometry::{Point, Pose};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Record {
    Scene {
        seed: u64,
        width_cells: usize,
        height_cells: usize,
    },
    Room {
        id: usize,
        room_type: String,
        bounds: Rect,
    },
    Object {
        room: usize,
        label: String,
        x: f64,
        y: f64,
    },
    Door {
        id: usize,
        rooms: [usize; 2],
        bounds: Rect,
    },
    Episode {
        id: String,
        instruction: String,
        start: Pose,
        goal: Point,
    },
    PathPoint {
        x: f64,
        y: f64,
    },
    SubGoal {
        kind: SubGoalKind,
        target: String,
        region: Region,
        anchor: Point,
    },
}

fn push(out: &mut String, record: &Record) {
    out.push_str(&serde_json::to_string(record).expect("records serialize"));
    out.push('\n');
}

pub fn write_scene(scene: &Scene) -> String {
    let mut out = String::new();
    push(
        &mut out,
        &Record::Scene {
            seed: scene.seed,
            width_cells: scene.width_cells,
            height_cells: scene.height_cells,
        },
    );
    for room in &scene.rooms {
        push(
            &mut out,
            &Record::Room {
                id: room.id,
                room_type: room.room_type.clone(),
                bounds: room.bounds,
            },
        );
        for o in &room.objects {
            push(
                &mut out,
                &Record::Object {
                    room: room.id,
                    label: o.label.clone(),
                    x: o.position.x,
                    y: o.position.y,
                },
            );
        }
    }
    for d in &scene.doors {
        push(
            &mut out,
            &Record::Door {
                id: d.id,
                rooms: d.rooms,
                bounds: d.bounds,
            },
        );
    }
    out
}

pub fn write_episode(episode: &Episode) -> String {
    let mut out = String::new();
    push(
        &mut out,
        &Record::Episode {
            id: episode.id.clone(),
            instruction: episode.instruction.clone(),
            start: episode.start,
            goal: episode.goal,
        },
    );
    for p in &episode.gt_path {
        push(&mut out, &Record::PathPoint { x: p.x, y: p.y });
    }
    for s in &episode.sub_goals {
        push(
            &mut out,
            &Record::SubGoal {
                kind: s.kind,
                target: s.target.clone(),
                region: s.region,
                anchor: s.anchor,
            },
        );
    }
    out
}

/// Scene followed by episode, the on-disk layout of one suite entry.
pub fn write_episode_file(scene: &Scene, episode: &Episode) -> String {
    let mut out = write_scene(scene);
    out.push_str(&write_episode(episode));
    out
}

/// Parses a scene file or an episode file.
pub fn parse(text: &str) -> Result<(Scene, Option<Episode>), WorldError> {
    let bad = |line: usize, msg: String| WorldError::Format { line, msg };
    let mut header = None;
    let mut rooms: Vec<Room> = Vec::new();
    let mut doors = Vec::new();
    let mut episode: Option<Episode> = None;

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(raw).map_err(|e| bad(line, e.to_string()))?;
        match record {
            Record::Scene {
                seed,
                width_cells,
                height_cells,
            } => {
                if header.replace((seed, width_cells, height_cells)).is_some() {
                    return Err(bad(line, "duplicate scene header".into()));
                }
            }
            Record::Room { id, room_type, bounds } => rooms.push(Room {
                id,
                bounds,
                room_type,
                objects: Vec::new(),
            }),
            Record::Object { room, label, x, y } => rooms
                .iter_mut()
                .find(|r| r.id == room)
                .ok_or_else(|| bad(line, format!("object for unknown room {room}")))?
                .objects
                .push(SceneObject {
                    label,
                    position: Point::new(x, y),
                }),
            Record::Door { id, rooms: r, bounds } => doors.push(Door { id, rooms: r, bounds }),
            Record::Episode {
                id,
                instruction,
                start,
                goal,
            } => {
                if episode.is_some() {
                    return Err(bad(line, "duplicate episode record".into()));
                }
                episode = Some(Episode {
                    id,
                    instruction,
                    start,
                    goal,
                    gt_path: Vec::new(),
                    sub_goals: Vec::new(),
                });
            }
            Record::PathPoint { x, y } => episode
                .as_mut()
                .ok_or_else(|| bad(line, "path point before episode".into()))?
                .gt_path
                .push(Point::new(x, y)),
            Record::SubGoal {
                kind,
                target,
                region,
                anchor,
            } => episode
                .as_mut()
                .ok_or_else(|| bad(line, "sub goal before episode".into()))?
                .sub_goals
                .push(SubGoalAnnotation {
                    kind,
                    target,
                    region,
                    anchor,
                }),
        }
    }
    let (seed, w, h) = header.ok_or_else(|| bad(0, "missing scene header".into()))?;
    let scene = Scene::from_parts(seed, w, h, rooms, doors)?;
    Ok((scene, episode))
}

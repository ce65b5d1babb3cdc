//! Trace records. Three files per episode: structured records in loop
//! order (`.jsonl`), step lines for reading (`.log`), and prompts, replies
//! and memories (`.sidecar.jsonl`).

use serde::{Deserialize, Serialize};

use crate::cognitive_map::{NodeId, PlaceEdge};
use crate::geometry::Pose;
use crate::instruction::SubInstruction;
use crate::llm_backend::ChatMessage;
use crate::memory_stream::ReflectionMemory;
use crate::metrics::TrajectoryLog;
use crate::planner::PlannerDecision;
use crate::world::{Action, Waypoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum TraceRecord {
    Episode {
        id: String,
        instruction: String,
        subs: Vec<SubInstruction>,
    },
    Waypoints {
        step: u32,
        pose: Pose,
        waypoints: Vec<Waypoint>,
    },
    Descriptions {
        step: u32,
        descriptions: Vec<String>,
    },
    Decision {
        step: u32,
        decision: PlannerDecision,
        fallback: bool,
    },
    Actions {
        step: u32,
        actions: Vec<Action>,
        distance: f64,
        pose: Pose,
    },
    MapUpdate {
        step: u32,
        place: NodeId,
        room_type: String,
        edge: Option<PlaceEdge>,
        objects: Vec<String>,
    },
    Reflection {
        step: u32,
        text: Option<String>,
        d_m: Option<f64>,
        forgotten: Vec<u64>,
    },
    Rationalization {
        step: u32,
        i: usize,
        j: usize,
        text: String,
    },
    Completion {
        step: u32,
        completed: Vec<usize>,
        active: Option<usize>,
    },
    End {
        reason: String,
        stopped: bool,
        steps_used: u32,
    },
    Trajectory(TrajectoryLog),
}

impl TraceRecord {
    pub fn kind(&self) -> &'static str {
        match self {
            TraceRecord::Episode { .. } => "episode",
            TraceRecord::Waypoints { .. } => "waypoints",
            TraceRecord::Descriptions { .. } => "descriptions",
            TraceRecord::Decision { .. } => "decision",
            TraceRecord::Actions { .. } => "actions",
            TraceRecord::MapUpdate { .. } => "map_update",
            TraceRecord::Reflection { .. } => "reflection",
            TraceRecord::Rationalization { .. } => "rationalization",
            TraceRecord::Completion { .. } => "completion",
            TraceRecord::End { .. } => "end",
            TraceRecord::Trajectory(_) => "trajectory",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum SidecarRecord {
    Planner {
        step: u32,
        attempt: usize,
        request: Vec<ChatMessage>,
        reply: String,
    },
    Memory {
        id: u64,
        text: String,
        d_m: f64,
        t_m: u32,
        r_m: u32,
    },
}

impl From<&ReflectionMemory> for SidecarRecord {
    fn from(m: &ReflectionMemory) -> Self {
        SidecarRecord::Memory {
            id: m.id,
            text: m.text.clone(),
            d_m: m.d_m,
            t_m: m.t_m,
            r_m: m.r_m,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub log_lines: Vec<String>,
    pub sidecar: Vec<SidecarRecord>,
}

fn jsonl<T: Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|r| serde_json::to_string(r).expect("trace record serializes") + "\n")
        .collect()
}

impl Trace {
    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn records_jsonl(&self) -> String {
        jsonl(&self.records)
    }

    pub fn sidecar_jsonl(&self) -> String {
        jsonl(&self.sidecar)
    }

    pub fn log_text(&self) -> String {
        self.log_lines.iter().map(|l| format!("{l}\n")).collect()
    }

    /// Readable lines for one executed step.
    pub fn log_step(&mut self, step: u32, sector: &str, meters: f64, room: &str, objects: &[String]) {
        self.log_lines
            .push(format!("Step: {step} Action: go {sector} for {meters:?} meters"));
        self.log_lines.push(format!("In: {room}"));
        let quoted: Vec<String> = objects.iter().map(|o| format!("'{o}'")).collect();
        self.log_lines.push(format!("See: [{}]", quoted.join(", ")));
    }
}

/// Trajectory record of a structured trace file.
pub fn trajectory_from_jsonl(text: &str) -> Option<TrajectoryLog> {
    text.lines()
        .filter_map(|l| serde_json::from_str::<TraceRecord>(l).ok())
        .find_map(|r| match r {
            TraceRecord::Trajectory(t) => Some(t),
            _ => None,
        })
}

//! Graph memory of visited places and the objects seen from them.
//!
//! Place nodes carry a time label and are joined by edges weighted with
//! the travelled distance (0.25..=3 m) and the egocentric direction sector
//! (1..=8). Object nodes hang off exactly one place node through a
//! weight-1 edge. Candidate waypoints offered at a place are remembered so
//! the observation chain can list what was seen but not taken.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, Sector};

pub const MIN_EDGE_DISTANCE: f64 = 0.25;
pub const MAX_EDGE_DISTANCE: f64 = 3.0;
pub const OBJECT_EDGE_WEIGHT: f64 = 1.0;
pub const DEFAULT_OBSERVATION_DEPTH: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("time label {got} does not follow {expected_after}")]
    NonConsecutiveTime { got: u32, expected_after: u32 },
    #[error("unknown place node {0}")]
    UnknownPlace(NodeId),
    #[error("self loop on place {0}")]
    SelfLoop(NodeId),
    #[error("edge distance {0} outside [0.25, 3]")]
    DistanceOutOfRange(f64),
    #[error("edge direction {0} outside 1..=8")]
    DirectionOutOfRange(u8),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaceNode {
    pub id: NodeId,
    pub t: u32,
    pub position: Point,
    pub room_type: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectNode {
    pub id: NodeId,
    pub label: String,
    pub host_place: NodeId,
}

impl ObjectNode {
    /// Weight of the single edge to the host place.
    pub fn edge_weight(&self) -> f64 {
        OBJECT_EDGE_WEIGHT
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaceEdge {
    pub id: usize,
    /// Endpoints in the order they were first connected.
    pub endpoints: [NodeId; 2],
    pub distance: f64,
    pub direction: u8,
}

impl PlaceEdge {
    pub fn sector(&self) -> Sector {
        Sector::from_index(self.direction).expect("direction validated on insert")
    }
}

/// A waypoint offered while standing at a place.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub place: NodeId,
    pub position: Point,
    pub sector: Sector,
    pub distance: f64,
    pub visited: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryStep {
    pub place: PlaceNode,
    pub incoming: Option<PlaceEdge>,
    pub objects: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservationEntry {
    pub place: PlaceNode,
    pub unvisited: Vec<Candidate>,
    pub objects: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CognitiveMap {
    next_id: usize,
    places: Vec<PlaceNode>,
    objects: Vec<ObjectNode>,
    edges: Vec<PlaceEdge>,
    edge_index: BTreeMap<(NodeId, NodeId), usize>,
    candidates: Vec<Candidate>,
}

fn key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    (a.min(b), a.max(b))
}

impl CognitiveMap {
    pub fn new() -> Self {
        Self {
            next_id: 1,
            ..Self::default()
        }
    }

    fn fresh_id(&mut self) -> NodeId {
        let id = NodeId(self.next_id.max(1));
        self.next_id = id.0 + 1;
        id
    }

    pub fn places(&self) -> &[PlaceNode] {
        &self.places
    }

    pub fn objects(&self) -> &[ObjectNode] {
        &self.objects
    }

    pub fn place_edges(&self) -> &[PlaceEdge] {
        &self.edges
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn place(&self, id: NodeId) -> Option<&PlaceNode> {
        self.places.iter().find(|p| p.id == id)
    }

    pub fn max_t(&self) -> u32 {
        self.places.iter().map(|p| p.t).max().unwrap_or(0)
    }

    pub fn latest_place(&self) -> Option<&PlaceNode> {
        self.places.iter().max_by_key(|p| p.t)
    }

    pub fn add_place(&mut self, t: u32, position: Point, room_type: &str) -> Result<NodeId, MapError> {
        let last = self.max_t();
        if t != last + 1 {
            return Err(MapError::NonConsecutiveTime {
                got: t,
                expected_after: last,
            });
        }
        let id = self.fresh_id();
        self.places.push(PlaceNode {
            id,
            t,
            position,
            room_type: room_type.to_string(),
        });
        Ok(id)
    }

    /// Adds a new object node attached to `place`. The same label seen from
    /// another place becomes a separate node.
    pub fn add_object(&mut self, place: NodeId, label: &str) -> Result<NodeId, MapError> {
        if self.place(place).is_none() {
            return Err(MapError::UnknownPlace(place));
        }
        let id = self.fresh_id();
        self.objects.push(ObjectNode {
            id,
            label: label.to_string(),
            host_place: place,
        });
        Ok(id)
    }

    /// Joins two places. Reconnecting an existing pair overwrites its
    /// weights and keeps the edge id.
    pub fn connect_places(&mut self, a: NodeId, b: NodeId, distance: f64, direction: u8) -> Result<usize, MapError> {
        if a == b {
            return Err(MapError::SelfLoop(a));
        }
        for id in [a, b] {
            if self.place(id).is_none() {
                return Err(MapError::UnknownPlace(id));
            }
        }
        if !(MIN_EDGE_DISTANCE..=MAX_EDGE_DISTANCE).contains(&distance) {
            return Err(MapError::DistanceOutOfRange(distance));
        }
        if !(1..=8).contains(&direction) {
            return Err(MapError::DirectionOutOfRange(direction));
        }
        if let Some(&idx) = self.edge_index.get(&key(a, b)) {
            let e = &mut self.edges[idx];
            e.endpoints = [a, b];
            e.distance = distance;
            e.direction = direction;
            return Ok(e.id);
        }
        let id = self.edges.len();
        self.edges.push(PlaceEdge {
            id,
            endpoints: [a, b],
            distance,
            direction,
        });
        self.edge_index.insert(key(a, b), id);
        Ok(id)
    }

    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<&PlaceEdge> {
        self.edge_index.get(&key(a, b)).map(|&i| &self.edges[i])
    }

    /// Remembers the candidates offered at `place`; returns their indices
    /// into [`CognitiveMap::candidates`].
    pub fn record_candidates(
        &mut self,
        place: NodeId,
        offered: impl IntoIterator<Item = (Point, Sector, f64)>,
    ) -> Result<Vec<usize>, MapError> {
        if self.place(place).is_none() {
            return Err(MapError::UnknownPlace(place));
        }
        let start = self.candidates.len();
        self.candidates
            .extend(offered.into_iter().map(|(position, sector, distance)| Candidate {
                place,
                position,
                sector,
                distance,
                visited: false,
            }));
        Ok((start..self.candidates.len()).collect())
    }

    pub fn mark_visited(&mut self, candidate: usize) {
        if let Some(c) = self.candidates.get_mut(candidate) {
            c.visited = true;
        }
    }

    pub fn objects_at(&self, place: NodeId) -> Vec<String> {
        self.objects
            .iter()
            .filter(|o| o.host_place == place)
            .map(|o| o.label.clone())
            .collect()
    }

    pub fn degree(&self, node: NodeId) -> usize {
        if self.objects.iter().any(|o| o.id == node) {
            return 1;
        }
        self.edges.iter().filter(|e| e.endpoints.contains(&node)).count()
            + self.objects.iter().filter(|o| o.host_place == node).count()
    }

    /// Visited places in time order, each with the edge from its
    /// predecessor (none for the first).
    pub fn history_chain(&self) -> Vec<HistoryStep> {
        let mut places = self.places.clone();
        places.sort_by_key(|p| p.t);
        let mut out: Vec<HistoryStep> = Vec::with_capacity(places.len());
        for place in places {
            let incoming = out
                .last()
                .and_then(|prev| self.edge_between(prev.place.id, place.id))
                .cloned();
            let objects = self.objects_at(place.id);
            out.push(HistoryStep {
                place,
                incoming,
                objects,
            });
        }
        out
    }

    /// The current place and up to `depth - 1` places before it, newest
    /// first, each with its objects and the candidates left unvisited.
    pub fn observation_chain(&self, current: NodeId, depth: usize) -> Result<Vec<ObservationEntry>, MapError> {
        let here = self.place(current).ok_or(MapError::UnknownPlace(current))?;
        let mut older: Vec<&PlaceNode> = self.places.iter().filter(|p| p.t < here.t).collect();
        older.sort_by_key(|p| std::cmp::Reverse(p.t));
        Ok(std::iter::once(here)
            .chain(older)
            .take(depth.max(1))
            .map(|p| ObservationEntry {
                place: p.clone(),
                unvisited: self
                    .candidates
                    .iter()
                    .filter(|c| c.place == p.id && !c.visited)
                    .cloned()
                    .collect(),
                objects: self.objects_at(p.id),
            })
            .collect())
    }

    /// Line-oriented text form: places, objects and candidates, then edges.
    /// Fields are tab separated; text fields escape `\`, tab and newline.
    pub fn serialize(&self) -> String {
        let mut out = String::from("cognitive-map\t1\n");
        for p in &self.places {
            let _ = writeln!(
                out,
                "place\t{}\t{}\t{}\t{}\t{}",
                p.id,
                p.t,
                p.position.x,
                p.position.y,
                escape(&p.room_type)
            );
        }
        for o in &self.objects {
            let _ = writeln!(out, "object\t{}\t{}\t{}", o.id, o.host_place, escape(&o.label));
        }
        for c in &self.candidates {
            let _ = writeln!(
                out,
                "candidate\t{}\t{}\t{}\t{}\t{}\t{}",
                c.place,
                c.position.x,
                c.position.y,
                c.sector.index(),
                c.distance,
                u8::from(c.visited)
            );
        }
        for e in &self.edges {
            let _ = writeln!(
                out,
                "edge\t{}\t{}\t{}\t{}\t{}",
                e.id, e.endpoints[0], e.endpoints[1], e.distance, e.direction
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, MapError> {
        let mut map = CognitiveMap::new();
        let mut max_id = 0usize;
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let err = |msg: &str| MapError::Format {
                line: line_no,
                msg: msg.to_string(),
            };
            let f: Vec<&str> = line.split('\t').collect();
            let num = |i: usize| -> Result<f64, MapError> {
                f.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| err("bad number"))
            };
            let int = |i: usize| -> Result<usize, MapError> {
                f.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| err("bad integer"))
            };
            match f[0] {
                "cognitive-map" if n == 0 => continue,
                "place" if f.len() == 6 => {
                    let id = NodeId(int(1)?);
                    max_id = max_id.max(id.0);
                    map.places.push(PlaceNode {
                        id,
                        t: int(2)? as u32,
                        position: Point::new(num(3)?, num(4)?),
                        room_type: unescape(f[5]),
                    });
                }
                "object" if f.len() == 4 => {
                    let id = NodeId(int(1)?);
                    max_id = max_id.max(id.0);
                    map.objects.push(ObjectNode {
                        id,
                        host_place: NodeId(int(2)?),
                        label: unescape(f[3]),
                    });
                }
                "candidate" if f.len() == 7 => map.candidates.push(Candidate {
                    place: NodeId(int(1)?),
                    position: Point::new(num(2)?, num(3)?),
                    sector: Sector::from_index(int(4)? as u8).ok_or_else(|| err("bad sector"))?,
                    distance: num(5)?,
                    visited: int(6)? != 0,
                }),
                "edge" if f.len() == 6 => {
                    let id = int(1)?;
                    if id != map.edges.len() {
                        return Err(err("edge ids must be dense and ordered"));
                    }
                    let (a, b) = (NodeId(int(2)?), NodeId(int(3)?));
                    map.edge_index.insert(key(a, b), id);
                    map.edges.push(PlaceEdge {
                        id,
                        endpoints: [a, b],
                        distance: num(4)?,
                        direction: int(5)? as u8,
                    });
                }
                _ => return Err(err("unrecognized record")),
            }
        }
        map.next_id = max_id + 1;
        Ok(map)
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// One line per history step:
/// `Go (<sector>), Is (<room>), See (<objects>)`, without the Go clause
/// for the first step.
pub fn render_history_text(chain: &[HistoryStep]) -> String {
    chain
        .iter()
        .map(|step| {
            let tail = format!("Is ({}), See ({})", step.place.room_type, step.objects.join(", "));
            match &step.incoming {
                Some(edge) if step.place.t > 1 => format!("Go ({}), {tail}", edge.sector().name()),
                _ => tail,
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

//! One episode of the agent loop.
//!
//! Per step: predict waypoints, describe them, plan a target, execute the
//! compiled actions, update the map, reflect, rationalize, then check
//! completion. The episode ends on STOP, when the last sub-instruction
//! completes, when the step budget runs out, or when the planner backend
//! is unavailable.

use std::collections::BTreeMap;

use crate::cognitive_map::{render_history_text, CognitiveMap, NodeId, MAX_EDGE_DISTANCE, MIN_EDGE_DISTANCE};
use crate::geometry::Point;
use crate::instruction::{self, CompletionContext, InstructionState, SubInstruction, COMPLETION_RADIUS};
use crate::llm_backend::Backend;
use crate::memory_stream::{reflect, MemoryStream, StepOutcome};
use crate::metrics::{DecisionRecord, TrajectoryLog};
use crate::perception::{describe, format_description, SceneDescription};
use crate::planner::{build_prompt, decide_stop, select_target, to_actions, PlannerDecision, StopState};
use crate::world::scene::object_vocab;
use crate::world::{execute_traced, predict_waypoints, Episode, GeodesicField, Scene, Waypoint, ROOM_TYPES};

use super::config::RunConfig;
use super::trace::{SidecarRecord, Trace, TraceRecord};

/// Candidates this close to a visited place count as explored.
pub const EXPLORED_RADIUS: f64 = 1.0;

pub struct Backends {
    pub splitter: Box<dyn Backend>,
    pub rationalizer: Box<dyn Backend>,
    pub planner: Box<dyn Backend>,
    pub describer: Box<dyn Backend>,
    pub reflector: Box<dyn Backend>,
}

/// Reflection memory that outlives single episodes, with its own step
/// clock so proximity stays comparable across episodes.
#[derive(Clone, Debug)]
pub struct SharedMemory {
    pub stream: MemoryStream,
    pub clock: u32,
}

impl SharedMemory {
    pub fn new(cfg: &RunConfig) -> Self {
        Self {
            stream: MemoryStream::new(cfg.memory_config()),
            clock: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRun {
    pub trajectory: TrajectoryLog,
    pub trace: Trace,
    pub end_reason: String,
    /// Prompts handed to the planner, one per step, for inspection.
    pub history_sections: Vec<String>,
}

/// Sub-goal locations the geodesic oracle steers toward, per sub index.
fn anchors(episode: &Episode, subs: &mut [SubInstruction]) -> Vec<Point> {
    if subs.len() == episode.sub_goals.len() {
        for (s, a) in subs.iter_mut().zip(&episode.sub_goals) {
            s.kind = a.kind;
            s.target = a.target.clone();
        }
        episode.sub_goals.iter().map(|a| a.anchor).collect()
    } else {
        log::warn!(
            "episode {}: {} sub-instructions for {} annotations; steering every sub toward the goal",
            episode.id,
            subs.len(),
            episode.sub_goals.len()
        );
        vec![episode.goal; subs.len()]
    }
}

fn visible_objects(scene: &Scene, p: &Point) -> Vec<(String, f64)> {
    scene
        .nearest_room(p)
        .objects
        .iter()
        .map(|o| (o.label.clone(), o.position.distance(p)))
        .filter(|(_, d)| *d <= COMPLETION_RADIUS)
        .collect()
}

fn explored(map: &CognitiveMap, waypoints: &[Waypoint]) -> Vec<usize> {
    waypoints
        .iter()
        .filter(|w| {
            map.places()
                .iter()
                .any(|p| p.position.distance(&w.position) <= EXPLORED_RADIUS)
        })
        .map(|w| w.index)
        .collect()
}

/// History lines plus, for recent places, the sectors offered but not taken.
fn history_section(map: &CognitiveMap, current: Option<NodeId>, depth: usize) -> String {
    let mut text = render_history_text(&map.history_chain());
    if let Some(chain) = current.and_then(|c| map.observation_chain(c, depth).ok()) {
        for entry in chain.iter().filter(|e| !e.unvisited.is_empty()) {
            let sectors: Vec<&str> = entry.unvisited.iter().map(|c| c.sector.name()).collect();
            text.push_str(&format!(
                "\nUnexplored at step {}: {}",
                entry.place.t,
                sectors.join(", ")
            ));
        }
    }
    text
}

struct Oracle<'a> {
    scene: &'a Scene,
    fields: BTreeMap<usize, GeodesicField>,
    anchors: Vec<Point>,
}

impl<'a> Oracle<'a> {
    fn distance(&mut self, sub: usize, p: &Point) -> f64 {
        let scene = self.scene;
        let anchor = self.anchors[sub.min(self.anchors.len() - 1)];
        let field = self
            .fields
            .entry(sub)
            .or_insert_with(|| GeodesicField::new(scene, &anchor).expect("anchor lies in the scene"));
        field.distance(scene, p).unwrap_or(f64::INFINITY)
    }

    /// Index (1-based) of the candidate in `pool` nearest the sub-goal.
    fn best(&mut self, sub: usize, waypoints: &[Waypoint], pool: &[usize]) -> usize {
        let mut best = (f64::INFINITY, pool.first().copied().unwrap_or(1));
        for &i in pool {
            let d = self.distance(sub, &waypoints[i - 1].position);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }
}

pub fn run_episode(
    episode: &Episode,
    scene: &Scene,
    cfg: &RunConfig,
    backends: &mut Backends,
    memory: &mut SharedMemory,
) -> EpisodeRun {
    let objects = object_vocab();
    let mut subs = instruction::split(&episode.instruction, &ROOM_TYPES, &objects, backends.splitter.as_mut());
    let anchors = anchors(episode, &mut subs);
    let mut state = InstructionState::new(&episode.instruction, subs);
    let mut oracle = Oracle {
        scene,
        fields: BTreeMap::new(),
        anchors,
    };
    let goal_field = GeodesicField::new(scene, &episode.goal).ok();

    let mut trace = Trace::default();
    trace.push(TraceRecord::Episode {
        id: episode.id.clone(),
        instruction: episode.instruction.clone(),
        subs: state.subs.clone(),
    });

    let mut map = CognitiveMap::new();
    let mut pose = episode.start;
    let mut poses = vec![pose];
    let mut visited_positions = vec![pose.position()];
    let mut decisions = Vec::new();
    let mut current_place: Option<NodeId> = None;
    let mut history_sections = Vec::new();
    let mut stopped = false;
    let mut end_reason = "budget".to_string();
    let mut steps_used = 0;

    for step in 1..=cfg.step_budget {
        let sub_idx = state.current;
        let sub = state.active().expect("loop runs while a sub is active").clone();

        let waypoints = match predict_waypoints(scene, &pose, cfg.k) {
            Ok(w) if !w.is_empty() => w,
            Ok(_) | Err(_) => {
                end_reason = "no-waypoints".into();
                break;
            }
        };
        trace.push(TraceRecord::Waypoints {
            step,
            pose,
            waypoints: waypoints.clone(),
        });

        let descriptions: Vec<SceneDescription> = waypoints
            .iter()
            .map(|w| describe(w, scene, cfg.describer_mode, Some(backends.describer.as_mut())))
            .collect();
        let formatted: Vec<String> = descriptions.iter().map(format_description).collect();
        trace.push(TraceRecord::Descriptions {
            step,
            descriptions: formatted.clone(),
        });

        let all: Vec<usize> = (1..=waypoints.len()).collect();
        let explored_now = if cfg.no_cognitive_map {
            Vec::new()
        } else {
            explored(&map, &waypoints)
        };
        let mut hints = Vec::new();
        if cfg.oracle_hints() {
            hints.push(format!("best={}", oracle.best(sub_idx, &waypoints, &all)));
        }
        if !explored_now.is_empty() {
            let list: Vec<String> = explored_now.iter().map(usize::to_string).collect();
            hints.push(format!("explored={}", list.join(",")));
        }
        let history = if cfg.no_cognitive_map {
            String::new()
        } else {
            history_section(&map, current_place, cfg.observation_depth)
        };
        let reflections: Vec<String> = if cfg.no_reflection {
            Vec::new()
        } else {
            memory
                .stream
                .retrieve(cfg.retrieval_k, memory.clock.max(1))
                .into_iter()
                .map(|(m, _)| m.text)
                .collect()
        };
        let prompt = build_prompt(
            &sub.text,
            &instruction::guidance(&sub),
            &history,
            &reflections,
            &formatted,
            &hints,
            cfg.prompt_cap,
        );
        history_sections.push(prompt.history_text.clone());

        let unexplored: Vec<usize> = all.iter().copied().filter(|i| !explored_now.contains(i)).collect();
        let pool = if unexplored.is_empty() { all.clone() } else { unexplored };
        let selection = match select_target(&prompt, backends.planner.as_mut(), waypoints.len(), || {
            oracle.best(sub_idx, &waypoints, &pool)
        }) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("episode {}: {e}", episode.id);
                end_reason = "planner-unavailable".into();
                break;
            }
        };
        for (attempt, ex) in selection.exchanges.iter().enumerate() {
            trace.sidecar.push(SidecarRecord::Planner {
                step,
                attempt: attempt + 1,
                request: ex.request.clone(),
                reply: ex.reply.clone(),
            });
        }
        trace.push(TraceRecord::Decision {
            step,
            decision: selection.decision,
            fallback: selection.fallback,
        });
        let chosen = match selection.decision {
            PlannerDecision::Stop => {
                stopped = true;
                end_reason = "stop".into();
                break;
            }
            PlannerDecision::Waypoint(k) => k,
        };
        decisions.push(DecisionRecord {
            step,
            decision: selection.decision,
            fallback: selection.fallback,
        });
        steps_used = step;

        let wp = &waypoints[chosen - 1];
        let desc = &descriptions[chosen - 1];
        let actions = to_actions(wp).expect("predicted waypoints are quantized");
        let before = pose;
        let (step_poses, moved) = execute_traced(scene, &pose, &actions);
        pose = step_poses.last().copied().unwrap_or(pose);
        poses.extend(step_poses);
        visited_positions.push(pose.position());
        trace.push(TraceRecord::Actions {
            step,
            actions,
            distance: moved,
            pose,
        });
        trace.log_step(step, wp.sector_name(), wp.distance, &desc.where_, &desc.what);

        let place = map
            .add_place(step, pose.position(), &desc.where_)
            .expect("one place per step keeps time labels contiguous");
        for label in &desc.what {
            map.add_object(place, label).expect("place was just added");
        }
        let edge = match current_place {
            Some(prev) => {
                let distance = moved.clamp(MIN_EDGE_DISTANCE, MAX_EDGE_DISTANCE);
                map.connect_places(prev, place, distance, wp.sector.index())
                    .expect("edge weights are clamped into range");
                let offered = waypoints.iter().map(|w| (w.position, w.sector, w.distance));
                let ids = map.record_candidates(prev, offered).expect("previous place exists");
                map.mark_visited(ids[chosen - 1]);
                map.edge_between(prev, place).cloned()
            }
            None => None,
        };
        current_place = Some(place);
        trace.push(TraceRecord::MapUpdate {
            step,
            place,
            room_type: desc.where_.clone(),
            edge,
            objects: desc.what.clone(),
        });

        memory.clock += 1;
        if cfg.no_reflection {
            trace.push(TraceRecord::Reflection {
                step,
                text: None,
                d_m: None,
                forgotten: Vec::new(),
            });
        } else {
            let outcome = StepOutcome {
                sector: wp.sector,
                helped: oracle.distance(sub_idx, &pose.position()) < oracle.distance(sub_idx, &before.position()),
                sub_index: sub.i,
            };
            let reflected = reflect(
                &visited_positions,
                &episode.gt_path,
                &map,
                &sub,
                &outcome,
                memory.clock,
                backends.reflector.as_mut(),
            );
            match reflected {
                Ok(m) => {
                    let (text, d_m) = (m.text.clone(), m.d_m);
                    memory.stream.insert(m);
                    let forgotten = memory.stream.forget(memory.clock);
                    trace.push(TraceRecord::Reflection {
                        step,
                        text: Some(text),
                        d_m: Some(d_m),
                        forgotten,
                    });
                }
                Err(e) => {
                    log::warn!("episode {}: reflection skipped: {e}", episode.id);
                    trace.push(TraceRecord::Reflection {
                        step,
                        text: None,
                        d_m: None,
                        forgotten: Vec::new(),
                    });
                }
            }
        }

        let here = scene.room_type_at(&pose.position()).to_string();
        if !cfg.no_rationalization {
            let revised = instruction::rationalize(
                &sub,
                &formatted,
                &episode.instruction,
                &here,
                backends.rationalizer.as_mut(),
            );
            trace.push(TraceRecord::Rationalization {
                step,
                i: revised.i,
                j: revised.j,
                text: revised.text.clone(),
            });
            *state.active_mut().expect("active sub") = revised;
        }

        let visible = visible_objects(scene, &pose.position());
        let goal_distance = goal_field
            .as_ref()
            .and_then(|f| f.distance(scene, &pose.position()).ok())
            .unwrap_or(f64::INFINITY);
        let mut completed = Vec::new();
        while let Some(active) = state.active() {
            let ctx = CompletionContext {
                agent_room: &here,
                visible: &visible,
                goal_distance: state.is_final().then_some(goal_distance),
            };
            if !instruction::check_complete(active, &ctx) {
                break;
            }
            completed.push(active.i);
            state.advance();
        }
        trace.push(TraceRecord::Completion {
            step,
            completed,
            active: state.active().map(|s| s.i),
        });

        let stop = StopState {
            decision: Some(selection.decision),
            final_complete: state.is_done(),
            steps_used: step,
            budget: cfg.step_budget,
        };
        if decide_stop(&stop) {
            if state.is_done() {
                stopped = true;
                end_reason = "complete".into();
            }
            break;
        }
    }

    let trajectory = TrajectoryLog {
        episode_id: episode.id.clone(),
        poses,
        decisions,
        stopped,
        steps_used,
    };
    trace.push(TraceRecord::End {
        reason: end_reason.clone(),
        stopped,
        steps_used,
    });
    trace.push(TraceRecord::Trajectory(trajectory.clone()));
    trace
        .sidecar
        .extend(memory.stream.memories().iter().map(SidecarRecord::from));
    EpisodeRun {
        trajectory,
        trace,
        end_reason,
        history_sections,
    }
}

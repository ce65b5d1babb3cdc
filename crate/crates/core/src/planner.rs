//! Prompt assembly, target selection and action compilation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm_backend::{Backend, BackendError, ChatMessage, Params, PromptRole};
use crate::world::motion::{Action, FORWARD_STEP, TURN_STEP_DEG};
use crate::world::Waypoint;

pub const QUESTION: &str = "Which waypoint index, or STOP?";
pub const DEFAULT_PROMPT_CAP: usize = 6000;
pub const DEFAULT_STEP_BUDGET: u32 = 40;
/// Re-queries after the first unparseable reply.
pub const PARSE_RETRIES: usize = 2;

const PREAMBLE: &str = "You are a robot navigating an indoor environment by following an instruction. \
Each step you choose one candidate waypoint to move to, or STOP when the instruction is fulfilled.";

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("planner-unavailable: {0}")]
    Unavailable(#[from] BackendError),
    #[error("waypoint is not on the 3 degree / 0.25 m lattice: heading {heading}, distance {distance}")]
    NotQuantized { heading: i32, distance: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerPrompt {
    pub system_preamble: String,
    pub sub_instruction: String,
    pub guidance: String,
    pub history_text: String,
    /// Highest score first.
    pub reflections: Vec<String>,
    /// Formatted descriptions, candidate 1 first.
    pub candidates: Vec<String>,
    /// `key=value` tokens for scripted backends.
    pub hints: Vec<String>,
    pub question: String,
}

impl PlannerPrompt {
    pub fn user_text(&self) -> String {
        let mut out = format!(
            "Sub-instruction: {}\nGuidance: {}\nHistory:\n",
            self.sub_instruction, self.guidance
        );
        for line in self.history_text.lines() {
            out.push_str(line);
            out.push('\n');
        }
        out.push_str("Reflections:\n");
        for r in &self.reflections {
            out.push_str(&format!("- {r}\n"));
        }
        out.push_str("Candidates:\n");
        for (n, c) in self.candidates.iter().enumerate() {
            out.push_str(&format!("{}. {c}\n", n + 1));
        }
        out.push_str(&format!("Hints: {}\n{}", self.hints.join(" "), self.question));
        out
    }

    pub fn messages(&self) -> Vec<ChatMessage> {
        vec![
            ChatMessage::system(format!("{}\n{}", PromptRole::Planner.tag(), self.system_preamble)),
            ChatMessage::user(self.user_text()),
        ]
    }

    pub fn rendered_len(&self) -> usize {
        self.messages().iter().map(|m| m.content.len()).sum()
    }
}

/// Assembles the prompt, then trims it under `cap` by dropping the oldest
/// history lines first and the lowest-score reflections second.
pub fn build_prompt(
    sub_instruction: &str,
    guidance: &str,
    history_text: &str,
    reflections: &[String],
    descriptions: &[String],
    hints: &[String],
    cap: usize,
) -> PlannerPrompt {
    let mut prompt = PlannerPrompt {
        system_preamble: PREAMBLE.to_string(),
        sub_instruction: sub_instruction.to_string(),
        guidance: guidance.to_string(),
        history_text: history_text.to_string(),
        reflections: reflections.to_vec(),
        candidates: descriptions.to_vec(),
        hints: hints.to_vec(),
        question: QUESTION.to_string(),
    };
    while prompt.rendered_len() > cap {
        if !prompt.history_text.is_empty() {
            prompt.history_text = match prompt.history_text.split_once('\n') {
                Some((_, rest)) => rest.to_string(),
                None => String::new(),
            };
        } else if prompt.reflections.pop().is_none() {
            break;
        }
    }
    prompt
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerDecision {
    Waypoint(usize),
    Stop,
}

/// First STOP keyword or integer in `1..=m`, scanning words in order.
pub fn parse_reply(reply: &str, m: usize) -> Option<PlannerDecision> {
    reply.split(|c: char| !c.is_alphanumeric()).find_map(|word| {
        if word.eq_ignore_ascii_case("stop") {
            return Some(PlannerDecision::Stop);
        }
        match word.parse::<usize>() {
            Ok(k) if (1..=m).contains(&k) => Some(PlannerDecision::Waypoint(k)),
            _ => None,
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub request: Vec<ChatMessage>,
    pub reply: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub decision: PlannerDecision,
    pub exchanges: Vec<Exchange>,
    /// Set when every reply failed to parse and `fallback` chose.
    pub fallback: bool,
}

/// Queries the backend, re-asking up to [`PARSE_RETRIES`] times with a
/// format reminder. If no reply parses, `fallback` picks the candidate.
pub fn select_target(
    prompt: &PlannerPrompt,
    backend: &mut dyn Backend,
    m: usize,
    fallback: impl FnOnce() -> usize,
) -> Result<Selection, PlannerError> {
    let mut messages = prompt.messages();
    let mut exchanges = Vec::new();
    for _ in 0..=PARSE_RETRIES {
        let reply = backend.complete(&messages, &Params::default())?;
        exchanges.push(Exchange {
            request: messages.clone(),
            reply: reply.clone(),
        });
        if let Some(decision) = parse_reply(&reply, m) {
            return Ok(Selection {
                decision,
                exchanges,
                fallback: false,
            });
        }
        messages.push(ChatMessage::assistant(if reply.is_empty() {
            "(empty)".into()
        } else {
            reply
        }));
        messages.push(ChatMessage::user(format!(
            "Answer with a single waypoint index between 1 and {m}, or STOP."
        )));
    }
    let k = fallback().clamp(1, m.max(1));
    Ok(Selection {
        decision: PlannerDecision::Waypoint(k),
        exchanges,
        fallback: true,
    })
}

/// Turn toward the waypoint the short way round (a half turn goes
/// right), then step forward.
pub fn to_actions(waypoint: &Waypoint) -> Result<Vec<Action>, PlannerError> {
    let not_quantized = || PlannerError::NotQuantized {
        heading: waypoint.rel_heading,
        distance: waypoint.distance,
    };
    let step = TURN_STEP_DEG as i32;
    if waypoint.rel_heading % step != 0 {
        return Err(not_quantized());
    }
    let steps = waypoint.distance / FORWARD_STEP;
    if (steps - steps.round()).abs() > 1e-9 || !(1.0..=12.0).contains(&steps.round()) {
        return Err(not_quantized());
    }
    let full = 360 / step;
    let turns = waypoint.rel_heading.rem_euclid(360) / step;
    let mut actions = if turns <= full / 2 {
        vec![Action::TurnRight; turns as usize]
    } else {
        vec![Action::TurnLeft; (full - turns) as usize]
    };
    actions.extend(std::iter::repeat_n(Action::Forward, steps.round() as usize));
    Ok(actions)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopState {
    pub decision: Option<PlannerDecision>,
    pub final_complete: bool,
    pub steps_used: u32,
    pub budget: u32,
}

pub fn decide_stop(state: &StopState) -> bool {
    state.decision == Some(PlannerDecision::Stop) || state.final_complete || state.steps_used >= state.budget
}

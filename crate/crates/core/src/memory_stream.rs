//! Reflection memories scored by optimal distance, proximity and
//! repeatability, with duplicate reinforcement and bottom-fraction
//! forgetting.
//!
//! Score of memory m at step T:
//!
//! ```text
//! |d_m - delta| / delta  +  t_m / T  +  r_m / max(R)
//! ```
//!
//! where R holds the repeatability of every stored memory, m included.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cognitive_map::{render_history_text, CognitiveMap};
use crate::geometry::{Point, Sector};
use crate::instruction::SubInstruction;
use crate::llm_backend::{Backend, BackendError, ChatMessage, Params, PromptRole};

#[derive(Debug, Error, PartialEq)]
pub enum MemoryError {
    #[error("dtw needs two non-empty sequences")]
    EmptySequence,
    #[error("score needs a non-empty repeatability set")]
    EmptyRepeatability,
    #[error("score needs a current step T >= 1")]
    ZeroStep,
    #[error("delta must be positive, got {0}")]
    BadDelta(f64),
}

/// Dynamic time warping with Euclidean point cost and match, insert and
/// delete steps; both ends aligned, no window.
pub fn dtw(a: &[Point], b: &[Point]) -> Result<f64, MemoryError> {
    if a.is_empty() || b.is_empty() {
        return Err(MemoryError::EmptySequence);
    }
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for pa in a {
        cur[0] = f64::INFINITY;
        for (j, pb) in b.iter().enumerate() {
            let best = prev[j].min(prev[j + 1]).min(cur[j]);
            cur[j + 1] = pa.distance(pb) + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}

pub fn score(
    d_m: f64,
    t_m: u32,
    r_m: u32,
    current_step: u32,
    repeatability: &[u32],
    delta: f64,
) -> Result<f64, MemoryError> {
    let max_r = *repeatability.iter().max().ok_or(MemoryError::EmptyRepeatability)?;
    if current_step == 0 {
        return Err(MemoryError::ZeroStep);
    }
    if delta.is_nan() || delta <= 0.0 {
        return Err(MemoryError::BadDelta(delta));
    }
    Ok((d_m - delta).abs() / delta + t_m as f64 / current_step as f64 + r_m as f64 / max_r as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryStreamConfig {
    pub delta: f64,
    pub forget_fraction: f64,
    pub retrieval_k: usize,
}

impl Default for MemoryStreamConfig {
    fn default() -> Self {
        Self {
            delta: 3.0,
            forget_fraction: 0.10,
            retrieval_k: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionMemory {
    pub id: u64,
    pub text: String,
    pub d_m: f64,
    pub t_m: u32,
    pub r_m: u32,
}

impl ReflectionMemory {
    pub fn new(text: impl Into<String>, d_m: f64, t_m: u32) -> Self {
        Self {
            id: 0,
            text: text.into(),
            d_m,
            t_m,
            r_m: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Inserted {
    Stored(u64),
    Reinforced(u64),
}

fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MemoryStream {
    pub config: MemoryStreamConfig,
    memories: Vec<ReflectionMemory>,
    next_id: u64,
}

impl MemoryStream {
    pub fn new(config: MemoryStreamConfig) -> Self {
        Self {
            config,
            memories: Vec::new(),
            next_id: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.memories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memories.is_empty()
    }

    pub fn memories(&self) -> &[ReflectionMemory] {
        &self.memories
    }

    /// Stores `memory`, or reinforces an existing one with the same
    /// whitespace-normalized text (its t_m becomes the newcomer's, r_m + 1).
    pub fn insert(&mut self, memory: ReflectionMemory) -> Inserted {
        let key = normalize(&memory.text);
        if let Some(old) = self.memories.iter_mut().find(|m| normalize(&m.text) == key) {
            old.t_m = memory.t_m;
            old.r_m += 1;
            return Inserted::Reinforced(old.id);
        }
        let id = self.next_id.max(1);
        self.next_id = id + 1;
        self.memories.push(ReflectionMemory { id, ..memory });
        Inserted::Stored(id)
    }

    fn repeatability(&self) -> Vec<u32> {
        self.memories.iter().map(|m| m.r_m).collect()
    }

    pub fn score_of(&self, memory: &ReflectionMemory, current_step: u32) -> Result<f64, MemoryError> {
        score(
            memory.d_m,
            memory.t_m,
            memory.r_m,
            current_step,
            &self.repeatability(),
            self.config.delta,
        )
    }

    fn scored(&self, current_step: u32) -> Vec<(f64, &ReflectionMemory)> {
        let step = current_step.max(1);
        self.memories
            .iter()
            .map(|m| (self.score_of(m, step).unwrap_or(f64::NAN), m))
            .collect()
    }

    /// Removes the floor(fraction * N) lowest-scoring memories; ties go
    /// to the older t_m, then the lower id.
    pub fn forget(&mut self, current_step: u32) -> Vec<u64> {
        let n_remove = (self.config.forget_fraction * self.memories.len() as f64 + 1e-9).floor() as usize;
        if n_remove == 0 {
            return Vec::new();
        }
        let mut ranked = self.scored(current_step);
        ranked.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(a.1.t_m.cmp(&b.1.t_m))
                .then(a.1.id.cmp(&b.1.id))
        });
        let removed: Vec<u64> = ranked.iter().take(n_remove).map(|(_, m)| m.id).collect();
        self.memories.retain(|m| !removed.contains(&m.id));
        removed
    }

    /// Top `k` memories by score, ties to the newer t_m.
    pub fn retrieve(&self, k: usize, current_step: u32) -> Vec<(ReflectionMemory, f64)> {
        let mut ranked = self.scored(current_step);
        ranked.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then(b.1.t_m.cmp(&a.1.t_m))
                .then(a.1.id.cmp(&b.1.id))
        });
        ranked.into_iter().take(k).map(|(s, m)| (m.clone(), s)).collect()
    }
}

/// What one step did for the active sub-goal.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub sector: Sector,
    pub helped: bool,
    pub sub_index: usize,
}

pub fn reflection_prompt(
    outcome: &StepOutcome,
    sub: &SubInstruction,
    map: &CognitiveMap,
    d_m: f64,
) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(format!(
            "{}\nSummarize in one line what the last step taught about following the instruction.",
            PromptRole::Reflector.tag()
        )),
        ChatMessage::user(format!(
            "Sector: {}\nOutcome: {}\nSub-goal: {}\nSub-instruction: {}\nDistance to reference: {d_m:.2}\nHistory:\n{}",
            outcome.sector.name(),
            if outcome.helped { "helped" } else { "hurt" },
            outcome.sub_index,
            sub.text,
            render_history_text(&map.history_chain())
        )),
    ]
}

/// Builds a memory from the step just taken, with d_m the DTW distance
/// between the agent trajectory `y` and the reference `y_star`.
pub fn reflect(
    y: &[Point],
    y_star: &[Point],
    map: &CognitiveMap,
    sub: &SubInstruction,
    outcome: &StepOutcome,
    current_step: u32,
    backend: &mut dyn Backend,
) -> Result<ReflectionMemory, ReflectError> {
    let d_m = dtw(y, y_star)?;
    let text = backend.complete(&reflection_prompt(outcome, sub, map, d_m), &Params::default())?;
    Ok(ReflectionMemory::new(text.trim(), d_m, current_step))
}

#[derive(Debug, Error)]
pub enum ReflectError {
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

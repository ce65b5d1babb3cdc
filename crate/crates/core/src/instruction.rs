//! Sub-instruction splitting, rationalization, completion and guidance.

use serde::{Deserialize, Serialize};

use crate::llm_backend::{Backend, ChatMessage, Params, PromptRole};
pub use crate::world::SubGoalKind;

/// Radius within which a "what" target counts as reached.
pub const COMPLETION_RADIUS: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pending,
    Active,
    Complete,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubInstruction {
    /// 1-based position in the instruction.
    pub i: usize,
    /// Revision count; 0 is the split output.
    pub j: usize,
    pub text: String,
    pub original_text: String,
    pub kind: SubGoalKind,
    /// Room type (where) or object label (what) the clause is about.
    pub target: String,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstructionState {
    pub original: String,
    pub subs: Vec<SubInstruction>,
    /// 0-based index of the active sub; equals `subs.len()` once all are done.
    pub current: usize,
}

impl InstructionState {
    pub fn new(original: &str, mut subs: Vec<SubInstruction>) -> Self {
        assert!(!subs.is_empty(), "an instruction has at least one sub-instruction");
        for (n, s) in subs.iter_mut().enumerate() {
            s.status = if n == 0 { Status::Active } else { Status::Pending };
        }
        Self {
            original: original.to_string(),
            subs,
            current: 0,
        }
    }

    pub fn active(&self) -> Option<&SubInstruction> {
        self.subs.get(self.current)
    }

    pub fn active_mut(&mut self) -> Option<&mut SubInstruction> {
        self.subs.get_mut(self.current)
    }

    pub fn is_final(&self) -> bool {
        self.current + 1 == self.subs.len()
    }

    pub fn is_done(&self) -> bool {
        self.current >= self.subs.len()
    }

    /// Completes the active sub and activates the next one.
    pub fn advance(&mut self) {
        if let Some(s) = self.subs.get_mut(self.current) {
            s.status = Status::Complete;
            self.current += 1;
        }
        if let Some(s) = self.subs.get_mut(self.current) {
            s.status = Status::Active;
        }
    }
}

fn ends_sentence(word: &str) -> bool {
    word.ends_with(['.', '!', '?'])
}

/// Rule-based split: sentence boundaries, then the connectors "and" and
/// "then". A single clause is returned verbatim.
pub fn scripted_split(instruction: &str) -> Vec<String> {
    fn flush(clauses: &mut Vec<String>, current: &mut Vec<&str>) {
        if !current.is_empty() {
            let clause = current.join(" ");
            clauses.push(clause.strip_suffix(',').unwrap_or(&clause).to_string());
            current.clear();
        }
    }
    let mut clauses = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for word in instruction.split_whitespace() {
        let connector = matches!(word.to_lowercase().as_str(), "and" | "then");
        if connector && !current.is_empty() {
            flush(&mut clauses, &mut current);
            continue;
        }
        if connector && !clauses.is_empty() {
            continue;
        }
        current.push(word);
        if ends_sentence(word) {
            flush(&mut clauses, &mut current);
        }
    }
    flush(&mut clauses, &mut current);
    if clauses.len() <= 1 {
        return vec![instruction.trim().to_string()];
    }
    clauses
}

fn word_bounded(haystack: &str, needle: &str) -> Option<usize> {
    let mut from = 0;
    while let Some(pos) = haystack[from..].find(needle) {
        let at = from + pos;
        let before = haystack[..at].chars().next_back();
        let after = haystack[at + needle.len()..].chars().next();
        if !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric) {
            return Some(at);
        }
        from = at + needle.len();
    }
    None
}

/// Last vocabulary term mentioned in `clause` (longest wins at equal
/// positions).
fn last_mention<'a>(clause: &str, vocab: &[&'a str]) -> Option<&'a str> {
    let lower = clause.to_lowercase();
    vocab
        .iter()
        .filter_map(|term| {
            let mut last = None;
            let mut from = 0;
            while let Some(at) = word_bounded(&lower[from..], term) {
                last = Some(from + at);
                from += at + term.len();
            }
            last.map(|at| (at + term.len(), term.len(), *term))
        })
        .max_by_key(|&(end, len, _)| (end, len))
        .map(|(_, _, t)| t)
}

/// Channel and target of a clause: "find ..." clauses and object mentions
/// are "what", room mentions are "where", anything else falls back to
/// "what" with the clause text as its target.
pub fn tag_clause(clause: &str, rooms: &[&str], objects: &[&str]) -> (SubGoalKind, String) {
    let head = clause.split_whitespace().next().unwrap_or("").to_lowercase();
    let object = last_mention(clause, objects);
    let room = last_mention(clause, rooms);
    match (head.as_str(), room, object) {
        ("find", _, Some(o)) => (SubGoalKind::What, o.to_string()),
        (h, Some(r), _) if h != "find" => (SubGoalKind::Where, r.to_string()),
        (_, _, Some(o)) => (SubGoalKind::What, o.to_string()),
        (_, Some(r), None) => (SubGoalKind::Where, r.to_string()),
        _ => (
            SubGoalKind::What,
            clause.trim_end_matches(['.', '!', '?']).to_lowercase(),
        ),
    }
}

pub fn split_prompt(instruction: &str) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(format!(
            "{}\nBreak the navigation instruction into ordered sub-instructions, one per line.",
            PromptRole::Splitter.tag()
        )),
        ChatMessage::user(format!("Instruction: {instruction}")),
    ]
}

/// Splits through the backend, falling back to [`scripted_split`] when the
/// backend fails or returns nothing usable.
pub fn split(instruction: &str, rooms: &[&str], objects: &[&str], backend: &mut dyn Backend) -> Vec<SubInstruction> {
    let clauses = match backend.complete(&split_prompt(instruction), &Params::default()) {
        Ok(reply) => {
            let lines: Vec<String> = reply
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect();
            if lines.is_empty() {
                log::warn!("splitter returned no clauses; using the scripted rule");
                scripted_split(instruction)
            } else {
                lines
            }
        }
        Err(e) => {
            log::warn!("splitter failed ({e}); using the scripted rule");
            scripted_split(instruction)
        }
    };
    clauses
        .into_iter()
        .enumerate()
        .map(|(n, text)| {
            let (kind, target) = tag_clause(&text, rooms, objects);
            SubInstruction {
                i: n + 1,
                j: 0,
                original_text: text.clone(),
                text,
                kind,
                target,
                status: Status::Pending,
            }
        })
        .collect()
}

pub fn rationalize_prompt(
    sub: &SubInstruction,
    descriptions: &[String],
    original: &str,
    current_room: &str,
) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(format!(
            "{}\nRewrite the current sub-instruction so it is actionable from what the agent sees now.",
            PromptRole::Rationalizer.tag()
        )),
        ChatMessage::user(format!(
            "Instruction: {original}\nOriginal sub-instruction: {}\nSub-instruction: {}\nTarget: {}\nCurrent room: {current_room}\nDescriptions:\n{}",
            sub.original_text,
            sub.text,
            sub.target,
            descriptions.join("\n")
        )),
    ]
}

/// Produces revision `j + 1` of `sub`. On backend failure the text is kept
/// but the revision still advances.
pub fn rationalize(
    sub: &SubInstruction,
    descriptions: &[String],
    original: &str,
    current_room: &str,
    backend: &mut dyn Backend,
) -> SubInstruction {
    let mut next = sub.clone();
    next.j += 1;
    match backend.complete(
        &rationalize_prompt(sub, descriptions, original, current_room),
        &Params::default(),
    ) {
        Ok(reply) if !reply.trim().is_empty() => next.text = reply.trim().to_string(),
        Ok(_) => log::warn!(
            "rationalizer returned an empty reply; keeping sub-instruction {}",
            sub.i
        ),
        Err(e) => log::warn!("rationalizer failed ({e}); keeping sub-instruction {}", sub.i),
    }
    next
}

#[derive(Clone, Debug, Default)]
pub struct CompletionContext<'a> {
    pub agent_room: &'a str,
    /// Object labels near the agent with their distances.
    pub visible: &'a [(String, f64)],
    /// Distance to the episode goal; `Some` only for the final sub.
    pub goal_distance: Option<f64>,
}

pub fn check_complete(sub: &SubInstruction, ctx: &CompletionContext<'_>) -> bool {
    let reached = match sub.kind {
        SubGoalKind::Where => ctx.agent_room == sub.target,
        SubGoalKind::What => ctx
            .visible
            .iter()
            .any(|(label, d)| *label == sub.target && *d <= COMPLETION_RADIUS),
    };
    reached && ctx.goal_distance.is_none_or(|d| d <= COMPLETION_RADIUS)
}

pub fn guidance(sub: &SubInstruction) -> String {
    match sub.kind {
        SubGoalKind::Where => format!("You should try to go ({})", sub.target),
        SubGoalKind::What => format!("You should try to find ({})", sub.target),
    }
}

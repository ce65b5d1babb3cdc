//! Deterministic stand-in for every language role.
//!
//! Replies are pure functions of the request. The planner follows the
//! `best=<k>` hint when present; with [`Noise`] it instead returns a
//! uniformly random plausible reply at the given rate, where the draw is
//! seeded by the prompt itself.
//!
//! A choice is plausible unless the prompt rules it out: candidates listed
//! under `explored=` are excluded, and STOP is excluded when the
//! sub-instruction states a current room other than the target or when a
//! non-empty history never placed the target in view.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{field, validate, Backend, BackendError, ChatMessage, Params, PromptRole};
use crate::instruction::scripted_split;
use crate::perception::parse_description;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Noise {
    pub rate: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Default)]
pub struct ScriptedBackend {
    noise: Option<Noise>,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn noisy(noise: Noise) -> Self {
        Self { noise: Some(noise) }
    }
}

fn missing(key: &str) -> BackendError {
    BackendError::InvalidRequest(format!("scripted backend needs a `{key}` field"))
}

/// Candidate lines of a planner prompt: `(index, description)`.
fn candidates(messages: &[ChatMessage]) -> Vec<(usize, String)> {
    messages
        .iter()
        .filter(|m| m.role == super::Role::User)
        .flat_map(|m| m.content.lines())
        .filter_map(|line| {
            let (idx, rest) = line.split_once(". ")?;
            Some((idx.parse().ok()?, rest.to_string()))
        })
        .collect()
}

fn hint<'a>(messages: &'a [ChatMessage], key: &str) -> Option<&'a str> {
    field(messages, "Hints")?
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix(key)?.strip_prefix('='))
}

/// Target named by the guidance line, `You should try to go (X)`.
fn guidance_target(messages: &[ChatMessage]) -> Option<&str> {
    let g = field(messages, "Guidance")?;
    let inner = &g[g.find('(')? + 1..];
    Some(&inner[..inner.rfind(')')?])
}

fn mentions(description: &str, target: &str) -> bool {
    parse_description(description).is_some_and(|(_, what, room)| {
        room.eq_ignore_ascii_case(target) || what.iter().any(|w| w.eq_ignore_ascii_case(target))
    })
}

/// Lines of the planner prompt's `History:` section.
fn history_lines(messages: &[ChatMessage]) -> Vec<&str> {
    messages
        .iter()
        .filter(|m| m.role == super::Role::User)
        .flat_map(|m| m.content.lines().skip_while(|l| *l != "History:").skip(1))
        .take_while(|l| *l != "Reflections:")
        .collect()
}

/// Whether a `.. Is (room), See (a, b)` history line shows `target`.
fn history_shows(line: &str, target: &str) -> bool {
    let inner = |key: &str| {
        let rest = &line[line.find(key)? + key.len()..];
        Some(&rest[..rest.find(')')?])
    };
    inner("Is (").is_some_and(|r| r.eq_ignore_ascii_case(target))
        || inner("See (").is_some_and(|s| s.split(", ").any(|o| o.eq_ignore_ascii_case(target)))
}

fn plan(messages: &[ChatMessage], noise: Option<Noise>) -> String {
    let cands = candidates(messages);
    let target = guidance_target(messages);
    let matching = |pool: &[usize]| -> Vec<usize> {
        match target {
            Some(t) => pool
                .iter()
                .copied()
                .filter(|i| cands.iter().any(|(j, d)| j == i && mentions(d, t)))
                .collect(),
            None => Vec::new(),
        }
    };
    let all: Vec<usize> = cands.iter().map(|(i, _)| *i).collect();
    let clean = match hint(messages, "best") {
        Some(best) => best.to_string(),
        None => matching(&all)
            .first()
            .or(all.first())
            .map_or("STOP".into(), |i| i.to_string()),
    };
    let Some(noise) = noise else { return clean };

    let mut h = Sha256::new();
    h.update(noise.seed.to_le_bytes());
    h.update(super::request_text(messages).as_bytes());
    let mut rng = ChaCha8Rng::from_seed(h.finalize().into());
    if rng.random::<f64>() >= noise.rate {
        return clean;
    }

    let explored: Vec<usize> = hint(messages, "explored")
        .map(|s| s.split(',').filter_map(|x| x.parse().ok()).collect())
        .unwrap_or_default();
    let mut pool: Vec<usize> = all.iter().copied().filter(|i| !explored.contains(i)).collect();
    if pool.is_empty() {
        pool = all.clone();
    }
    let here = field(messages, "Sub-instruction")
        .and_then(|s| s.split_once("currently in "))
        .map(|(_, room)| room.trim_end_matches('.').trim());
    let elsewhere = matches!((here, target), (Some(r), Some(t)) if !r.eq_ignore_ascii_case(t));
    let history = history_lines(messages);
    let never_seen = match target {
        Some(t) => !history.is_empty() && !history.iter().any(|l| history_shows(l, t)),
        None => false,
    };
    let stop_ruled_out = elsewhere || never_seen;
    let mut choices: Vec<String> = pool.iter().map(|i| i.to_string()).collect();
    if !stop_ruled_out || choices.is_empty() {
        choices.push("STOP".into());
    }
    choices[rng.random_range(0..choices.len())].clone()
}

impl Backend for ScriptedBackend {
    fn complete(&mut self, messages: &[ChatMessage], _params: &Params) -> Result<String, BackendError> {
        validate(messages)?;
        let role = PromptRole::of(messages).ok_or_else(|| BackendError::InvalidRequest("no role tag".into()))?;
        let get = |key: &str| field(messages, key).ok_or_else(|| missing(key));
        Ok(match role {
            PromptRole::Splitter => scripted_split(get("Instruction")?).join("\n"),
            PromptRole::Rationalizer => {
                format!("Head toward {}; currently in {}", get("Target")?, get("Current room")?)
            }
            PromptRole::Reflector => format!(
                "step toward {} {} sub-goal {}",
                get("Sector")?,
                get("Outcome")?,
                get("Sub-goal")?
            ),
            PromptRole::Describer => get("Observation")?.to_string(),
            PromptRole::Planner => plan(messages, self.noise),
        })
    }
}

//! Record and replay of backend traffic.
//!
//! A cassette is a JSON-lines file, one entry per call. Entries are keyed
//! by the request digest plus its occurrence number, so a prompt that
//! legitimately repeats within a run replays its replies in order.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{validate, Backend, BackendError, ChatMessage, Params};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub digest: String,
    pub occurrence: usize,
    pub request: String,
    pub reply: String,
}

/// Concatenated `role:content` pairs, one per line. Params are excluded.
pub fn request_text(messages: &[ChatMessage]) -> String {
    messages
        .iter()
        .map(|m| format!("{}:{}\n", m.role.as_str(), m.content))
        .collect()
}

pub fn digest(messages: &[ChatMessage]) -> String {
    hex::encode(Sha256::digest(request_text(messages).as_bytes()))
}

#[derive(Debug, Default)]
struct Counter(HashMap<String, usize>);

impl Counter {
    fn next(&mut self, digest: &str) -> usize {
        let n = self.0.entry(digest.to_string()).or_insert(0);
        *n += 1;
        *n
    }
}

#[derive(Debug)]
struct Sink {
    out: BufWriter<File>,
    seen: Counter,
    written: usize,
}

/// Append-only cassette writer shared by every recording wrapper of a run.
#[derive(Clone, Debug)]
pub struct Cassette {
    sink: Arc<Mutex<Sink>>,
}

impl Cassette {
    /// Creates (truncating) the cassette file. Fails at startup if the path
    /// is not writable.
    pub fn create(path: &Path) -> Result<Self, BackendError> {
        let file = OpenOptions::new().create(true).write(true).truncate(true).open(path)?;
        Ok(Self {
            sink: Arc::new(Mutex::new(Sink {
                out: BufWriter::new(file),
                seen: Counter::default(),
                written: 0,
            })),
        })
    }

    fn append(&self, messages: &[ChatMessage], reply: &str) -> Result<(), BackendError> {
        let mut sink = self.sink.lock().expect("cassette lock poisoned");
        let digest = digest(messages);
        let entry = CassetteEntry {
            occurrence: sink.seen.next(&digest),
            digest,
            request: request_text(messages),
            reply: reply.to_string(),
        };
        let line = serde_json::to_string(&entry).expect("entry serializes");
        writeln!(sink.out, "{line}")?;
        sink.out.flush()?;
        sink.written += 1;
        Ok(())
    }

    pub fn entries_written(&self) -> usize {
        self.sink.lock().expect("cassette lock poisoned").written
    }

    /// Wraps `inner` so every successful call is appended here.
    pub fn record<B: Backend>(&self, inner: B) -> Recorder<B> {
        Recorder {
            inner,
            cassette: self.clone(),
        }
    }
}

pub struct Recorder<B> {
    inner: B,
    cassette: Cassette,
}

impl<B: Backend> Backend for Recorder<B> {
    fn complete(&mut self, messages: &[ChatMessage], params: &Params) -> Result<String, BackendError> {
        let reply = self.inner.complete(messages, params)?;
        self.cassette.append(messages, &reply)?;
        Ok(reply)
    }
}

#[derive(Debug)]
struct Tape {
    replies: HashMap<(String, usize), String>,
    seen: Counter,
}

/// Serves replies from a cassette. Clones share one position, so several
/// role backends can replay one recording.
#[derive(Clone, Debug)]
pub struct ReplayBackend {
    tape: Arc<Mutex<Tape>>,
}

impl ReplayBackend {
    pub fn open(path: &Path) -> Result<Self, BackendError> {
        let reader = BufReader::new(File::open(path)?);
        let mut replies = HashMap::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: CassetteEntry = serde_json::from_str(&line).map_err(|e| BackendError::CassetteFormat {
                line: n + 1,
                msg: e.to_string(),
            })?;
            let key = (entry.digest, entry.occurrence);
            if replies.insert(key, entry.reply).is_some() {
                return Err(BackendError::CassetteFormat {
                    line: n + 1,
                    msg: "duplicate digest and occurrence".into(),
                });
            }
        }
        Ok(Self::from_replies(replies))
    }

    fn from_replies(replies: HashMap<(String, usize), String>) -> Self {
        Self {
            tape: Arc::new(Mutex::new(Tape {
                replies,
                seen: Counter::default(),
            })),
        }
    }

    pub fn len(&self) -> usize {
        self.tape.lock().expect("tape lock poisoned").replies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Backend for ReplayBackend {
    fn complete(&mut self, messages: &[ChatMessage], _params: &Params) -> Result<String, BackendError> {
        validate(messages)?;
        let mut tape = self.tape.lock().expect("tape lock poisoned");
        let digest = digest(messages);
        let occurrence = tape.seen.next(&digest);
        tape.replies
            .get(&(digest.clone(), occurrence))
            .cloned()
            .ok_or(BackendError::CassetteMiss { digest, occurrence })
    }
}

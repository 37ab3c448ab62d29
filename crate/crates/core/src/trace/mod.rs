//! The logging backbone: the log entry hierarchy, the append-only trace
//! writer, frame export, the final run report, and offline replay checking.

mod entry;
pub mod replay;
mod report;

use std::io::Write;

use thiserror::Error;

use crate::engine::World;

pub use entry::{
    num_to_json, value_from_json, value_to_json, EntryBody, FrameAgent, ItemKind, LogEntry,
    RunStatus, Severity,
};
pub use replay::{replay_check, ReplayError};
pub use report::{ValidationReport, ViolationRecord, WatchStats};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace writer is closed")]
    Closed,
    #[error("trace io: {0}")]
    Io(#[from] std::io::Error),
}

/// Append-only writer for one run's trace. Entries are written in call
/// order and never reordered; `flush` runs at end of each tick.
pub struct TraceWriter<W: Write> {
    out: W,
    closed: bool,
    entries: u64,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Self {
        TraceWriter {
            out,
            closed: false,
            entries: 0,
        }
    }

    /// Number of entries appended so far.
    pub fn entries_written(&self) -> u64 {
        self.entries
    }

    pub fn append(&mut self, entry: &LogEntry) -> Result<(), TraceError> {
        if self.closed {
            return Err(TraceError::Closed);
        }
        let mut line = entry.to_line();
        line.push('\n');
        self.out.write_all(line.as_bytes())?;
        self.entries += 1;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), TraceError> {
        if self.closed {
            return Err(TraceError::Closed);
        }
        self.out.flush()?;
        Ok(())
    }

    pub fn close(&mut self) -> Result<(), TraceError> {
        if !self.closed {
            self.out.flush()?;
            self.closed = true;
        }
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Append one entry (the Logger Agent surface).
pub fn append_entry<W: Write>(writer: &mut TraceWriter<W>, entry: &LogEntry) -> Result<(), TraceError> {
    writer.append(entry)
}

/// Export one visual-validation frame: every agent's (id, kind, x, y,
/// color), ids ascending. Colors come from the registered model, falling
/// back to the agent's own `color` attribute.
pub fn write_frame<W: Write>(
    writer: &mut TraceWriter<W>,
    run_id: &str,
    world: &World,
    tick: u64,
) -> Result<(), TraceError> {
    writer.append(&frame_entry(run_id, world, tick))
}

pub fn frame_entry(run_id: &str, world: &World, tick: u64) -> LogEntry {
    let color_of = crate::models::registry()
        .find(&world.model)
        .map(|m| m.color_of);
    let agents = world
        .agents()
        .map(|agent| FrameAgent {
            id: agent.id.0,
            kind: agent.kind.clone(),
            x: agent.x,
            y: agent.y,
            color: match color_of {
                Some(f) => f(agent).to_string(),
                None => agent
                    .attr("color")
                    .and_then(|c| match c {
                        crate::engine::AttrValue::Sym(s) => Some(s.clone()),
                        _ => None,
                    })
                    .unwrap_or_else(|| "gray".to_string()),
            },
        })
        .collect();
    LogEntry {
        run_id: run_id.to_string(),
        tick,
        body: EntryBody::Frame { agents },
    }
}

/// Full-state entry for offline replay: every agent's attribute table plus
/// world geometry and links.
pub fn state_entry(run_id: &str, world: &World, tick: u64) -> LogEntry {
    LogEntry {
        run_id: run_id.to_string(),
        tick,
        body: EntryBody::State {
            width: world.width,
            height: world.height,
            agents: world.agents().cloned().collect(),
            links: world
                .links()
                .map(|l| {
                    let (a, b) = l.endpoints();
                    (a.0, b.0)
                })
                .collect(),
        },
    }
}

/// Parse every line of a recorded trace. Fails with the 1-based line number
/// of the first corrupt record.
pub fn parse_trace(text: &str) -> Result<Vec<LogEntry>, ReplayError> {
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry = LogEntry::from_line(line).map_err(|reason| ReplayError::CorruptTrace {
            line: idx + 1,
            reason,
        })?;
        entries.push(entry);
    }
    Ok(entries)
}

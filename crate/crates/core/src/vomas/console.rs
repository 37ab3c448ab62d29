//! The virtual console: run-time messages on a byte stream (standard error
//! by default), each mirrored into the trace as a console entry.

use std::fmt;
use std::io::Write;

use crate::trace::{EntryBody, LogEntry, Severity};

/// One console line: `[tick] SEVERITY name: message`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsoleRecord {
    pub tick: u64,
    pub severity: Severity,
    pub name: String,
    pub message: String,
}

impl fmt::Display for ConsoleRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {} {}: {}",
            self.tick,
            self.severity.console_str(),
            self.name,
            self.message
        )
    }
}

/// Console agent wrapping the output stream. Stream write failures never
/// stop the run; they are counted and surfaced in the report.
pub struct ConsoleAgent<W: Write> {
    sink: W,
    failures: u64,
}

impl<W: Write> ConsoleAgent<W> {
    pub fn new(sink: W) -> Self {
        ConsoleAgent { sink, failures: 0 }
    }

    pub fn failures(&self) -> u64 {
        self.failures
    }

    pub fn into_inner(self) -> W {
        self.sink
    }

    /// Write one record to the stream and return it along with its trace
    /// mirror entry.
    pub fn emit(
        &mut self,
        run_id: &str,
        tick: u64,
        severity: Severity,
        name: &str,
        message: &str,
    ) -> (ConsoleRecord, LogEntry) {
        let record = ConsoleRecord {
            tick,
            severity,
            name: name.to_string(),
            message: message.to_string(),
        };
        if writeln!(self.sink, "{record}").is_err() {
            self.failures += 1;
        }
        let entry = LogEntry {
            run_id: run_id.to_string(),
            tick,
            body: EntryBody::Console {
                severity,
                name: name.to_string(),
                message: message.to_string(),
            },
        };
        (record, entry)
    }
}

/// Free-function form of [`ConsoleAgent::emit`].
pub fn console_emit<W: Write>(
    console: &mut ConsoleAgent<W>,
    run_id: &str,
    tick: u64,
    severity: Severity,
    name: &str,
    message: &str,
) -> (ConsoleRecord, LogEntry) {
    console.emit(run_id, tick, severity, name, message)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_matches_contract() {
        let mut console = ConsoleAgent::new(Vec::new());
        let (record, entry) = console.emit(
            "r",
            212,
            Severity::Violation,
            "wolves_alive",
            "count(agents[kind == wolf]) > 0 evaluated false",
        );
        assert_eq!(
            record.to_string(),
            "[212] VIOLATION wolves_alive: count(agents[kind == wolf]) > 0 evaluated false"
        );
        assert_eq!(entry.kind(), "console");
        let text = String::from_utf8(console.into_inner()).unwrap();
        assert_eq!(text, format!("{record}\n"));
    }

    #[test]
    fn info_format() {
        let mut console = ConsoleAgent::new(Vec::new());
        let (record, _) = console.emit("r", 0, Severity::Info, "run", "starting");
        assert_eq!(record.to_string(), "[0] INFO run: starting");
    }

    #[test]
    fn emissions_appear_in_order() {
        let mut console = ConsoleAgent::new(Vec::new());
        console.emit("r", 4, Severity::Info, "a", "first");
        console.emit("r", 4, Severity::Info, "b", "second");
        let text = String::from_utf8(console.into_inner()).unwrap();
        assert_eq!(text, "[4] INFO a: first\n[4] INFO b: second\n");
    }

    struct FailingSink;

    impl Write for FailingSink {
        fn write(&mut self, _: &[u8]) -> std::io::Result<usize> {
            Err(std::io::Error::other("sink failure"))
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }

    #[test]
    fn stream_failure_is_counted_not_fatal() {
        let mut console = ConsoleAgent::new(FailingSink);
        console.emit("r", 0, Severity::Info, "a", "msg");
        console.emit("r", 1, Severity::Info, "b", "msg");
        assert_eq!(console.failures(), 2);
    }
}

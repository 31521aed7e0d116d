//! Per-tick trace records, written one JSON object per line.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Laser,
    Btm,
    Hdtm,
    Srm,
    Ctrl,
    Human,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: f64,
    pub source: Source,
    pub kind: String,
    pub detail: Value,
}

pub trait TraceSink {
    /// Producers skip building records when this is false.
    fn enabled(&self) -> bool {
        true
    }

    fn record(&mut self, record: TraceRecord);
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl TraceSink for NullSink {
    fn enabled(&self) -> bool {
        false
    }

    fn record(&mut self, _: TraceRecord) {}
}

/// Keeps records in memory.
#[derive(Debug, Default, Clone)]
pub struct MemorySink {
    pub records: Vec<TraceRecord>,
}

impl TraceSink for MemorySink {
    fn record(&mut self, record: TraceRecord) {
        self.records.push(record);
    }
}

/// Writes JSON lines. The first write error is kept and later records are
/// dropped.
pub struct JsonlSink<W: Write> {
    out: W,
    error: Option<io::Error>,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(out: W) -> Self {
        Self { out, error: None }
    }

    pub fn finish(mut self) -> io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> TraceSink for JsonlSink<W> {
    fn record(&mut self, record: TraceRecord) {
        if self.error.is_some() {
            return;
        }
        let written = serde_json::to_writer(&mut self.out, &record)
            .map_err(io::Error::from)
            .and_then(|_| self.out.write_all(b"\n"));
        if let Err(e) = written {
            self.error = Some(e);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn jsonl_lines_have_the_four_fields() {
        let mut sink = JsonlSink::new(Vec::new());
        sink.record(TraceRecord {
            t: 0.5,
            source: Source::Ctrl,
            kind: "HeadTurnEnd".into(),
            detail: json!({}),
        });
        sink.record(TraceRecord {
            t: 1.0,
            source: Source::Btm,
            kind: "estimate".into(),
            detail: json!({"x": 2.0}),
        });
        let text = String::from_utf8(sink.finish().unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], r#"{"t":0.5,"source":"ctrl","kind":"HeadTurnEnd","detail":{}}"#);
        let v: Value = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(v["source"], "btm");
        assert_eq!(v["detail"]["x"], 2.0);
    }

    #[test]
    fn null_sink_is_disabled() {
        assert!(!NullSink.enabled());
        assert!(MemorySink::default().enabled());
    }
}

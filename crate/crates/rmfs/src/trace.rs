use std::io::Write;

use rmfs_core::engine::{TraceEvent, TraceSink};

/// Writes one tab-separated line per event. The first IO error is kept and
/// later events are dropped.
pub struct TraceWriter<W: Write> {
    out: W,
    pub error: Option<std::io::Error>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out, error: None }
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> TraceSink for TraceWriter<W> {
    fn record(&mut self, time: f64, event: &TraceEvent) {
        if self.error.is_none() {
            if let Err(e) = writeln!(self.out, "{time:.3}\t{event}") {
                self.error = Some(e);
            }
        }
    }
}

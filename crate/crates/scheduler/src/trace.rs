use std::io;

use crate::{Queue, TaskId};

/// One executed task as seen by the worker that ran it. Times are
/// nanoseconds on the scheduler's monotonic clock.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub task: TaskId,
    pub tag: String,
    pub queue: Queue,
    pub worker: usize,
    pub start_ns: u64,
    pub end_ns: u64,
}

impl TraceEvent {
    pub fn overlaps(&self, other: &TraceEvent) -> bool {
        self.start_ns < other.end_ns && other.start_ns < self.end_ns
    }
}

/// Writes `tag,queue,worker,start_ns,end_ns` rows with a header.
pub fn write_trace_csv<W: io::Write>(events: &[TraceEvent], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["tag", "queue", "worker", "start_ns", "end_ns"])?;
    for e in events {
        w.write_record([
            e.tag.clone(),
            e.queue.0.to_string(),
            e.worker.to_string(),
            e.start_ns.to_string(),
            e.end_ns.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Largest number of events running at the same instant.
pub fn max_concurrency(events: &[TraceEvent]) -> usize {
    let mut edges: Vec<(u64, i32)> = events
        .iter()
        .flat_map(|e| [(e.start_ns, 1), (e.end_ns, -1)])
        .collect();
    // Ends sort before starts at equal timestamps.
    edges.sort();
    let mut cur = 0i32;
    let mut best = 0i32;
    for (_, d) in edges {
        cur += d;
        best = best.max(cur);
    }
    best as usize
}

//! JSON-lines run logs: one record per published message.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::thread;
use std::time::{Duration, Instant};

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use thiserror::Error;

/// One line of a run log. `seq` counts per topic from zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    pub timestamp_ns: u64,
    pub topic: String,
    pub payload: Box<RawValue>,
}

impl PartialEq for LogRecord {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
            && self.timestamp_ns == other.timestamp_ns
            && self.topic == other.topic
            && self.payload.get() == other.payload.get()
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("payload on {topic} is not JSON: {message}")]
    Payload { topic: String, message: String },
    #[error("timestamp went backwards on {topic}: {timestamp_ns} < {last}")]
    Backwards { topic: String, timestamp_ns: u64, last: u64 },
}

/// Appends records, assigning per-topic sequence numbers.
pub struct LogWriter<W: Write> {
    out: W,
    seq: BTreeMap<String, u64>,
    last_ts: u64,
    records: u64,
}

impl LogWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>) -> io::Result<Self> {
        if let Some(dir) = path.as_ref().parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        Ok(LogWriter::new(BufWriter::new(File::create(path)?)))
    }
}

impl<W: Write> LogWriter<W> {
    pub fn new(out: W) -> Self {
        LogWriter { out, seq: BTreeMap::new(), last_ts: 0, records: 0 }
    }

    /// Writes one record. `payload` must be JSON text.
    pub fn write(&mut self, topic: &str, timestamp_ns: u64, payload: &str) -> Result<(), LogError> {
        if timestamp_ns < self.last_ts {
            return Err(LogError::Backwards { topic: topic.into(), timestamp_ns, last: self.last_ts });
        }
        let payload = RawValue::from_string(payload.to_string())
            .map_err(|e| LogError::Payload { topic: topic.into(), message: e.to_string() })?;
        let seq = self.seq.entry(topic.to_string()).or_insert(0);
        let record = LogRecord { seq: *seq, timestamp_ns, topic: topic.to_string(), payload };
        *seq += 1;
        serde_json::to_writer(&mut self.out, &record).map_err(io::Error::from)?;
        self.out.write_all(b"\n")?;
        self.last_ts = timestamp_ns;
        self.records += 1;
        Ok(())
    }

    pub fn records(&self) -> u64 {
        self.records
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Records read from a log plus the number of lines that failed to parse.
#[derive(Debug, Default)]
pub struct LogContents {
    pub records: Vec<LogRecord>,
    pub warnings: usize,
}

/// Streams records from a log; corrupt lines are counted and skipped.
pub fn for_each_record(
    reader: impl BufRead,
    mut f: impl FnMut(LogRecord) -> io::Result<()>,
) -> io::Result<usize> {
    let mut warnings = 0;
    for (n, line) in reader.split(b'\n').enumerate() {
        let line = line?;
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        match serde_json::from_slice::<LogRecord>(&line) {
            Ok(r) => f(r)?,
            Err(e) => {
                warn!("log line {}: {e}", n + 1);
                warnings += 1;
            }
        }
    }
    Ok(warnings)
}

pub fn read_log(path: impl AsRef<Path>) -> io::Result<LogContents> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    let warnings = for_each_record(reader, |r| {
        records.push(r);
        Ok(())
    })?;
    Ok(LogContents { records, warnings })
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("replay speed must be positive, got {0}")]
    BadSpeed(f64),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReplaySummary {
    pub records: usize,
    pub warnings: usize,
}

/// Republishes a log through `publish` in file order.
///
/// With a finite `speed`, record `i` is released `(ts_i - ts_0) / speed`
/// after the start; `f64::INFINITY` replays as fast as possible.
pub fn replay(
    path: impl AsRef<Path>,
    speed: f64,
    mut publish: impl FnMut(&LogRecord) -> io::Result<()>,
) -> Result<ReplaySummary, ReplayError> {
    if !(speed > 0.0) {
        return Err(ReplayError::BadSpeed(speed));
    }
    let reader = BufReader::new(File::open(path)?);
    let start = Instant::now();
    let mut first: Option<u64> = None;
    let mut records = 0;
    let warnings = for_each_record(reader, |r| {
        let t0 = *first.get_or_insert(r.timestamp_ns);
        if speed.is_finite() {
            let due = Duration::from_secs_f64(r.timestamp_ns.saturating_sub(t0) as f64 * 1e-9 / speed);
            if let Some(wait) = due.checked_sub(start.elapsed()) {
                thread::sleep(wait);
            }
        }
        records += 1;
        publish(&r)
    })?;
    Ok(ReplaySummary { records, warnings })
}

//! Vehicle record stream and per-road speed aggregates.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{DocumentHeader, IoError, SchemaKind};
use crate::engine::{Recorder, StepFrame};
use crate::network::LaneId;

/// One vehicle at the end of one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleRecord {
    pub t: f64,
    pub id: u64,
    pub lane: LaneId,
    pub s: f64,
    pub v: f64,
    pub angle_deg: f64,
}

/// Line-delimited writer: a header line, then one record per line, ordered
/// by `(t, id)`.
pub struct RecordWriter<W: Write> {
    inner: io::BufWriter<W>,
    records: u64,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(inner: W) -> io::Result<Self> {
        let mut inner = io::BufWriter::new(inner);
        serde_json::to_writer(&mut inner, &DocumentHeader::new(SchemaKind::VehicleRecords))?;
        inner.write_all(b"\n")?;
        Ok(Self { inner, records: 0 })
    }

    pub fn write_record(&mut self, record: &VehicleRecord) -> io::Result<()> {
        serde_json::to_writer(&mut self.inner, record)?;
        self.inner.write_all(b"\n")?;
        self.records += 1;
        Ok(())
    }

    pub fn record_count(&self) -> u64 {
        self.records
    }

    pub fn into_inner(self) -> io::Result<W> {
        self.inner.into_inner().map_err(|e| e.into_error())
    }
}

impl<W: Write> Recorder for RecordWriter<W> {
    fn record_step(&mut self, frame: &StepFrame<'_>) -> io::Result<()> {
        for r in frame.vehicles {
            self.write_record(r)?;
        }
        Ok(())
    }

    fn finish(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordLoad {
    pub records: Vec<VehicleRecord>,
    /// The stream ended inside a record; everything before it is returned.
    pub truncated: bool,
}

/// Reads a record stream, tolerating truncation of the final record.
pub fn read_records<R: BufRead>(mut reader: R) -> Result<RecordLoad, IoError> {
    let mut line = String::new();
    let mut read_line = |buf: &mut String| -> Result<usize, IoError> {
        buf.clear();
        reader.read_line(buf).map_err(|source| IoError::File {
            path: "<record stream>".into(),
            source,
        })
    };
    if read_line(&mut line)? == 0 {
        return Err(IoError::Schema {
            entity: "line 1".into(),
            message: "missing header".into(),
        });
    }
    let header: DocumentHeader = serde_json::from_str(line.trim_end())?;
    header.check(SchemaKind::VehicleRecords)?;

    let mut records: Vec<VehicleRecord> = Vec::new();
    let mut line_no = 1;
    loop {
        if read_line(&mut line)? == 0 {
            return Ok(RecordLoad { records, truncated: false });
        }
        line_no += 1;
        let complete = line.ends_with('\n');
        match serde_json::from_str::<VehicleRecord>(line.trim_end()) {
            Ok(r) => {
                if let Some(prev) = records.last() {
                    if (prev.t, prev.id) >= (r.t, r.id) {
                        return Err(IoError::Schema {
                            entity: format!("line {line_no}"),
                            message: "records must be ordered by (t, id)".into(),
                        });
                    }
                }
                records.push(r);
            }
            Err(_) if !complete => return Ok(RecordLoad { records, truncated: true }),
            Err(e) => {
                return Err(IoError::Schema {
                    entity: format!("line {line_no}"),
                    message: e.to_string(),
                })
            }
        }
    }
}

/// Mean speed of one road over one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadWindow {
    pub road: String,
    pub window_start: f64,
    pub window_end: f64,
    pub mean_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadSpeedFile {
    pub dt: f64,
    pub start_time: f64,
    pub end_time: f64,
    pub window: f64,
    /// Sorted by road id, then window start.
    pub rows: Vec<RoadWindow>,
}

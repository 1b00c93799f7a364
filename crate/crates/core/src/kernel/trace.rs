use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One processed event, as written to `events.csv`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub time_us: u64,
    pub seq: u64,
    pub kind: String,
    pub source: String,
    pub target: String,
    pub detail: String,
}

/// Write records with the header `time_us,seq,kind,source,target,detail`.
pub fn write_trace<W: Write>(records: &[TraceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| crate::Error::io("events.csv", e))?;
    Ok(())
}

pub fn read_trace<R: std::io::Read>(input: R) -> Result<Vec<TraceRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

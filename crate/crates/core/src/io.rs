//! Line-delimited JSON artifacts: one serde record per line.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{OrientedBox, Pose2};
use crate::trajectory::{Trace, TraceEntry, TraceMeta, TraceSample, TraceSet};

pub fn write_jsonl<'a, W, T>(mut w: W, items: impl IntoIterator<Item = &'a T>) -> Result<()>
where
    W: Write,
    T: Serialize + 'a,
{
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| Error::Io(e.into()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads every non-blank line; errors carry the 1-based line number.
pub fn read_jsonl<R: BufRead, T: DeserializeOwned>(r: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: k + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// A trace on one line. Samples are `[t, x, y, theta, l, w]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<TraceMeta>,
    pub samples: Vec<[f64; 6]>,
}

impl From<&TraceEntry> for TraceRecord {
    fn from(e: &TraceEntry) -> Self {
        Self {
            id: e.trace.id().to_owned(),
            meta: e.meta,
            samples: e
                .trace
                .samples()
                .iter()
                .map(|s| {
                    let b = &s.bbox;
                    [s.t, b.pose.x, b.pose.y, b.pose.theta, b.length, b.width]
                })
                .collect(),
        }
    }
}

impl TryFrom<TraceRecord> for TraceEntry {
    type Error = Error;

    fn try_from(r: TraceRecord) -> Result<Self> {
        let samples = r
            .samples
            .iter()
            .map(|&[t, x, y, theta, l, w]| {
                Ok(TraceSample {
                    t,
                    bbox: OrientedBox::new(Pose2::new(x, y, theta), l, w)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TraceEntry {
            trace: Trace::new(r.id, samples)?,
            meta: r.meta,
        })
    }
}

pub fn write_traces<W: Write>(w: W, traces: &TraceSet) -> Result<()> {
    let records: Vec<TraceRecord> = traces.iter().map(TraceRecord::from).collect();
    write_jsonl(w, &records)
}

pub fn read_traces<R: BufRead>(r: R) -> Result<TraceSet> {
    let mut set = TraceSet::new();
    for rec in read_jsonl::<_, TraceRecord>(r)? {
        let e = TraceEntry::try_from(rec)?;
        set.insert(e.trace, e.meta)?;
    }
    Ok(set)
}

//! Optional per-step log of a mapping run, written as line-delimited JSON.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One pop of the fragment stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub procedure: usize,
    /// Outer iteration, counted from 0.
    pub outer: u64,
    /// Pop index within the outer iteration, counted from 0.
    pub step: usize,
    pub members: Vec<usize>,
    pub active: Vec<usize>,
    pub delta_cpu: f64,
    pub delta_mem: f64,
    pub delta_out: f64,
    /// Every server passing the selection rules, best fit first.
    pub candidates: Vec<usize>,
    pub chosen: Option<usize>,
    pub cut: Option<TraceCut>,
}

/// Partition applied when no server could take the whole fragment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceCut {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    records: Vec<TraceRecord>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub(crate) fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")
                .map_err(|e| crate::error::Error::io("<trace>", e))?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }
}

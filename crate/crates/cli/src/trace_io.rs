//! Trace files.
//!
//! The default `jsonl` layout is one header object (config, objective,
//! termination, record count) followed by one iteration record per line.
//! `json` writes the whole trace as a single document. Floats are written
//! as shortest round-trip decimals, so reading a file back reproduces every
//! value bit for bit.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ddsm_core::{AlgoConfig, IterationRecord, Termination, Trace};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    #[default]
    Jsonl,
    Json,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    objective: String,
    config: AlgoConfig,
    termination: Termination,
    records: usize,
}

/// Serializes `trace` into `out`.
pub fn write_trace_to<W: Write>(
    trace: &Trace,
    format: TraceFormat,
    mut out: W,
) -> std::io::Result<()> {
    match format {
        TraceFormat::Json => {
            serde_json::to_writer(&mut out, trace)?;
            out.write_all(b"\n")?;
        }
        TraceFormat::Jsonl => {
            let header = Header {
                objective: trace.objective_name.clone(),
                config: trace.config.clone(),
                termination: trace.termination,
                records: trace.records.len(),
            };
            serde_json::to_writer(&mut out, &header)?;
            out.write_all(b"\n")?;
            for r in &trace.records {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
        }
    }
    out.flush()
}

pub fn write_trace(trace: &Trace, format: TraceFormat, path: &Path) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_trace_to(trace, format, std::io::BufWriter::new(file)).map_err(|e| CliError::io(path, e))
}

/// Parses a trace in either format; the layout is detected from the first line.
pub fn read_trace_from<R: BufRead>(input: R) -> Result<Trace, String> {
    let mut lines = input.lines();
    let first = match lines.next() {
        Some(line) => line.map_err(|e| e.to_string())?,
        None => return Err("empty file".into()),
    };
    if let Ok(trace) = serde_json::from_str::<Trace>(&first) {
        if lines.any(|l| l.map_or(true, |l| !l.trim().is_empty())) {
            return Err("trailing data after JSON trace".into());
        }
        return Ok(trace);
    }
    let header: Header = serde_json::from_str(&first).map_err(|e| format!("line 1: {e}"))?;
    let mut records = Vec::with_capacity(header.records);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let record: IterationRecord =
            serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 2))?;
        records.push(record);
    }
    if records.len() != header.records {
        return Err(format!(
            "header announces {} records, found {}",
            header.records,
            records.len()
        ));
    }
    Ok(Trace {
        config: header.config,
        objective_name: header.objective,
        records,
        termination: header.termination,
    })
}

pub fn read_trace(path: &Path) -> Result<Trace, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_trace_from(BufReader::new(file)).map_err(|message| CliError::Trace {
        path: path.to_path_buf(),
        message,
    })
}

//! Trace persistence and plot-data export.
//!
//! Trace CSV: one row per (sample, agent), header
//! `t,agent,x,y[,z],vx,vy[,vz],x_ht,y_ht[,z_ht]`, every float written with 17
//! significant digits so a write/read cycle is lossless.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{AgentState, DynamicsError, RawSample, Trace};
use crate::geometry::Point;
use crate::par::Exec;
use crate::safety::deformation_eigenvalues;

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed trace CSV: {0}")]
    Format(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

fn axes(dim: usize) -> &'static [&'static str] {
    &["x", "y", "z"][..dim]
}

pub fn header(dim: usize) -> Vec<String> {
    let mut h = vec!["t".to_string(), "agent".to_string()];
    h.extend(axes(dim).iter().map(|a| a.to_string()));
    h.extend(axes(dim).iter().map(|a| format!("v{a}")));
    h.extend(axes(dim).iter().map(|a| format!("{a}_ht")));
    h
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trace_csv<W: Write>(trace: &Trace, out: W) -> Result<(), TraceIoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(trace.dim()))?;
    for s in trace.samples() {
        for (i, (state, desired)) in s.states.iter().zip(&s.desired).enumerate() {
            let mut row = vec![num(s.t), (i + 1).to_string()];
            row.extend(state.position.coords().iter().map(|&x| num(x)));
            row.extend(state.velocity.coords().iter().map(|&x| num(x)));
            row.extend(desired.coords().iter().map(|&x| num(x)));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|source| TraceIoError::Io { path: "<trace>".into(), source })?;
    Ok(())
}

/// Reads a trace CSV and rebuilds the derived channels. The dimension is
/// taken from the header; `leaders` are 1-based ids.
pub fn read_trace_csv<R: Read>(input: R, leaders: &[usize], exec: Exec) -> Result<Trace, TraceIoError> {
    let mut r = csv::Reader::from_reader(input);
    let head: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let dim = match head.len() {
        8 => 2,
        11 => 3,
        n => return Err(TraceIoError::Format(format!("{n} columns; expected 8 (2-D) or 11 (3-D)"))),
    };
    if head != header(dim) {
        return Err(TraceIoError::Format(format!("unexpected header {}", head.join(","))));
    }

    let mut raw: Vec<RawSample> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = line + 2;
        let field = |j: usize| -> Result<f64, TraceIoError> {
            rec[j]
                .trim()
                .parse::<f64>()
                .map_err(|_| TraceIoError::Format(format!("line {row}: bad number '{}'", &rec[j])))
        };
        let t = field(0)?;
        let agent: usize = rec[1]
            .trim()
            .parse()
            .map_err(|_| TraceIoError::Format(format!("line {row}: bad agent id '{}'", &rec[1])))?;
        let vec_at = |start: usize| -> Result<Point, TraceIoError> { Ok(Point::new((start..start + dim).map(field).collect::<Result<_, _>>()?)) };
        let state = AgentState { position: vec_at(2)?, velocity: vec_at(2 + dim)? };
        let desired = vec_at(2 + 2 * dim)?;

        let starts_sample = agent == 1;
        if starts_sample {
            if let Some(prev) = raw.last() {
                if t <= prev.t {
                    return Err(TraceIoError::Format(format!("line {row}: time {t} does not increase")));
                }
            }
            raw.push(RawSample { t, states: vec![state], desired: vec![desired] });
        } else {
            let Some(cur) = raw.last_mut() else {
                return Err(TraceIoError::Format(format!("line {row}: first row must be agent 1")));
            };
            if cur.t != t || agent != cur.states.len() + 1 {
                return Err(TraceIoError::Format(format!("line {row}: expected agent {} at t = {}", cur.states.len() + 1, cur.t)));
            }
            cur.states.push(state);
            cur.desired.push(desired);
        }
    }
    if let Some(first) = raw.first() {
        let n = first.states.len();
        if let Some(bad) = raw.iter().find(|s| s.states.len() != n) {
            return Err(TraceIoError::Format(format!("sample at t = {} has {} agents, expected {n}", bad.t, bad.states.len())));
        }
    }
    Ok(Trace::assemble(dim, leaders, raw, exec)?)
}

pub fn write_trace_file(trace: &Trace, path: impl AsRef<Path>) -> Result<(), TraceIoError> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|source| TraceIoError::Io { path: path.display().to_string(), source })?;
    write_trace_csv(trace, BufWriter::new(f))
}

pub fn read_trace_file(path: impl AsRef<Path>, leaders: &[usize], exec: Exec) -> Result<Trace, TraceIoError> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|source| TraceIoError::Io { path: path.display().to_string(), source })?;
    read_trace_csv(BufReader::new(f), leaders, exec)
}

/// Run metadata written next to a simulated trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub t0: f64,
    pub h: f64,
    pub tf: f64,
    pub samples: usize,
    pub agents: usize,
    pub dim: usize,
}

impl TraceMetadata {
    pub fn of(trace: &Trace, h: f64, scenario: Option<String>) -> Self {
        TraceMetadata {
            scenario,
            t0: trace.samples().first().map_or(0.0, |s| s.t),
            h,
            tf: trace.samples().last().map_or(0.0, |s| s.t),
            samples: trace.len(),
            agents: trace.n_agents(),
            dim: trace.dim(),
        }
    }
}

/// `t,agent,deviation` rows: ‖r_i − r_i^HT‖ over time.
pub fn deviation_csv(trace: &Trace) -> String {
    let mut out = String::from("t,agent,deviation\n");
    for s in trace.samples() {
        for i in 0..s.states.len() {
            out.push_str(&format!("{},{},{}\n", num(s.t), i + 1, num(s.deviation(i))));
        }
    }
    out
}

/// `t,lambda_1,..,lambda_d` rows: deformation eigenvalues over time, ascending.
pub fn eigenvalue_csv(trace: &Trace) -> String {
    let mut out = String::from("t");
    for k in 1..=trace.dim() {
        out.push_str(&format!(",lambda_{k}"));
    }
    out.push('\n');
    for s in trace.samples() {
        out.push_str(&num(s.t));
        match deformation_eigenvalues(s.transform.jacobian()) {
            Ok(ev) => ev.iter().for_each(|e| out.push_str(&format!(",{}", num(*e)))),
            Err(_) => (0..trace.dim()).for_each(|_| out.push_str(",nan")),
        }
        out.push('\n');
    }
    out
}

//! CSV and JSON serialization of traces, fits, maps and material tables.
//!
//! Every file starts with an echo of the inputs: CSV files carry `# key: value`
//! comment lines before the header, JSON reports embed the configuration.
//! Numbers are written in the shortest form that parses back to the same `f64`.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::EnvelopeFit;
use crate::disorder::ProbabilityTrace;
use crate::error::{Error, Result};
use crate::sweep::{MaterialRow, SweepCell};

use super::config::SimulateConfig;

pub const SCHEMA_VERSION: &str = "1";
pub const TRACE_HEADER: &str = "t,t_seconds,p,p_stderr";
pub const SWEEP_HEADER: &str = "sigma_e,sigma_j,j0_t2_star,t2_star_seconds,q,alpha,status,quadrature_converged";
pub const MATERIALS_HEADER: &str = "material,sigma_j_ev,initial_condition,t2_star_seconds,j0_t2_star,status,t_max";

/// Shortest round-trip decimal; exponent form outside `[1e-4, 1e16)`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if a == 0.0 || (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn parse_number(field: &'static str, s: &str) -> Result<f64> {
    match s {
        "nan" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s
            .parse()
            .map_err(|_| Error::invalid(field, format!("cannot parse `{s}` as a number"))),
    }
}

fn echo_header<C: Serialize>(out: &mut String, command: &str, config: &C) -> Result<()> {
    let json = serde_json::to_string(config).map_err(|e| Error::invalid("config", e.to_string()))?;
    writeln!(out, "# schema_version: {SCHEMA_VERSION}").unwrap();
    writeln!(out, "# command: {command}").unwrap();
    writeln!(out, "# config: {json}").unwrap();
    Ok(())
}

/// Trace CSV with the resolved `config` echoed in the preamble.
pub fn trace_csv(config: &SimulateConfig, trace: &ProbabilityTrace, time_unit_s: Option<f64>) -> Result<String> {
    let mut out = String::new();
    echo_header(&mut out, "simulate", config)?;
    if let Some(q) = &trace.meta.quadrature {
        let json = serde_json::to_string(q).map_err(|e| Error::invalid("quadrature", e.to_string()))?;
        writeln!(out, "# quadrature: {json}").unwrap();
        if !q.converged {
            writeln!(out, "# warning: quadrature not converged under refinement").unwrap();
        }
    }
    writeln!(out, "{TRACE_HEADER}").unwrap();
    for (k, (&t, &p)) in trace.times.iter().zip(&trace.values).enumerate() {
        let secs = time_unit_s.map(|u| format_number(t * u)).unwrap_or_default();
        let err = trace
            .std_errors
            .as_ref()
            .map(|e| format_number(e[k]))
            .unwrap_or_default();
        writeln!(out, "{},{},{},{}", format_number(t), secs, format_number(p), err).unwrap();
    }
    Ok(out)
}

/// Trace read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Echoed configuration, when the file came from `simulate`.
    pub config: Option<SimulateConfig>,
}

/// Parses a trace CSV. Only the `t` and `p` columns are required.
pub fn parse_trace_csv(text: &str) -> Result<ParsedTrace> {
    let mut config = None;
    let mut columns: Option<(usize, usize, usize)> = None;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(json) = comment.trim_start().strip_prefix("config:") {
                let c: SimulateConfig = serde_json::from_str(json.trim())
                    .map_err(|e| Error::invalid("trace", format!("echoed config on line {}: {e}", lineno + 1)))?;
                config = Some(c);
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match columns {
            None => {
                let find = |name: &str| fields.iter().position(|f| *f == name);
                let (Some(t), Some(p)) = (find("t"), find("p")) else {
                    return Err(Error::invalid("trace", "header must name columns `t` and `p`"));
                };
                columns = Some((t, p, fields.len()));
            }
            Some((t, p, width)) => {
                if fields.len() != width {
                    return Err(Error::invalid(
                        "trace",
                        format!("line {} has {} fields, expected {width}", lineno + 1, fields.len()),
                    ));
                }
                times.push(parse_number("t", fields[t])?);
                values.push(parse_number("p", fields[p])?);
            }
        }
    }
    if columns.is_none() {
        return Err(Error::invalid("trace", "no header line found"));
    }
    Ok(ParsedTrace { times, values, config })
}

fn number_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// JSON fit report. Non-finite numbers become `null`; `status` disambiguates.
pub fn fit_report<C: Serialize>(
    config: &C,
    fit: &EnvelopeFit,
    envelope_points: usize,
    time_unit_s: Option<f64>,
) -> Result<String> {
    let echo = serde_json::to_value(config).map_err(|e| Error::invalid("config", e.to_string()))?;
    let t2_seconds = time_unit_s.map_or(Value::Null, |u| number_or_null(fit.t2_star * u));
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "fit",
        "config": echo,
        "result": {
            "status": fit.status.as_str(),
            "p_infinity": number_or_null(fit.p_infinity),
            "p_start": number_or_null(fit.p_start),
            "t2_star": number_or_null(fit.t2_star),
            "t2_star_seconds": t2_seconds,
            "alpha": number_or_null(fit.alpha),
            "q": number_or_null(fit.quality_factor()),
            "sse": number_or_null(fit.sse),
            "envelope_points": envelope_points,
        }
    });
    let mut s = serde_json::to_string_pretty(&report).map_err(|e| Error::invalid("report", e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn sweep_csv<C: Serialize>(config: &C, cells: &[SweepCell], time_unit_s: Option<f64>) -> Result<String> {
    let mut out = String::new();
    echo_header(&mut out, "sweep", config)?;
    writeln!(out, "{SWEEP_HEADER}").unwrap();
    for c in cells {
        let secs = time_unit_s
            .map(|u| format_number(c.j0_t2_star * u))
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            format_number(c.sigma_e),
            format_number(c.sigma_j),
            format_number(c.j0_t2_star),
            secs,
            format_number(c.q),
            format_number(c.alpha),
            c.status.as_str(),
            c.quadrature_converged
        )
        .unwrap();
    }
    Ok(out)
}

pub fn materials_csv<C: Serialize>(config: &C, rows: &[MaterialRow]) -> Result<String> {
    let mut out = String::new();
    echo_header(&mut out, "materials", config)?;
    writeln!(out, "{MATERIALS_HEADER}").unwrap();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.material,
            format_number(r.sigma_j_ev),
            r.initial.as_str(),
            format_number(r.t2_star_seconds),
            format_number(r.j0_t2_star),
            r.status.as_str(),
            format_number(r.t_max)
        )
        .unwrap();
    }
    Ok(out)
}

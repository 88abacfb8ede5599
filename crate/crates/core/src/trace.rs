//! CSV emission for traces and particle snapshots.
//!
//! Trace columns: `k`, `truth_<c>` for every state component, `meas_<c>` for
//! every observed component, `est_<c>` for every state component, then `ess`,
//! `resampled`, `degenerate`. Floats carry 9 significant digits (C `%.9g`),
//! booleans are `0`/`1`, and the `k = 0` measurement cells are empty.

use std::io::{self, Write};

use crate::sim::{ParticleSnapshot, Trace};

/// Formats like C's `%.9g`. Negative zero prints as `0`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    const PRECISION: i32 = 9;
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= PRECISION {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PRECISION - 1 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn trace_header(state_names: &[&str], obs_names: &[&str]) -> String {
    let mut cols = vec!["k".to_string()];
    cols.extend(state_names.iter().map(|c| format!("truth_{c}")));
    cols.extend(obs_names.iter().map(|c| format!("meas_{c}")));
    cols.extend(state_names.iter().map(|c| format!("est_{c}")));
    cols.extend(["ess", "resampled", "degenerate"].map(String::from));
    cols.join(",")
}

pub fn write_trace_csv<W: Write>(
    out: &mut W,
    trace: &Trace,
    state_names: &[&str],
    obs_names: &[&str],
) -> io::Result<()> {
    writeln!(out, "{}", trace_header(state_names, obs_names))?;
    let mut row: Vec<String> = Vec::new();
    for r in &trace.records {
        row.clear();
        row.push(r.k.to_string());
        row.extend(r.truth.iter().map(|v| format_float(*v)));
        match &r.measurement {
            Some(z) => row.extend(z.iter().map(|v| format_float(*v))),
            None => row.extend(obs_names.iter().map(|_| String::new())),
        }
        row.extend(r.estimate.iter().map(|v| format_float(*v)));
        row.push(format_float(r.ess));
        row.push(u8::from(r.resampled).to_string());
        row.push(u8::from(r.degenerate).to_string());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Columns `k,i,weight,<components…>`, one row per particle per dumped step.
pub fn write_particles_csv<W: Write>(
    out: &mut W,
    snapshots: &[ParticleSnapshot],
    state_names: &[&str],
) -> io::Result<()> {
    let mut header = vec!["k".to_string(), "i".to_string(), "weight".to_string()];
    header.extend(state_names.iter().map(|c| c.to_string()));
    writeln!(out, "{}", header.join(","))?;
    for snap in snapshots {
        for (i, (p, w)) in snap.particles.iter().zip(&snap.weights).enumerate() {
            let mut row = vec![snap.k.to_string(), i.to_string(), format_float(*w)];
            row.extend(p.iter().map(|v| format_float(*v)));
            writeln!(out, "{}", row.join(","))?;
        }
    }
    Ok(())
}

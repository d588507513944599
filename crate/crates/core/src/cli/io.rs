//! Flat-file formats: trace CSV, profile CSV, summary JSON, sweep and
//! spectrum tables. Floats are written with 16 significant digits and LF
//! line endings so identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::iterate::TraceRow;
use crate::models::{GridInfo, Model};

pub const TRACE_HEADER: &str = "iter,res,diff,sfe,seconds";

/// A float with 16 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.15e}")
    } else {
        format!("{x}")
    }
}

/// A float with 17 significant digits, enough to round-trip every `f64`;
/// used for profiles, which are read back as solver input.
pub fn fmt_f64_exact(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.iter,
            fmt_f64(r.res),
            fmt_f64(r.diff),
            fmt_f64(r.sfe),
            fmt_f64(r.seconds)
        )
        .unwrap();
    }
    out
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Io(format!("line {line}: `{field}` is not a number")))
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        _ => return Err(Error::Io(format!("trace must start with `{TRACE_HEADER}`"))),
    }
    lines
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 5 {
                return Err(Error::Io(format!("line {}: expected 5 fields", i + 1)));
            }
            Ok(TraceRow {
                iter: f[0]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Io(format!("line {}: bad iteration index", i + 1)))?,
                res: parse_f64(f[1], i + 1)?,
                diff: parse_f64(f[2], i + 1)?,
                sfe: parse_f64(f[3], i + 1)?,
                seconds: parse_f64(f[4], i + 1)?,
            })
        })
        .collect()
}

/// Profile CSV: node coordinates followed by one column per component,
/// written with round-trip precision.
/// 2D profiles list nodes row-major (x outer, z inner) after a header line
/// naming the dimensions.
pub fn profile_csv(model: &dyn Model, state: &[f64]) -> Result<String> {
    if state.len() != model.dim() {
        return Err(Error::LengthMismatch {
            expected: model.dim(),
            got: state.len(),
        });
    }
    let comps = model.components();
    let names: Vec<String> = (0..comps).map(|c| format!("u{c}")).collect();
    let mut out = String::new();
    match model.grid() {
        GridInfo::OneD(g) => {
            writeln!(out, "x,{}", names.join(",")).unwrap();
            let m = g.points();
            for (j, x) in g.nodes().iter().enumerate() {
                let vals: Vec<String> = (0..comps).map(|c| fmt_f64_exact(state[c * m + j])).collect();
                writeln!(out, "{},{}", fmt_f64_exact(*x), vals.join(",")).unwrap();
            }
        }
        GridInfo::TwoD(g) => {
            writeln!(out, "# nx={},nz={}", g.x.points(), g.z.points()).unwrap();
            writeln!(out, "x,z,{}", names.join(",")).unwrap();
            let xs = g.x.nodes();
            let zs = g.z.nodes();
            let m = g.len();
            for (i, x) in xs.iter().enumerate() {
                for (j, z) in zs.iter().enumerate() {
                    let k = g.index(i, j);
                    let vals: Vec<String> = (0..comps).map(|c| fmt_f64_exact(state[c * m + k])).collect();
                    writeln!(out, "{},{},{}", fmt_f64_exact(*x), fmt_f64_exact(*z), vals.join(",")).unwrap();
                }
            }
        }
    }
    Ok(out)
}

/// Inverse of [`profile_csv`]; the node layout must match `model`.
pub fn parse_profile_csv(model: &dyn Model, text: &str) -> Result<Vec<f64>> {
    let coords = match model.grid() {
        GridInfo::OneD(_) => 1,
        GridInfo::TwoD(_) => 2,
    };
    let comps = model.components();
    let nodes = model.grid().nodes();
    let mut state = vec![0.0; model.dim()];
    let mut count = 0;
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            header_seen = true;
            let fields = line.split(',').count();
            if fields != coords + comps {
                return Err(Error::DimensionMismatch(format!(
                    "profile has {} columns, model needs {}",
                    fields,
                    coords + comps
                )));
            }
            continue;
        }
        if count >= nodes {
            return Err(Error::DimensionMismatch(format!("profile has more than {nodes} rows")));
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != coords + comps {
            return Err(Error::Io(format!("line {}: expected {} fields", i + 1, coords + comps)));
        }
        for c in 0..comps {
            state[c * nodes + count] = parse_f64(f[coords + c], i + 1)?;
        }
        count += 1;
    }
    if count != nodes {
        return Err(Error::DimensionMismatch(format!(
            "profile has {count} rows, model has {nodes} nodes"
        )));
    }
    Ok(state)
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, contents)?;
    Ok(())
}

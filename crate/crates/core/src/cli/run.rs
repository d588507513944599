//! Experiment runner: single solves, sweeps and spectral diagnostics.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{AccelConfig, ExperimentConfig};
use super::io;
use crate::error::{Error, Result};
use crate::iterate::{self, IterationTrace, PetviashviliMap, Termination};
use crate::models::{initial_guess, Model};
use crate::spectrum::{self, EigenOptions, SpectrumReport};

/// The fixed summary record written as JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub model: String,
    pub method: String,
    pub width: usize,
    pub iterations: usize,
    pub final_res: f64,
    pub reason: Termination,
    pub seconds: f64,
}

impl RunSummary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

/// A completed solve with its trace.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: RunSummary,
    pub trace: IterationTrace,
}

impl Outcome {
    pub fn final_diff(&self) -> f64 {
        self.trace.rows.last().map_or(f64::NAN, |r| r.diff)
    }

    pub fn final_sfe(&self) -> f64 {
        self.trace.rows.last().map_or(f64::NAN, |r| r.sfe)
    }
}

fn build_map<'a>(cfg: &ExperimentConfig, model: &'a dyn Model) -> Result<PetviashviliMap<'a>> {
    let map = PetviashviliMap::new(model, cfg.solver.stepper);
    match &cfg.solver.exponents {
        Some(e) => map.with_exponents(e.clone()),
        None => Ok(map),
    }
}

/// Solve `model` with the accelerator `accel`, using the rest of `cfg`.
pub fn solve_with(cfg: &ExperimentConfig, model: &dyn Model, accel: &AccelConfig) -> Result<Outcome> {
    let map = build_map(cfg, model)?;
    let u0 = initial_guess(&cfg.guess, model)?;
    let trace = iterate::run(&u0, &map, &cfg.stopping, &accel.to_acceleration(cfg.seed))?;
    let (method, width) = accel.label();
    let summary = RunSummary {
        model: cfg.model_name().to_string(),
        method,
        width,
        iterations: trace.iterations(),
        final_res: trace.final_res(),
        reason: trace.reason,
        seconds: trace.rows.last().map_or(0.0, |r| r.seconds),
    };
    Ok(Outcome { summary, trace })
}

/// Build the model of `cfg` and solve it.
pub fn solve(cfg: &ExperimentConfig) -> Result<Outcome> {
    let model = cfg.build_model()?;
    solve_with(cfg, model.as_ref(), &cfg.accel)
}

fn out_path(dir: &Path, cfg: &ExperimentConfig, name: &str) -> PathBuf {
    dir.join(format!("{}{}", cfg.output.prefix, name))
}

/// Solve and write the trace, profile and summary files.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Outcome, Vec<PathBuf>)> {
    let model = cfg.build_model()?;
    let outcome = solve_with(cfg, model.as_ref(), &cfg.accel)?;
    let mut written = Vec::new();
    if let Some(dir) = cfg.output_dir() {
        let p = out_path(&dir, cfg, "trace.csv");
        io::write(&p, &io::trace_csv(&outcome.trace.rows))?;
        written.push(p);
        if cfg.output.profile {
            let p = out_path(&dir, cfg, "profile.csv");
            io::write(&p, &io::profile_csv(model.as_ref(), &outcome.trace.state)?)?;
            written.push(p);
        }
        let p = out_path(&dir, cfg, "summary.json");
        io::write(&p, &outcome.summary.to_json())?;
        written.push(p);
    }
    Ok((outcome, written))
}

/// One cell of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: String,
    pub width: usize,
    pub iterations: usize,
    pub final_res: f64,
    pub reason: Termination,
    /// Set when the cell failed (breakdown or error) rather than finished.
    pub failure: Option<String>,
    /// Fewest iterations among the converged cells of this method.
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub model: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn best(&self, method: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.method == method && r.best)
    }

    pub fn row(&self, method: &str, width: usize) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.method == method && r.width == width)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,width,iterations,final_res,reason,best,failure\n");
        for r in &self.rows {
            let failure = r.failure.as_deref().unwrap_or("").replace([',', '\n'], ";");
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.method,
                r.width,
                r.iterations,
                io::fmt_f64(r.final_res),
                r.reason.as_str(),
                r.best,
                failure
            ));
        }
        out
    }
}

/// Run every cell of `cfg.sweep` on one shared model; cell failures are
/// recorded in the table instead of aborting the sweep.
pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::config("sweep", "missing [sweep] section"))?;
    spec.validate()?;
    let model = cfg.build_model()?;
    let mut rows = Vec::new();
    for cell in spec.cells() {
        let (method, width) = cell.label();
        let row = match solve_with(cfg, model.as_ref(), &cell) {
            Ok(o) => {
                let failure = match o.trace.reason {
                    Termination::NumericalBreakdown => Some(if o.trace.ill_conditioned {
                        "ill-conditioned".to_string()
                    } else {
                        o.trace.message.clone().unwrap_or_else(|| "breakdown".into())
                    }),
                    _ => None,
                };
                SweepRow {
                    method,
                    width,
                    iterations: o.summary.iterations,
                    final_res: o.summary.final_res,
                    reason: o.summary.reason,
                    failure,
                    best: false,
                }
            }
            Err(e) => SweepRow {
                method,
                width,
                iterations: 0,
                final_res: f64::NAN,
                reason: Termination::NumericalBreakdown,
                failure: Some(e.to_string()),
                best: false,
            },
        };
        rows.push(row);
    }
    let methods: Vec<String> = {
        let mut m: Vec<String> = rows.iter().map(|r| r.method.clone()).collect();
        m.dedup();
        m
    };
    for m in methods {
        let best = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.method == m && r.reason == Termination::Converged)
            .min_by_key(|(_, r)| r.iterations)
            .map(|(i, _)| i);
        if let Some(i) = best {
            rows[i].best = true;
        }
    }
    let table = SweepTable {
        model: cfg.model_name().to_string(),
        rows,
    };
    if let Some(dir) = cfg.output_dir() {
        io::write(&out_path(&dir, cfg, "sweep.csv"), &table.to_csv())?;
        let mut json = serde_json::to_string_pretty(&table).expect("table serializes");
        json.push('\n');
        io::write(&out_path(&dir, cfg, "sweep.json"), &json)?;
    }
    Ok(table)
}

/// Leading eigenvalues of `S` and of `F'` at one profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnoseReport {
    pub model: String,
    pub classical: SpectrumReport,
    pub stabilized: SpectrumReport,
}

impl DiagnoseReport {
    /// Side-by-side table: index, then `S` and `F'` eigenvalues.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,s_re,s_im,f_re,f_im\n");
        let n = self.classical.eigenvalues.len().max(self.stabilized.eigenvalues.len());
        let cell = |v: Option<&num_complex::Complex64>| match v {
            Some(z) => format!("{},{}", io::fmt_f64(z.re), io::fmt_f64(z.im)),
            None => ",".to_string(),
        };
        for k in 0..n {
            out.push_str(&format!(
                "{},{},{}\n",
                k,
                cell(self.classical.eigenvalues.get(k)),
                cell(self.stabilized.eigenvalues.get(k))
            ));
        }
        out
    }
}

/// Spectra of the linearized maps at `state`.
pub fn diagnose_state(cfg: &ExperimentConfig, model: &dyn Model, state: &[f64]) -> Result<DiagnoseReport> {
    if state.len() != model.dim() {
        return Err(Error::LengthMismatch {
            expected: model.dim(),
            got: state.len(),
        });
    }
    let map = build_map(cfg, model)?;
    let opts = EigenOptions {
        count: cfg.diagnose.count,
        seed: cfg.seed,
        ..Default::default()
    };
    Ok(DiagnoseReport {
        model: cfg.model_name().to_string(),
        classical: spectrum::classical_spectrum(model, state, &opts)?,
        stabilized: spectrum::petviashvili_spectrum(&map, state, &opts)?,
    })
}

/// Read a profile file and report both spectra; writes `spectrum.csv` and
/// `spectrum.json` when an output directory is configured.
pub fn diagnose(cfg: &ExperimentConfig, profile: &Path) -> Result<DiagnoseReport> {
    let model = cfg.build_model()?;
    let state = io::parse_profile_csv(model.as_ref(), &std::fs::read_to_string(profile)?)?;
    let report = diagnose_state(cfg, model.as_ref(), &state)?;
    if let Some(dir) = cfg.output_dir() {
        io::write(&out_path(&dir, cfg, "spectrum.csv"), &report.to_csv())?;
        let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
        json.push('\n');
        io::write(&out_path(&dir, cfg, "spectrum.json"), &json)?;
    }
    Ok(report)
}

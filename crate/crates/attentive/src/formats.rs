//! Result files: Pareto-front and progress CSVs, the plot script, reward
//! estimates and MAPE event logs.
//!
//! Floats are written in shortest round-trip form, so reading a CSV back
//! recovers the exact values and repeated runs produce identical bytes.

use std::io::Write;

use attentive_core::design::DesignState;
use attentive_core::mape::{MapeEvent, TransitionFamily};
use attentive_core::synthesis::{FrontMetadata, ProgressRecord};
use attentive_core::{ControllerGenotype, ObjectiveVector, ParetoFront, RewardEstimate};

use crate::error::AppError;

pub const FRONT_COLUMNS: [&str; 5] = ["genotype", "nuisance", "progress", "risk", "duplicate_objectives"];

fn csv_err(e: csv::Error) -> AppError {
    AppError::Internal(format!("csv: {e}"))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, AppError> {
    w.into_inner().map_err(|e| AppError::Internal(format!("csv: {e}")))
}

/// `# key: value` lines preceding the table.
pub fn metadata_lines(kind: &str, meta: &FrontMetadata) -> Vec<(String, String)> {
    let mut lines = vec![
        ("front".to_string(), kind.to_string()),
        ("design_space_size".to_string(), meta.design_space_size.clone()),
        ("evaluations".to_string(), meta.evaluations.to_string()),
        ("solver_epsilon".to_string(), meta.solver.epsilon.to_string()),
    ];
    if let Some(ga) = &meta.ga {
        lines.push(("population_size".into(), ga.population_size.to_string()));
        lines.push(("generations".into(), ga.generations.to_string()));
        lines.push(("crossover_probability".into(), ga.crossover_probability.to_string()));
        lines.push((
            "mutation_probability_per_gene".into(),
            ga.mutation_probability_per_gene
                .map_or_else(|| "1/genotype_length".to_string(), |p| p.to_string()),
        ));
        lines.push(("tournament_size".into(), ga.tournament_size.to_string()));
        lines.push(("seed".into(), ga.seed.to_string()));
    }
    lines
}

pub fn front_csv(kind: &str, front: &ParetoFront) -> Result<Vec<u8>, AppError> {
    let mut out = Vec::new();
    for (k, v) in metadata_lines(kind, &front.metadata) {
        writeln!(out, "# {k}: {v}").expect("write to memory");
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FRONT_COLUMNS).map_err(csv_err)?;
    for ((g, o), dup) in front.entries.iter().zip(front.duplicate_flags()) {
        w.write_record([
            g.to_string(),
            o.nuisance.to_string(),
            o.progress.to_string(),
            o.risk.to_string(),
            dup.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// Rows of a front CSV, ignoring the metadata block.
pub fn read_front_csv(bytes: &[u8]) -> Result<Vec<(ControllerGenotype, ObjectiveVector)>, AppError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes);
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != FRONT_COLUMNS {
        return Err(AppError::Parse(format!("unexpected front columns {headers:?}")));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| AppError::Parse(format!("bad number {s:?}: {e}")));
    let mut rows = Vec::new();
    for record in r.records() {
        let rec = record.map_err(csv_err)?;
        let g: ControllerGenotype = rec[0]
            .parse()
            .map_err(|e: attentive_core::Error| AppError::Parse(e.to_string()))?;
        rows.push((g, ObjectiveVector::new(num(&rec[1])?, num(&rec[2])?, num(&rec[3])?)));
    }
    Ok(rows)
}

pub fn progress_csv(records: &[ProgressRecord]) -> Result<Vec<u8>, AppError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "generation",
        "evaluations",
        "archive_size",
        "hypervolume",
        "min_nuisance",
        "max_progress",
        "min_risk",
    ])
    .map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.generation.to_string(),
            r.evaluations.to_string(),
            r.archive_size.to_string(),
            r.hypervolume.to_string(),
            r.min_nuisance.to_string(),
            r.max_progress.to_string(),
            r.min_risk.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// A matplotlib script drawing the front stored next to it in `csv_name`.
pub fn plot_script(csv_name: &str) -> String {
    format!(
        r##"#!/usr/bin/env python3
"""3-D scatter of a Pareto front written by `attentive`.

usage: python3 plot_front.py [front.csv] [out.png]
"""
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{csv_name}"
out = sys.argv[2] if len(sys.argv) > 2 else path.rsplit(".", 1)[0] + ".png"

with open(path, newline="") as f:
    rows = list(csv.DictReader(line for line in f if not line.startswith("#")))

nuisance = [float(r["nuisance"]) for r in rows]
progress = [float(r["progress"]) for r in rows]
risk = [float(r["risk"]) for r in rows]

fig = plt.figure(figsize=(7, 6))
ax = fig.add_subplot(projection="3d")
points = ax.scatter(nuisance, progress, risk, c=risk, cmap="viridis", depthshade=False)
ax.set_xlabel("nuisance")
ax.set_ylabel("progress")
ax.set_zlabel("risk")
ax.set_title(f"Pareto front ({{len(rows)}} controllers)")
fig.colorbar(points, ax=ax, shrink=0.6, label="risk")
fig.tight_layout()
fig.savefig(out, dpi=150)
print(out)
"##
    )
}

pub fn estimates_csv(names: &[&str], estimates: &[RewardEstimate]) -> Result<Vec<u8>, AppError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["reward", "mean", "std_error", "ci99_low", "ci99_high", "runs"])
        .map_err(csv_err)?;
    for (name, e) in names.iter().zip(estimates) {
        w.write_record([
            name.to_string(),
            e.mean.to_string(),
            e.std_error.to_string(),
            (e.mean - e.confidence_99_half_width).to_string(),
            (e.mean + e.confidence_99_half_width).to_string(),
            e.runs.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

pub fn family_name(f: TransitionFamily) -> &'static str {
    match f {
        TransitionFamily::DriverChange => "driver_change",
        TransitionFamily::Reset => "reset",
        TransitionFamily::Timer => "timer",
        TransitionFamily::ControllerOption => "controller_option",
        TransitionFamily::MrmTimeout => "mrm_timeout",
        TransitionFamily::MrmComplete => "mrm_complete",
    }
}

fn state_name(s: &DesignState) -> String {
    match s {
        DesignState::Regular(c) => c.to_string(),
        DesignState::Mrm => "MRM".to_string(),
    }
}

/// Human-readable log: one line per event, tagged with its MAPE stage.
pub fn mape_log_text(header: &str, events: &[MapeEvent]) -> String {
    let mut out = String::new();
    for line in header.lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    for e in events {
        out.push_str(&format!("{e} ({})\n", e.family.stage()));
    }
    out
}

pub fn mape_log_csv(events: &[MapeEvent]) -> Result<Vec<u8>, AppError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["time", "family", "stage", "from", "to", "message"])
        .map_err(csv_err)?;
    for e in events {
        w.write_record([
            e.time.to_string(),
            family_name(e.family).to_string(),
            e.family.stage().to_string(),
            state_name(&e.from),
            state_name(&e.to),
            e.message().to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

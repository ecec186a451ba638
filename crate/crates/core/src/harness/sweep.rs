//! Cartesian sweeps with a resumable manifest.
//!
//! Each finished cell is appended to `sweep_manifest.csv` before the next
//! one starts. With `resume`, cells already in the manifest under the same
//! cell hash are not rerun. `sweep.csv` is written once all cells are done.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use crate::channel::HFunction;
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, SweepAxes};
use crate::harness::output::{num, Table};
use crate::harness::simulate::{bound_fields, simulate, AGGREGATE_COLUMNS, BOUND_COLUMNS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisValue {
    Levels(u32),
    Eps(f64),
    N2Target(f64),
    H(HFunction),
}

impl AxisValue {
    fn column(&self) -> &'static str {
        match self {
            AxisValue::Levels(_) => "L",
            AxisValue::Eps(_) => "eps",
            AxisValue::N2Target(_) => "n2_target",
            AxisValue::H(_) => "h",
        }
    }

    fn field(&self) -> String {
        match self {
            AxisValue::Levels(l) => l.to_string(),
            AxisValue::Eps(e) | AxisValue::N2Target(e) => num(*e),
            AxisValue::H(HFunction::Constant { q }) => format!("constant:{}", num(*q)),
            AxisValue::H(HFunction::Affine { c0, c1 }) => format!("affine:{}:{}", num(*c0), num(*c1)),
        }
    }

    fn apply(&self, cfg: &mut ExperimentConfig) {
        match *self {
            AxisValue::Levels(l) => cfg.procedure.levels = l,
            AxisValue::Eps(e) => cfg.procedure.eps = e,
            AxisValue::N2Target(n) => {
                cfg.procedure.n2_target = Some(n);
                cfg.procedure.total_bins = None;
            }
            AxisValue::H(h) => cfg.channel.h = Some(h),
        }
    }
}

/// Cells in axis-major order: `levels`, then `eps`, `n2_target`, `h`.
pub fn cells(axes: &SweepAxes) -> Vec<Vec<AxisValue>> {
    let lists: Vec<Vec<AxisValue>> = [
        axes.levels.iter().map(|&v| AxisValue::Levels(v)).collect::<Vec<_>>(),
        axes.eps.iter().map(|&v| AxisValue::Eps(v)).collect(),
        axes.n2_target.iter().map(|&v| AxisValue::N2Target(v)).collect(),
        axes.h.iter().map(|&v| AxisValue::H(v)).collect(),
    ]
    .into_iter()
    .filter(|l| !l.is_empty())
    .collect();
    let mut out = vec![Vec::new()];
    for list in &lists {
        out = out
            .iter()
            .flat_map(|prefix| {
                list.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push(*v);
                    c
                })
            })
            .collect();
    }
    out
}

pub fn cell_config(base: &ExperimentConfig, cell: &[AxisValue]) -> ExperimentConfig {
    let mut cfg = base.clone();
    cfg.sweep = SweepAxes::default();
    for v in cell {
        v.apply(&mut cfg);
    }
    cfg
}

fn header(cell: &[AxisValue]) -> Vec<String> {
    let mut h: Vec<String> = cell.iter().map(|v| v.column().to_string()).collect();
    h.extend(["L", "M"].iter().map(|s| s.to_string()));
    h.extend(AGGREGATE_COLUMNS.iter().map(|s| s.to_string()));
    h.extend(BOUND_COLUMNS.iter().map(|s| s.to_string()));
    h
}

fn run_cell(base: &ExperimentConfig, cell: &[AxisValue]) -> Result<Vec<String>> {
    let cfg = cell_config(base, cell);
    cfg.validate()?;
    let sim = simulate(&cfg)?;
    let mut row: Vec<String> = cell.iter().map(AxisValue::field).collect();
    row.push(sim.config.levels.to_string());
    row.push(sim.config.total_bins.to_string());
    row.extend(sim.aggregate.fields());
    row.extend(bound_fields(&sim.bound));
    Ok(row)
}

const MANIFEST: &str = "sweep_manifest.csv";

fn read_manifest(path: &Path) -> Result<Vec<(usize, String, Vec<String>)>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        // a torn final line from an interrupted write is dropped
        let Ok(rec) = rec else { break };
        let fields: Vec<String> = rec.iter().map(str::to_string).collect();
        if fields.len() < 2 {
            continue;
        }
        let Ok(i) = fields[0].parse() else { continue };
        out.push((i, fields[1].clone(), fields[2..].to_vec()));
    }
    Ok(out)
}

/// Runs every cell and writes `sweep.csv`; returns the table.
pub fn sweep(base: &ExperimentConfig, out_dir: &Path, resume: bool) -> Result<Table> {
    fs::create_dir_all(out_dir)?;
    let cells = cells(&base.sweep);
    let manifest_path = out_dir.join(MANIFEST);
    let hashes: Vec<String> = cells.iter().map(|c| cell_config(base, c).hash()).collect();
    let mut done: Vec<Option<Vec<String>>> = vec![None; cells.len()];
    if resume {
        for (i, hash, row) in read_manifest(&manifest_path)? {
            if i < cells.len() && hashes[i] == hash && row.len() == header(&cells[i]).len() {
                done[i] = Some(row);
            }
        }
    }
    // rewrite the manifest with only the rows being kept
    {
        let mut w = csv::WriterBuilder::new().has_headers(false).flexible(true).from_path(&manifest_path)?;
        for (i, row) in done.iter().enumerate() {
            if let Some(row) = row {
                let mut rec = vec![i.to_string(), hashes[i].clone()];
                rec.extend(row.iter().cloned());
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
    }
    for (i, cell) in cells.iter().enumerate() {
        if done[i].is_some() {
            continue;
        }
        let row = run_cell(base, cell)?;
        let mut line = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        let mut rec = vec![i.to_string(), hashes[i].clone()];
        rec.extend(row.iter().cloned());
        line.write_record(&rec)?;
        let bytes = line.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        let mut f = OpenOptions::new().append(true).open(&manifest_path)?;
        f.write_all(&bytes)?;
        f.sync_data()?;
        done[i] = Some(row);
    }
    let mut table = Table {
        header: header(cells.first().map(Vec::as_slice).unwrap_or(&[])),
        rows: Vec::new(),
    };
    for row in done.into_iter().flatten() {
        table.push(row);
    }
    table.write(&out_dir.join("sweep.csv"), &[("config_hash", base.hash())])?;
    Ok(table)
}

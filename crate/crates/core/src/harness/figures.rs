//! Bound tables and the curve data behind the three resolution figures.
//!
//! Noiseless comparisons are reported per noiseless query (bits), the scale
//! on which the benchmark `N + log L − 2L` is stated; `curve_t2.csv` is in
//! nats.

use std::path::{Path, PathBuf};

use crate::bounds::{noiseless_benchmark, resolution_rate, RootPolicy, QueryBound, ResolutionPoint};
use crate::channel::{Channel, ChannelConstants, HFunction};
use crate::error::Result;
use crate::harness::output::{flag, num, Table};
use crate::procedure::ProcedureConfig;

pub const FIGURE_EPS: f64 = 0.1;
pub const FIGURE_N: f64 = 100.0;

/// The affine channel `h(p) = 0.1 + 0.3p`.
pub fn figure_channel() -> Channel {
    Channel::bsc(HFunction::Affine { c0: 0.1, c1: 0.3 }).expect("valid h")
}

pub fn curve(
    constants: &ChannelConstants,
    n_values: &[f64],
    levels: &[u32],
    eps: f64,
    eps_prime: f64,
) -> Result<Vec<ResolutionPoint>> {
    let mut out = Vec::with_capacity(n_values.len() * levels.len());
    for &l in levels {
        for &n in n_values {
            out.push(resolution_rate(n, l, eps, eps_prime, constants, RootPolicy::BranchStart)?);
        }
    }
    Ok(out)
}

/// Figure 3 data: decay rate against `N` for `L ∈ {2, 4, 8, 16}`.
pub fn figure3(n_values: &[f64]) -> Result<Vec<ResolutionPoint>> {
    let k = ChannelConstants::compute(&figure_channel())?;
    curve(&k, n_values, &[2, 4, 8, 16], FIGURE_EPS, FIGURE_EPS / 2.0)
}

pub fn figure3_grid() -> Vec<f64> {
    (1..=100).map(|i| 50.0 * i as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiselessRow {
    pub n: f64,
    pub levels: u32,
    pub benchmark: f64,
    /// Our bound in bits.
    pub ours: f64,
    pub exact: bool,
}

fn noiseless_rows(points: &[ResolutionPoint]) -> Vec<NoiselessRow> {
    points
        .iter()
        .map(|p| NoiselessRow {
            n: p.n,
            levels: p.levels,
            benchmark: noiseless_benchmark(p.n, p.levels),
            ours: p.neg_log_delta / std::f64::consts::LN_2,
            exact: p.n1.exact,
        })
        .collect()
}

/// Figure 4 data: the noisy bound at `N = 100` against `L`, beside the benchmark.
pub fn figure4(levels: &[u32]) -> Result<(Vec<ResolutionPoint>, Vec<NoiselessRow>)> {
    let k = ChannelConstants::compute(&figure_channel())?;
    let pts = curve(&k, &[FIGURE_N], levels, FIGURE_EPS, FIGURE_EPS / 2.0)?;
    let rows = noiseless_rows(&pts);
    Ok((pts, rows))
}

/// Figure 5 data: the bound specialised to the noiseless channel against the benchmark.
pub fn figure5(levels: &[u32]) -> Result<(Vec<ResolutionPoint>, Vec<NoiselessRow>)> {
    let k = ChannelConstants::compute(&Channel::noiseless())?;
    let pts = curve(&k, &[FIGURE_N], levels, FIGURE_EPS, FIGURE_EPS / 2.0)?;
    let rows = noiseless_rows(&pts);
    Ok((pts, rows))
}

pub fn figure_levels() -> Vec<u32> {
    (2..=16).collect()
}

pub fn curve_table(points: &[ResolutionPoint]) -> Table {
    let mut t = Table::new(&["N", "L", "eps", "eps_prime", "N1", "Ndagger", "neg_log_delta", "rate"]);
    for p in points {
        t.push(vec![
            num(p.n),
            p.levels.to_string(),
            num(p.eps),
            num(p.eps_prime),
            num(p.n1.value),
            num(p.n_dagger.value),
            num(p.neg_log_delta),
            num(p.rate),
        ]);
    }
    t
}

fn inexact_note(points: &[ResolutionPoint]) -> String {
    let l: Vec<String> = points
        .iter()
        .filter(|p| !p.n1.exact || !p.n_dagger.exact)
        .map(|p| p.levels.to_string())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    if l.is_empty() {
        "none".into()
    } else {
        l.join(" ")
    }
}

pub fn noiseless_table(rows: &[NoiselessRow]) -> Table {
    let mut t = Table::new(&["N", "L", "benchmark", "ours"]);
    for r in rows {
        t.push(vec![num(r.n), r.levels.to_string(), num(r.benchmark), num(r.ours)]);
    }
    t
}

pub const T1_COLUMNS: [&str; 22] = [
    "L",
    "M",
    "lambda1",
    "lambda2",
    "a_A",
    "a_R",
    "eps_prime",
    "eps0",
    "N0",
    "E_tau_s",
    "t_first_estimation",
    "t_second_estimation",
    "t_test_accept",
    "t_test_reject",
    "t_stage2",
    "t_stage2_penalty",
    "N_bar",
    "eps_bar",
    "N",
    "eps",
    "vacuous",
    "saturated",
];

pub fn query_bound_table(config: &ProcedureConfig, bound: &QueryBound) -> Table {
    let mut t = Table::new(&T1_COLUMNS);
    let mut row = vec![
        config.levels.to_string(),
        config.total_bins.to_string(),
        num(config.lambda1),
        num(config.lambda2),
        num(config.accept_threshold),
        num(config.reject_threshold),
        num(config.eps_prime),
        num(config.eps0),
        config.stage2_cap.to_string(),
        num(bound.terms.stage2_time),
    ];
    row.extend(bound.terms.as_array().iter().map(|&v| num(v)));
    row.extend([num(bound.n_bar), num(bound.eps_bar), num(bound.n), num(bound.eps)]);
    row.extend([flag(bound.vacuous), flag(bound.saturated)]);
    t.push(row);
    t
}

/// Writes the tables for one figure into `out_dir`; returns the paths.
pub fn write_figure(figure: u8, out_dir: &Path, config_hash: &str) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let curve_path = out_dir.join("curve_t2.csv");
    let noiseless_path = out_dir.join("noiseless.csv");
    let base = |note: String| {
        vec![
            ("config_hash", config_hash.to_string()),
            ("figure", figure.to_string()),
            ("offset", "O(1) terms dropped".to_string()),
            ("branch_start_levels", note),
        ]
    };
    match figure {
        3 => {
            let pts = figure3(&figure3_grid())?;
            curve_table(&pts).write(&curve_path, &base(inexact_note(&pts)))?;
            Ok(vec![curve_path])
        }
        4 | 5 => {
            let (pts, rows) = if figure == 4 { figure4(&figure_levels())? } else { figure5(&figure_levels())? };
            let mut meta = base(inexact_note(&pts));
            curve_table(&pts).write(&curve_path, &meta)?;
            meta.push(("units", "bits per noiseless query".to_string()));
            noiseless_table(&rows).write(&noiseless_path, &meta)?;
            Ok(vec![curve_path, noiseless_path])
        }
        other => Err(crate::error::Error::Config(format!("unknown figure {other}; expected 3, 4 or 5"))),
    }
}

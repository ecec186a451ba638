//! Monte Carlo campaigns over independent seeded trials.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::bounds::{query_bound, QueryBound};
use crate::cells::Partition;
use crate::channel::ChannelConstants;
use crate::eavesdropper::{
    evaluate_privacy, final_pattern, independence_test, wilson_interval, Adversary, AdversaryStrategy,
    IndependenceTest, PrivacyReport,
};
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, TargetMode};
use crate::harness::output::{flag, num, Table};
use crate::procedure::{Procedure, ProcedureConfig, TrialResult};
use crate::rng::{stream_rng, Stream, TrialRngs};

pub const TRIAL_COLUMNS: [&str; 12] = [
    "trial",
    "s",
    "s_hat",
    "abs_err",
    "tau_total",
    "tau_stage1",
    "tau_sprt",
    "tau_stage2",
    "stopped_at_zero",
    "w1_correct",
    "w2_correct",
    "cap_hit",
];

/// One line of `trials.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRow {
    pub trial: u64,
    pub s: f64,
    pub s_hat: f64,
    pub abs_err: f64,
    pub tau_total: u64,
    pub tau_stage1: u64,
    pub tau_sprt: u64,
    pub tau_stage2: u64,
    pub stopped_at_zero: bool,
    pub w1_correct: bool,
    pub w2_correct: bool,
    pub cap_hit: bool,
}

impl TrialRow {
    pub fn from_result(trial: u64, r: &TrialResult) -> Self {
        Self {
            trial,
            s: r.s,
            s_hat: r.s_hat,
            abs_err: r.abs_err,
            tau_total: r.tau_total,
            tau_stage1: r.tau_stage1,
            tau_sprt: r.tau_sprt,
            tau_stage2: r.tau_stage2,
            stopped_at_zero: r.stopped_at_zero,
            w1_correct: r.w1_correct,
            w2_correct: r.w2_correct,
            cap_hit: r.cap_hit,
        }
    }

    pub fn excess_resolution(&self, delta: f64) -> bool {
        self.stopped_at_zero || self.cap_hit || self.abs_err > delta
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.trial.to_string(),
            num(self.s),
            num(self.s_hat),
            num(self.abs_err),
            self.tau_total.to_string(),
            self.tau_stage1.to_string(),
            self.tau_sprt.to_string(),
            self.tau_stage2.to_string(),
            flag(self.stopped_at_zero),
            flag(self.w1_correct),
            flag(self.w2_correct),
            flag(self.cap_hit),
        ]
    }

    fn parse(fields: &[String]) -> Result<Self> {
        fn p<T: std::str::FromStr>(s: &str) -> Result<T> {
            s.parse().map_err(|_| Error::Config(format!("malformed trials.csv field {s:?}")))
        }
        if fields.len() != TRIAL_COLUMNS.len() {
            return Err(Error::Config(format!("trials.csv row has {} fields", fields.len())));
        }
        Ok(Self {
            trial: p(&fields[0])?,
            s: p(&fields[1])?,
            s_hat: p(&fields[2])?,
            abs_err: p(&fields[3])?,
            tau_total: p(&fields[4])?,
            tau_stage1: p(&fields[5])?,
            tau_sprt: p(&fields[6])?,
            tau_stage2: p(&fields[7])?,
            stopped_at_zero: p(&fields[8])?,
            w1_correct: p(&fields[9])?,
            w2_correct: p(&fields[10])?,
            cap_hit: p(&fields[11])?,
        })
    }
}

pub fn trials_table(rows: &[TrialRow]) -> Table {
    let mut t = Table::new(&TRIAL_COLUMNS);
    for r in rows {
        t.push(r.fields());
    }
    t
}

pub fn read_trials(path: &Path) -> Result<Vec<TrialRow>> {
    let t = Table::read(path)?;
    if t.header != TRIAL_COLUMNS {
        return Err(Error::Config(format!("{} does not have the trials.csv header", path.display())));
    }
    t.rows.iter().map(|r| TrialRow::parse(r)).collect()
}

/// Everything a trial leaves behind once its transcript is dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub row: TrialRow,
    /// One estimate per configured adversary, in order.
    pub adversary: Vec<f64>,
    pub pattern: Option<Vec<u32>>,
    pub first_level: u32,
}

pub fn target_for(mode: TargetMode, total_bins: u32, master_seed: u64, trial: u64) -> f64 {
    match mode {
        TargetMode::Uniform => stream_rng(master_seed, trial, Stream::Target).gen(),
        TargetMode::Grid => {
            let m = total_bins as u64;
            let i = trial % (2 * m + 1);
            if i < m {
                (i as f64 + 0.5) / m as f64
            } else {
                (i - m) as f64 / m as f64
            }
        }
    }
}

pub fn run_one(
    procedure: &Procedure,
    master_seed: u64,
    trial: u64,
    targets: TargetMode,
    adversaries: &[AdversaryStrategy],
) -> Result<TrialRecord> {
    let cfg = procedure.config();
    let partition: Partition = cfg.partition();
    let s = target_for(targets, cfg.total_bins, master_seed, trial);
    let result = procedure.run_trial(s, TrialRngs::derive(master_seed, trial))?;
    let view = result.transcript.eavesdropper_view();
    let mut rng = stream_rng(master_seed, trial, Stream::Adversary);
    let adversary = adversaries.iter().map(|a| a.estimate(&view, partition, &mut rng)).collect();
    Ok(TrialRecord {
        row: TrialRow::from_result(trial, &result),
        adversary,
        pattern: final_pattern(&view, partition),
        first_level: partition.first_level_of(s),
    })
}

/// Runs `trials` trials on `workers` threads. Output order and content do not
/// depend on the worker count.
pub fn run_trials(
    procedure: &Procedure,
    trials: u64,
    master_seed: u64,
    workers: Option<usize>,
    targets: TargetMode,
    adversaries: &[AdversaryStrategy],
) -> Result<Vec<TrialRecord>> {
    let job = || {
        (0..trials)
            .into_par_iter()
            .map(|i| run_one(procedure, master_seed, i, targets, adversaries))
            .collect::<Result<Vec<_>>>()
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(job)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub trials: u64,
    pub excess_events: u64,
    pub excess_prob: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub stopped_at_zero: u64,
    pub cap_hits: u64,
    pub mean_tau_total: f64,
    pub mean_tau_stage1: f64,
    pub mean_tau_sprt: f64,
    pub mean_tau_stage2: f64,
    pub p50_tau_total: u64,
    pub p90_tau_total: u64,
    pub p99_tau_total: u64,
}

pub const AGGREGATE_COLUMNS: [&str; 14] = [
    "trials",
    "excess_events",
    "excess_prob",
    "ci_lo",
    "ci_hi",
    "stopped_at_zero",
    "cap_hits",
    "mean_tau_total",
    "mean_tau_stage1",
    "mean_tau_sprt",
    "mean_tau_stage2",
    "p50_tau_total",
    "p90_tau_total",
    "p99_tau_total",
];

pub const BOUND_COLUMNS: [&str; 3] = ["bound_n", "bound_eps", "bound_vacuous"];

const Z95: f64 = 1.959963984540054;

fn nearest_rank(sorted: &[u64], q: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

/// Excess-resolution estimate at resolution `delta` with a 95% Wilson
/// interval, and stopping-time summaries. Sums are integer, so the result is
/// independent of row order.
pub fn aggregate(rows: &[TrialRow], delta: f64) -> AggregateReport {
    let n = rows.len() as u64;
    let count = |f: &dyn Fn(&TrialRow) -> bool| rows.iter().filter(|r| f(r)).count() as u64;
    let mean = |f: &dyn Fn(&TrialRow) -> u64| {
        if n == 0 {
            0.0
        } else {
            rows.iter().map(f).sum::<u64>() as f64 / n as f64
        }
    };
    let excess = count(&|r| r.excess_resolution(delta));
    let (ci_lo, ci_hi) = wilson_interval(excess, n, Z95);
    let mut taus: Vec<u64> = rows.iter().map(|r| r.tau_total).collect();
    taus.sort_unstable();
    AggregateReport {
        trials: n,
        excess_events: excess,
        excess_prob: if n == 0 { 0.0 } else { excess as f64 / n as f64 },
        ci_lo,
        ci_hi,
        stopped_at_zero: count(&|r| r.stopped_at_zero),
        cap_hits: count(&|r| r.cap_hit),
        mean_tau_total: mean(&|r| r.tau_total),
        mean_tau_stage1: mean(&|r| r.tau_stage1),
        mean_tau_sprt: mean(&|r| r.tau_sprt),
        mean_tau_stage2: mean(&|r| r.tau_stage2),
        p50_tau_total: nearest_rank(&taus, 0.5),
        p90_tau_total: nearest_rank(&taus, 0.9),
        p99_tau_total: nearest_rank(&taus, 0.99),
    }
}

impl AggregateReport {
    pub fn fields(&self) -> Vec<String> {
        vec![
            self.trials.to_string(),
            self.excess_events.to_string(),
            num(self.excess_prob),
            num(self.ci_lo),
            num(self.ci_hi),
            self.stopped_at_zero.to_string(),
            self.cap_hits.to_string(),
            num(self.mean_tau_total),
            num(self.mean_tau_stage1),
            num(self.mean_tau_sprt),
            num(self.mean_tau_stage2),
            self.p50_tau_total.to_string(),
            self.p90_tau_total.to_string(),
            self.p99_tau_total.to_string(),
        ]
    }
}

pub fn bound_fields(bound: &QueryBound) -> Vec<String> {
    vec![num(bound.n), num(bound.eps), flag(bound.vacuous)]
}

pub const PRIVACY_COLUMNS: [&str; 8] = ["L", "k", "strategy", "empirical", "ci_lo", "ci_hi", "bound", "pass"];

pub fn privacy_table(reports: &[(AdversaryStrategy, PrivacyReport)]) -> Table {
    let mut t = Table::new(&PRIVACY_COLUMNS);
    for (strategy, report) in reports {
        for r in &report.rows {
            t.push(vec![
                report.levels.to_string(),
                r.k.to_string(),
                strategy.as_str().to_string(),
                num(r.empirical),
                num(r.ci_lo),
                num(r.ci_hi),
                num(r.bound),
                flag(r.pass),
            ]);
        }
    }
    t
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub config: ProcedureConfig,
    pub constants: ChannelConstants,
    pub records: Vec<TrialRecord>,
    pub aggregate: AggregateReport,
    pub bound: QueryBound,
    pub privacy: Vec<(AdversaryStrategy, PrivacyReport)>,
    pub independence: IndependenceTest,
}

impl Simulation {
    pub fn rows(&self) -> Vec<TrialRow> {
        self.records.iter().map(|r| r.row).collect()
    }
}

/// Runs the configured campaign without touching the filesystem.
pub fn simulate(config: &ExperimentConfig) -> Result<Simulation> {
    let channel = config.channel.build()?;
    let constants = ChannelConstants::compute(&channel)?;
    let proc_config = config.procedure.resolve(&constants)?;
    let procedure = Procedure::new(proc_config.clone(), channel.clone())?;
    let exp = &config.experiment;
    let records = run_trials(&procedure, exp.trials, exp.master_seed, exp.workers, exp.targets, &exp.adversaries)?;
    let rows: Vec<TrialRow> = records.iter().map(|r| r.row).collect();
    let aggregate = aggregate(&rows, proc_config.resolution());
    let e_tau = config.bounds.stage2_time(&channel, &proc_config, &constants, exp.master_seed)?;
    let bound = query_bound(&proc_config, &constants, e_tau);
    let privacy = exp
        .adversaries
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let pairs: Vec<(f64, f64)> = records.iter().map(|r| (r.row.s, r.adversary[i])).collect();
            (a, evaluate_privacy(&pairs, proc_config.levels))
        })
        .collect();
    let observations: Vec<(Option<Vec<u32>>, u32)> =
        records.iter().map(|r| (r.pattern.clone(), r.first_level)).collect();
    let independence = independence_test(&observations, proc_config.levels);
    Ok(Simulation { config: proc_config, constants, records, aggregate, bound, privacy, independence })
}

pub fn aggregate_table(sim: &Simulation) -> Table {
    let mut header: Vec<&str> = vec!["L", "M"];
    header.extend(AGGREGATE_COLUMNS);
    header.extend(BOUND_COLUMNS);
    let mut t = Table::new(&header);
    let mut row = vec![sim.config.levels.to_string(), sim.config.total_bins.to_string()];
    row.extend(sim.aggregate.fields());
    row.extend(bound_fields(&sim.bound));
    t.push(row);
    t
}

/// Runs the campaign and writes `trials.csv`, `aggregate.csv`,
/// `privacy.csv` and `independence.csv` into `out_dir`.
pub fn simulate_to_dir(config: &ExperimentConfig, out_dir: &Path) -> Result<Simulation> {
    let sim = simulate(config)?;
    std::fs::create_dir_all(out_dir)?;
    let meta = [("config_hash", config.hash())];
    trials_table(&sim.rows()).write(&out_dir.join("trials.csv"), &meta)?;
    aggregate_table(&sim).write(&out_dir.join("aggregate.csv"), &meta)?;
    privacy_table(&sim.privacy).write(&out_dir.join("privacy.csv"), &meta)?;
    let mut ind = Table::new(&["L", "statistic", "dof", "p_value", "categories"]);
    ind.push(vec![
        sim.config.levels.to_string(),
        num(sim.independence.statistic),
        sim.independence.dof.to_string(),
        num(sim.independence.p_value),
        sim.independence.categories.to_string(),
    ]);
    ind.write(&out_dir.join("independence.csv"), &meta)?;
    Ok(sim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{Channel, HFunction};

    fn procedure() -> Procedure {
        let ch = Channel::bsc(HFunction::Constant { q: 0.1 }).unwrap();
        let k = ChannelConstants::compute(&ch).unwrap();
        let cfg = ProcedureConfig::new(2, 16, 2.0, 4.0, 2.0, 2.0, 0.05, 0.0, &k).unwrap();
        Procedure::new(cfg, ch).unwrap()
    }

    #[test]
    fn worker_count_does_not_matter() {
        let p = procedure();
        let adv = AdversaryStrategy::ALL;
        let one = run_trials(&p, 300, 9, Some(1), TargetMode::Uniform, &adv).unwrap();
        let four = run_trials(&p, 300, 9, Some(4), TargetMode::Uniform, &adv).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn aggregate_examples() {
        let row = |tau, err| TrialRow {
            trial: 0,
            s: 0.0,
            s_hat: 0.0,
            abs_err: err,
            tau_total: tau,
            tau_stage1: tau,
            tau_sprt: 0,
            tau_stage2: 0,
            stopped_at_zero: false,
            w1_correct: true,
            w2_correct: true,
            cap_hit: false,
        };
        let rows: Vec<TrialRow> = (1..=10).map(|i| row(i, if i > 8 { 0.5 } else { 0.0 })).collect();
        let a = aggregate(&rows, 0.1);
        assert_eq!(a.excess_events, 2);
        assert_eq!(a.excess_prob, 0.2);
        assert_eq!(a.mean_tau_total, 5.5);
        assert_eq!((a.p50_tau_total, a.p90_tau_total, a.p99_tau_total), (5, 9, 10));
        let mut rev = rows.clone();
        rev.reverse();
        assert_eq!(aggregate(&rev, 0.1), a);
    }

    #[test]
    fn grid_targets_cover_centers_and_edges() {
        let pts: Vec<f64> = (0..9).map(|i| target_for(TargetMode::Grid, 4, 0, i)).collect();
        assert_eq!(pts, vec![0.125, 0.375, 0.625, 0.875, 0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn trial_rows_round_trip() {
        let p = procedure();
        let recs = run_trials(&p, 50, 1, Some(2), TargetMode::Uniform, &[]).unwrap();
        let rows: Vec<TrialRow> = recs.iter().map(|r| r.row).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trials.csv");
        trials_table(&rows).write(&path, &[]).unwrap();
        assert_eq!(read_trials(&path).unwrap(), rows);
    }
}

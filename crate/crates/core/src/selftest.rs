//! The acceptance checks, runnable from the library, the CLI and the test
//! suite. Each check has a fixed seed and a wall-clock limit.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{noiseless_benchmark, solve_n1, solve_ndagger};
use crate::channel::{capacity, Channel, ChannelConstants, HFunction};
use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::figures::{figure3, figure5};
use crate::harness::simulate::{simulate, simulate_to_dir};
use crate::rng::{stream_rng, Stream};
use crate::sprt::{Decision, Sprt, SprtConfig};
use crate::stage2::{sortpm_build_query, LocalQuery, Posterior};

const SEED: u64 = 20_261_017;

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Option<Duration>,
}

impl std::fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:>2} {} ({:.2}s) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

pub const CRITERIA: [(u8, &str, Option<u64>); 10] = [
    (1, "capacity sanity", Some(1)),
    (2, "solver contracts", None),
    (3, "decay-rate ordering and asymptote", Some(10)),
    (4, "noiseless benchmark comparison", Some(5)),
    (5, "SPRT error and time bounds", Some(60)),
    (6, "non-asymptotic bound dominance", Some(300)),
    (7, "privacy compliance", Some(600)),
    (8, "noiseless exactness", Some(60)),
    (9, "posterior invariants", None),
    (10, "determinism across worker counts", None),
];

/// Runs criterion `id` (1 to 10).
pub fn run_criterion(id: u8) -> CriterionReport {
    let (_, name, limit) = CRITERIA[(id - 1) as usize];
    let limit = limit.map(Duration::from_secs);
    let start = Instant::now();
    let outcome = match id {
        1 => capacity_sanity(),
        2 => solver_contracts(),
        3 => decay_rate_shape(),
        4 => noiseless_comparison(),
        5 => sprt_bounds(),
        6 => bound_dominance(),
        7 => privacy_compliance(),
        8 => noiseless_exactness(),
        9 => posterior_invariants(),
        10 => determinism(),
        _ => panic!("no criterion {id}"),
    };
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = match outcome {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(l) = limit {
        if elapsed > l {
            passed = false;
            detail.push_str(&format!("; over the {}s limit", l.as_secs()));
        }
    }
    CriterionReport { id, name, passed, detail, elapsed, limit }
}

pub fn run_all() -> Vec<CriterionReport> {
    (1..=10).map(run_criterion).collect()
}

type Outcome = Result<(bool, String)>;

fn sigma(p: f64, n: f64) -> f64 {
    (p * (1.0 - p) / n).sqrt()
}

fn capacity_sanity() -> Outcome {
    let mut worst = 0.0f64;
    for q in [0.0, 0.05, 0.1, 0.25] {
        let xlogx = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
        let closed = 2f64.ln() + xlogx(q) + xlogx(1.0 - q);
        let c = capacity(&Channel::bsc(HFunction::Constant { q })?)?.value;
        worst = worst.max((c - closed).abs());
    }
    Ok((worst < 1e-9, format!("max |C − closed form| = {worst:.3e}")))
}

fn solver_contracts() -> Outcome {
    let channels = [
        HFunction::Affine { c0: 0.1, c1: 0.3 },
        HFunction::Constant { q: 0.2 },
        HFunction::Constant { q: 0.25 },
    ];
    let (mut worst69, mut worst22, mut ordered) = (0.0f64, 0.0f64, true);
    for h in channels {
        let k = ChannelConstants::compute(&Channel::bsc(h)?)?;
        let (c, r) = (k.capacity, k.capacity / k.c_tilde);
        for l in 2u32..=64 {
            let lnl = (l as f64).ln();
            let nd = solve_ndagger(l, c)?;
            let n1 = solve_n1(l, c, k.c_tilde)?;
            worst69 = worst69.max((lnl - c * nd + nd.ln().ln()).abs());
            worst22 = worst22.max((lnl - c * n1 + r * n1.ln() + n1.ln().ln()).abs());
            ordered &= n1 >= nd;
        }
    }
    Ok((
        worst69 < 1e-9 && worst22 < 1e-9 && ordered,
        format!("residuals {worst69:.2e} / {worst22:.2e}, N1 ≥ N† everywhere: {ordered}"),
    ))
}

fn decay_rate_shape() -> Outcome {
    let grid: Vec<f64> = (200..=2000).step_by(10).map(|n| n as f64).collect();
    let pts = figure3(&grid)?;
    let per = grid.len();
    let mut violations = 0;
    for i in 0..per {
        for w in 0..3 {
            if pts[w * per + i].rate < pts[(w + 1) * per + i].rate {
                violations += 1;
            }
        }
    }
    let far = figure3(&[1e5])?;
    let k = ChannelConstants::compute(&crate::harness::figures::figure_channel())?;
    let limit = k.capacity / 0.9;
    let worst = far.iter().map(|p| (p.rate - limit).abs() / limit).fold(0.0, f64::max);
    Ok((
        violations == 0 && worst < 0.02,
        format!("{violations} ordering violations; max relative gap to C/(1−ε) at N=1e5: {worst:.2e}"),
    ))
}

fn noiseless_comparison() -> Outcome {
    let levels: Vec<u32> = (2..=10).collect();
    let (pts, rows) = figure5(&levels)?;
    let drop = noiseless_benchmark(100.0, 2) - noiseless_benchmark(100.0, 10);
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
        (a.min(p.neg_log_delta), b.max(p.neg_log_delta))
    });
    let above = rows.iter().filter(|r| r.levels >= 3).all(|r| r.ours > r.benchmark);
    Ok((
        drop > 10.0 && hi - lo < 2.0 && above,
        format!("benchmark drop {drop:.2}, our variation {:.3} nats, ours above benchmark on L∈[3,10]: {above}", hi - lo),
    ))
}

fn sprt_bounds() -> Outcome {
    let trials = 100_000u64;
    let mut failures = Vec::new();
    let mut cell = 0u64;
    for a in [2.0, 3.0, 4.0] {
        for q in [0.05, 0.1, 0.2] {
            let ch = Channel::bsc(HFunction::Constant { q })?;
            let k = ChannelConstants::compute(&ch)?;
            let sprt = Sprt::new(SprtConfig::from_constants(&k, a, a), &ch)?;
            let (bound_a, bound_r) = sprt.expected_time_bounds()?;
            for (h, truth, bound) in [(0, Decision::Accept, bound_a), (1, Decision::Reject, bound_r)] {
                let mut rng = stream_rng(SEED + 5, cell * 2 + h, Stream::Noise);
                let (mut wrong, mut steps) = (0u64, 0u64);
                for _ in 0..trials {
                    let out = sprt.run(truth, &mut rng, None);
                    wrong += (out.decision != truth) as u64;
                    steps += out.steps;
                }
                let p = (-a).exp();
                let err = wrong as f64 / trials as f64;
                let mean = steps as f64 / trials as f64;
                if err > p + 3.0 * sigma(p, trials as f64) || mean > bound {
                    failures.push(format!("a={a} q={q} {truth:?}: err {err:.4}, mean τ {mean:.3} vs {bound:.3}"));
                }
            }
            cell += 1;
        }
    }
    Ok((failures.is_empty(), if failures.is_empty() { "all 18 cells within bounds".into() } else { failures.join("; ") }))
}

fn end_to_end_config(levels: u32, total_bins: u32, trials: u64, seed: u64, extra: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::from_toml(&format!(
        r#"
[experiment]
trials = {trials}
master_seed = {seed}

[channel]
kind = "bsc"
h = {{ type = "constant", q = 0.1 }}

[procedure]
levels = {levels}
total_bins = {total_bins}
eps = 0.1
eps_prime = 0.05
{extra}
"#
    ))
}

fn bound_dominance() -> Outcome {
    let mut cfg = end_to_end_config(2, 32, 10_000, SEED + 6, "")?;
    cfg.bounds.stage2_time = crate::harness::config::Stage2TimeSpec::Mc;
    let sim = simulate(&cfg)?;
    let n = sim.aggregate.trials as f64;
    let eps = sim.bound.eps;
    let err_ok = sim.aggregate.excess_prob <= eps + 3.0 * sigma(eps, n);
    let tau_ok = sim.aggregate.mean_tau_total <= 1.05 * sim.bound.n;
    Ok((
        err_ok && tau_ok,
        format!(
            "excess {:.4} vs ε {:.4}{}; mean τ {:.2} vs N {:.2}",
            sim.aggregate.excess_prob,
            eps,
            if sim.bound.vacuous { " (clipped)" } else { "" },
            sim.aggregate.mean_tau_total,
            sim.bound.n
        ),
    ))
}

fn privacy_compliance() -> Outcome {
    let mut parts = Vec::new();
    let mut passed = true;
    for levels in [2u32, 4, 8] {
        let cfg = end_to_end_config(levels, 16 * levels, 10_000, SEED + 7, "")?;
        let sim = simulate(&cfg)?;
        for (strategy, report) in &sim.privacy {
            let row = report.rows[0];
            passed &= row.pass && !report.low_power;
            parts.push(format!(
                "L={levels} {}: {:.4} (CI hi {:.4}, bound {:.4}+{:.4}) {}",
                strategy.as_str(),
                row.empirical,
                row.ci_hi,
                row.bound,
                row.slack,
                if row.pass { "ok" } else { "over" }
            ));
        }
        let p = sim.independence.p_value;
        passed &= p > 0.001;
        parts.push(format!("L={levels} independence p={p:.4}"));
    }
    Ok((passed, parts.join("; ")))
}

fn noiseless_exactness() -> Outcome {
    let cfg = ExperimentConfig::from_toml(&format!(
        r#"
[experiment]
trials = 10000
master_seed = {}

[channel]
kind = "bsc"
h = {{ type = "constant", q = 0.0 }}

[procedure]
levels = 2
total_bins = 64
eps_prime = 0.05
eps0 = 0.0
lambda1 = 10.0
lambda2 = 40.0
accept_threshold = 5.0
reject_threshold = 5.0
"#,
        SEED + 8
    ))?;
    let sim = simulate(&cfg)?;
    let worst = sim.records.iter().map(|r| r.row.abs_err).fold(0.0, f64::max);
    let ok = sim.aggregate.excess_events == 0 && worst <= 1.0 / 128.0;
    Ok((ok, format!("{} excess events, max |ŝ − s| = {worst:.5}", sim.aggregate.excess_events)))
}

fn posterior_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let (mut worst_norm, mut negative) = (0.0f64, false);
    let mut steps = 0;
    while steps < 10_000 {
        let bins = rng.gen_range(2..=32usize);
        let raw: Vec<f64> = (0..bins).map(|_| rng.gen::<f64>().powi(3)).collect();
        let total: f64 = raw.iter().sum();
        let mut post = Posterior::from_probabilities(raw.iter().map(|v| v / total).collect())?;
        let q = rng.gen_range(0.01..0.49);
        let ch = Channel::bsc(HFunction::Constant { q })?;
        for _ in 0..rng.gen_range(1..=20) {
            let query = if rng.gen_bool(0.5) {
                sortpm_build_query(&post)
            } else {
                LocalQuery::new(bins, (0..bins).filter(|_| rng.gen_bool(0.5)).collect())
            };
            let matrix = ch.at(query.measure())?;
            post.update(&query, rng.gen_range(0..2), &matrix)?;
            let sum: f64 = post.probabilities().iter().sum();
            worst_norm = worst_norm.max((sum - 1.0).abs());
            negative |= post.probabilities().iter().any(|&p| p < 0.0);
            steps += 1;
        }
    }
    let mut sortpm_bad = 0;
    for _ in 0..5_000 {
        let len = rng.gen_range(1..=12usize);
        let raw: Vec<f64> = (0..len).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen() }).collect();
        let total: f64 = raw.iter().sum();
        if total == 0.0 {
            continue;
        }
        let post = Posterior::from_probabilities(raw.iter().map(|v| v / total).collect())?;
        let rho = post.probabilities();
        let mut sorted = rho.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let best = (1..=len)
            .map(|k| (sorted[..k].iter().sum::<f64>() - 0.5).abs())
            .fold(f64::INFINITY, f64::min);
        let chosen: f64 = sortpm_build_query(&post).bins().iter().map(|&j| rho[j]).sum();
        if (chosen - 0.5).abs() > best + 1e-12 {
            sortpm_bad += 1;
        }
    }
    Ok((
        worst_norm <= 1e-12 && !negative && sortpm_bad == 0,
        format!("{steps} updates, max |Σρ − 1| = {worst_norm:.2e}, negative: {negative}, sortPM mismatches: {sortpm_bad}"),
    ))
}

fn determinism() -> Outcome {
    let base = std::env::temp_dir().join(format!("twentyq-selftest-{}", std::process::id()));
    let mut files = Vec::new();
    for workers in [1usize, 8] {
        let mut cfg = end_to_end_config(4, 32, 2_000, SEED + 10, "")?;
        cfg.experiment.workers = Some(workers);
        let dir = base.join(format!("w{workers}"));
        simulate_to_dir(&cfg, &dir)?;
        files.push(std::fs::read(dir.join("trials.csv"))?);
    }
    let _ = std::fs::remove_dir_all(&base);
    let same = files[0] == files[1];
    Ok((same, format!("trials.csv {} bytes, identical at 1 and 8 workers: {same}", files[0].len())))
}

//! Eavesdropper decoders and the privacy check.
//!
//! Adversaries receive an [`EavesdropperView`], which exposes query sets in
//! order and nothing else.

use std::collections::BTreeMap;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::cells::{CellSet, Partition};
use crate::transcript::EavesdropperView;

/// A decoder from query sets to a point estimate of the target.
pub trait Adversary {
    fn name(&self) -> &str;

    fn estimate(&self, view: &EavesdropperView<'_>, partition: Partition, rng: &mut dyn RngCore) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryStrategy {
    /// Center of a uniformly chosen first-level sub-interval.
    UniformRandom,
    /// Reads the second-level offset off the smallest cloned query and places
    /// it in a uniformly chosen first-level sub-interval.
    OffsetHeuristic,
}

impl AdversaryStrategy {
    pub const ALL: [AdversaryStrategy; 2] = [AdversaryStrategy::UniformRandom, AdversaryStrategy::OffsetHeuristic];

    pub fn as_str(&self) -> &'static str {
        match self {
            AdversaryStrategy::UniformRandom => "uniform_random",
            AdversaryStrategy::OffsetHeuristic => "offset_heuristic",
        }
    }
}

impl Adversary for AdversaryStrategy {
    fn name(&self) -> &str {
        self.as_str()
    }

    fn estimate(&self, view: &EavesdropperView<'_>, partition: Partition, rng: &mut dyn RngCore) -> f64 {
        if view.is_empty() {
            return rng.gen();
        }
        let levels = partition.levels();
        let first = rng.gen_range(0..levels);
        match self {
            AdversaryStrategy::UniformRandom => partition.first_level_center(first),
            AdversaryStrategy::OffsetHeuristic => match smallest_local_pattern(view, partition) {
                Some(bins) => {
                    let mean = bins.iter().map(|&b| b as f64).sum::<f64>() / bins.len() as f64;
                    partition.center(first, mean.round() as u32)
                }
                None => (first as f64 + rng.gen::<f64>()) / levels as f64,
            },
        }
    }
}

/// Local bins of the informative cloned query with the fewest cells, latest
/// first on ties. Queries that are empty or cover the whole interval carry
/// no offset information.
fn smallest_local_pattern(view: &EavesdropperView<'_>, partition: Partition) -> Option<Vec<u32>> {
    let k = partition.bins_per_level();
    let mut best: Option<Vec<u32>> = None;
    for q in view.stage2_queries() {
        let local = local_pattern(q, k);
        if local.is_empty() || local.len() == k as usize {
            continue;
        }
        if best.as_ref().is_none_or(|b| local.len() <= b.len()) {
            best = Some(local);
        }
    }
    best
}

/// The first period of a cloned query: its cells inside `[0, 1/L)`.
pub fn local_pattern(query: &CellSet, bins_per_level: u32) -> Vec<u32> {
    query.cells().iter().copied().take_while(|&c| c < bins_per_level).collect()
}

/// The final stage-2 query's local pattern, or `None` without one.
pub fn final_pattern(view: &EavesdropperView<'_>, partition: Partition) -> Option<Vec<u32>> {
    view.stage2_queries().last().map(|q| local_pattern(q, partition.bins_per_level()))
}

/// Two-sided 99% normal quantile.
const Z99: f64 = 2.5758293035489004;

/// Samples below this leave the report flagged as low-power.
pub const MIN_SAMPLES: usize = 1000;

pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (n, p) = (n as f64, successes as f64 / n as f64);
    let z2 = z * z;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyRow {
    pub k: u32,
    pub empirical: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// `(2k − 1)/L`.
    pub bound: f64,
    /// Three binomial sigmas at the bound.
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyReport {
    pub levels: u32,
    pub samples: usize,
    pub low_power: bool,
    pub rows: Vec<PrivacyRow>,
}

impl PrivacyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Empirical `Pr{|S̃ − S| ≤ (2k−1)/(2L)}` for `k = 1..=⌈L/2⌉` against `(2k−1)/L`.
pub fn evaluate_privacy(pairs: &[(f64, f64)], levels: u32) -> PrivacyReport {
    let n = pairs.len() as u64;
    let l = levels as f64;
    let rows = (1..=levels.div_ceil(2))
        .map(|k| {
            let radius = (2 * k - 1) as f64 / (2.0 * l);
            let hits = pairs.iter().filter(|(s, e)| (e - s).abs() <= radius).count() as u64;
            let bound = ((2 * k - 1) as f64 / l).min(1.0);
            let (ci_lo, ci_hi) = wilson_interval(hits, n, Z99);
            let slack = if n == 0 { 0.0 } else { 3.0 * (bound * (1.0 - bound) / n as f64).sqrt() };
            PrivacyRow {
                k,
                empirical: if n == 0 { 0.0 } else { hits as f64 / n as f64 },
                ci_lo,
                ci_hi,
                bound,
                slack,
                pass: ci_hi <= bound + slack,
            }
        })
        .collect();
    PrivacyReport { levels, samples: pairs.len(), low_power: pairs.len() < MIN_SAMPLES, rows }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceTest {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
    /// Pattern categories after pooling sparse ones.
    pub categories: usize,
}

/// Chi-square test of independence between a transcript pattern and the
/// true first-level index. Patterns seen fewer than `5L` times are pooled.
pub fn independence_test<K: Ord + Clone>(observations: &[(K, u32)], levels: u32) -> IndependenceTest {
    let l = levels as usize;
    let mut table: BTreeMap<Option<K>, Vec<u64>> = BTreeMap::new();
    let mut counts: BTreeMap<&K, u64> = BTreeMap::new();
    for (k, _) in observations {
        *counts.entry(k).or_default() += 1;
    }
    for (k, idx) in observations {
        let key = if counts[k] >= 5 * levels as u64 { Some(k.clone()) } else { None };
        table.entry(key).or_insert_with(|| vec![0; l])[*idx as usize] += 1;
    }
    let n = observations.len() as f64;
    let mut col = vec![0u64; l];
    for row in table.values() {
        for (c, v) in col.iter_mut().zip(row) {
            *c += v;
        }
    }
    let nonzero_cols = col.iter().filter(|&&c| c > 0).count();
    let mut statistic = 0.0;
    for row in table.values() {
        let total: u64 = row.iter().sum();
        for (&obs, &c) in row.iter().zip(&col) {
            if c == 0 {
                continue;
            }
            let expected = total as f64 * c as f64 / n;
            statistic += (obs as f64 - expected).powi(2) / expected;
        }
    }
    let dof = (table.len().saturating_sub(1) * nonzero_cols.saturating_sub(1)) as u64;
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(statistic)
    };
    IndependenceTest { statistic, dof, p_value, categories: table.len() }
}

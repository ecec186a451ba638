//! Cloned sorted posterior matching over the second-level bins.
//!
//! The questioner keeps a posterior over the `K = M/L` second-level offsets.
//! Each query takes the most likely bins whose total mass is closest to one
//! half and repeats that pattern inside every first-level sub-interval, so
//! the posed set carries no information about which sub-interval holds the
//! target.

use rand::Rng;

use crate::cells::{oracle_answer, CellSet, Partition};
use crate::channel::{Channel, ChannelMatrix};
use crate::error::{domain, Error, Result};
use crate::transcript::{QueryRecord, Transcript};

const NORMALIZATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    rho: Vec<f64>,
}

impl Posterior {
    pub fn uniform(bins: usize) -> Self {
        assert!(bins > 0);
        Self { rho: vec![1.0 / bins as f64; bins] }
    }

    pub fn from_probabilities(rho: Vec<f64>) -> Result<Self> {
        if rho.is_empty() || rho.iter().any(|&v| !(v >= 0.0)) {
            return domain("posterior entries must be non-negative");
        }
        let sum: f64 = rho.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return domain(format!("posterior sums to {sum}"));
        }
        Ok(Self { rho })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.rho
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Most likely bin, smallest index on ties.
    pub fn argmax(&self) -> (usize, f64) {
        let mut best = (0, self.rho[0]);
        for (j, &v) in self.rho.iter().enumerate().skip(1) {
            if v > best.1 {
                best = (j, v);
            }
        }
        best
    }

    /// Bayes update: `ρ_j ∝ ρ_j · P(y | 1{j ∈ query})`.
    pub fn update(&mut self, query: &LocalQuery, y: usize, matrix: &ChannelMatrix) -> Result<()> {
        let like = [matrix.prob(false, y), matrix.prob(true, y)];
        let mut inside = vec![false; self.rho.len()];
        for &j in &query.bins {
            inside[j] = true;
        }
        for (r, &b) in self.rho.iter_mut().zip(&inside) {
            *r *= like[b as usize];
        }
        let total: f64 = self.rho.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Numeric(format!("response {y} is impossible under every bin")));
        }
        for r in &mut self.rho {
            *r /= total;
        }
        Ok(())
    }
}

/// A set of second-level offsets, before cloning.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LocalQuery {
    bins: Vec<usize>,
    bins_per_level: usize,
}

impl LocalQuery {
    pub fn new(bins_per_level: usize, mut bins: Vec<usize>) -> Self {
        bins.sort_unstable();
        bins.dedup();
        assert!(bins.last().is_none_or(|&b| b < bins_per_level));
        Self { bins, bins_per_level }
    }

    pub fn bins(&self) -> &[usize] {
        &self.bins
    }

    pub fn contains(&self, bin: usize) -> bool {
        self.bins.binary_search(&bin).is_ok()
    }

    /// Measure of the cloned set, `|bins| / K`.
    pub fn measure(&self) -> f64 {
        self.bins.len() as f64 / self.bins_per_level as f64
    }
}

/// Sorted posterior matching: sort bins by decreasing posterior (ascending
/// index on ties) and take the prefix whose mass is closest to 1/2, choosing
/// the larger prefix on ties.
pub fn sortpm_build_query(posterior: &Posterior) -> LocalQuery {
    let rho = posterior.probabilities();
    let mut order: Vec<usize> = (0..rho.len()).collect();
    order.sort_by(|&a, &b| rho[b].total_cmp(&rho[a]).then(a.cmp(&b)));
    let mut mass = 0.0;
    let mut size = order.len();
    let mut before = 0.0;
    for (k, &j) in order.iter().enumerate() {
        before = mass;
        mass += rho[j];
        if mass >= 0.5 {
            size = k + 1;
            break;
        }
    }
    if size > 1 && (before - 0.5).abs() < (mass - 0.5).abs() {
        size -= 1;
    }
    LocalQuery::new(rho.len(), order[..size].to_vec())
}

/// Repeats the local pattern in every first-level sub-interval.
pub fn clone_query(local: &LocalQuery, levels: u32) -> CellSet {
    let k = local.bins_per_level as u32;
    let cells = (0..levels)
        .flat_map(|l| local.bins.iter().map(move |&j| l * k + j as u32))
        .collect();
    CellSet::new(levels * k, cells)
}

pub fn posterior_update(
    posterior: &Posterior,
    query: &LocalQuery,
    y: usize,
    channel: &Channel,
) -> Result<Posterior> {
    let mut next = posterior.clone();
    next.update(query, y, &channel.at(query.measure())?)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage2Params {
    pub eps_prime: f64,
    pub cap: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage2Outcome {
    /// Zero-based second-level offset.
    pub estimate: usize,
    pub tau: u64,
    pub confidence: f64,
    pub cap_hit: bool,
}

/// Which posterior entry must clear `1 - ε′` to stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    /// Any bin (the procedure's rule).
    AnyBin,
    /// Only the given bin; used to measure the true bin's passage time.
    Bin(usize),
}

/// Runs cloned sortPM against the target `s` until the posterior clears
/// `1 - ε′` or `params.cap` queries have been posed.
pub fn run_stage2<R: Rng + ?Sized>(
    channel: &Channel,
    partition: Partition,
    s: f64,
    params: Stage2Params,
    rng: &mut R,
    transcript: Option<&mut Transcript>,
) -> Result<Stage2Outcome> {
    run_with_rule(channel, partition, s, params, StopRule::AnyBin, rng, transcript)
}

pub fn run_with_rule<R: Rng + ?Sized>(
    channel: &Channel,
    partition: Partition,
    s: f64,
    params: Stage2Params,
    rule: StopRule,
    rng: &mut R,
    mut transcript: Option<&mut Transcript>,
) -> Result<Stage2Outcome> {
    if !(params.eps_prime > 0.0 && params.eps_prime < 1.0) {
        return domain(format!("ε′ = {} must lie in (0, 1)", params.eps_prime));
    }
    let bins = partition.bins_per_level() as usize;
    let mut posterior = Posterior::uniform(bins);
    let target = 1.0 - params.eps_prime;
    let mut tau = 0u64;
    loop {
        let (best, confidence) = posterior.argmax();
        let done = match rule {
            StopRule::AnyBin => confidence >= target,
            StopRule::Bin(j) => posterior.probabilities()[j] >= target,
        };
        if done || tau >= params.cap {
            return Ok(Stage2Outcome { estimate: best, tau, confidence, cap_hit: !done });
        }
        let local = sortpm_build_query(&posterior);
        let global = clone_query(&local, partition.levels());
        let matrix = channel.at(global.measure())?;
        let y = matrix.sample(oracle_answer(s, &global), rng);
        posterior.update(&local, y, &matrix)?;
        tau += 1;
        if let Some(t) = transcript.as_deref_mut() {
            t.push(QueryRecord::Stage2(global), y);
        }
    }
}

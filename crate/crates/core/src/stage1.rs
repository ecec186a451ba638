//! Variable-length non-adaptive querying over the first-level partition.
//!
//! Each of the `L` first-level sub-intervals owns an infinite Bernoulli(p)
//! codeword. Query `i` is the union of sub-intervals whose codeword has a one
//! in column `i`. The questioner accumulates the information density of every
//! codeword against the responses and stops as soon as one crosses the
//! threshold.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cells::{oracle_answer, CellSet};
use crate::channel::{Channel, InfoDensityTable};
use crate::error::Result;
use crate::transcript::{QueryRecord, Transcript};

/// Random codebook, extended column by column on demand.
#[derive(Debug, Clone)]
pub struct Codebook {
    levels: usize,
    bias: f64,
    columns: Vec<Vec<bool>>,
    rng: ChaCha8Rng,
}

impl Codebook {
    pub fn new(levels: usize, bias: f64, rng: ChaCha8Rng) -> Self {
        Self::with_prefix(levels, bias, Vec::new(), rng)
    }

    /// A codebook whose first columns are fixed; later ones are drawn.
    pub fn with_prefix(levels: usize, bias: f64, prefix: Vec<Vec<bool>>, rng: ChaCha8Rng) -> Self {
        assert!(prefix.iter().all(|c| c.len() == levels));
        Self { levels, bias, columns: prefix, rng }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Column `i` (zero-based), i.e. bit `i` of every codeword.
    pub fn column(&mut self, i: usize) -> &[bool] {
        while self.columns.len() <= i {
            let col = (0..self.levels).map(|_| self.rng.gen_bool(self.bias)).collect();
            self.columns.push(col);
        }
        &self.columns[i]
    }

    pub fn generated(&self) -> usize {
        self.columns.len()
    }
}

/// `A_i = ∪{ C_j : x_i(j) = 1 }` on the first-level grid.
pub fn form_query(column: &[bool]) -> CellSet {
    let cells = column
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(j, _)| j as u32)
        .collect();
    CellSet::new(column.len() as u32, cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoDensityMode {
    /// Fixed table at `h(p)` for the codebook bias `p`.
    #[default]
    Nominal,
    /// Table recomputed at `h(|A_i|)` for each posed query.
    Realized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeRule {
    /// Largest index among codewords above threshold.
    #[default]
    MaxIndex,
    /// Codeword with the largest accumulated density (smallest index on ties).
    ArgmaxDensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stage1Outcome {
    /// Zero-based first-level index.
    pub estimate: usize,
    /// Queries consumed since the start of stage 1.
    pub tau: u64,
    pub cap_hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage1State {
    cum_density: Vec<f64>,
    queries: u64,
}

impl Stage1State {
    pub fn new(levels: usize) -> Self {
        Self { cum_density: vec![0.0; levels], queries: 0 }
    }

    pub fn cum_density(&self) -> &[f64] {
        &self.cum_density
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    pub fn step(&mut self, column: &[bool], y: usize, table: &InfoDensityTable) {
        debug_assert_eq!(column.len(), self.cum_density.len());
        for (acc, &x) in self.cum_density.iter_mut().zip(column) {
            *acc += table.get(x, y);
        }
        self.queries += 1;
    }

    pub fn check_stop(&self, threshold: f64, rule: DecodeRule) -> Option<Stage1Outcome> {
        let estimate = match rule {
            DecodeRule::MaxIndex => self.cum_density.iter().rposition(|&v| v >= threshold)?,
            DecodeRule::ArgmaxDensity => {
                let j = self.argmax();
                if self.cum_density[j] < threshold {
                    return None;
                }
                j
            }
        };
        Some(Stage1Outcome { estimate, tau: self.queries, cap_hit: false })
    }

    fn argmax(&self) -> usize {
        let mut best = 0;
        for (j, &v) in self.cum_density.iter().enumerate() {
            if v > self.cum_density[best] {
                best = j;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage1Params {
    pub threshold: f64,
    pub cap: u64,
    pub mode: InfoDensityMode,
    pub rule: DecodeRule,
}

/// Continues posing codebook queries from the state's current index until a
/// codeword crosses `params.threshold` or the cap is reached. Every query is
/// appended to the transcript.
#[allow(clippy::too_many_arguments)]
pub fn run_estimation<R: Rng + ?Sized>(
    state: &mut Stage1State,
    codebook: &mut Codebook,
    channel: &Channel,
    nominal: &InfoDensityTable,
    s: f64,
    params: Stage1Params,
    rng: &mut R,
    transcript: &mut Transcript,
) -> Result<Stage1Outcome> {
    loop {
        if let Some(outcome) = state.check_stop(params.threshold, params.rule) {
            return Ok(outcome);
        }
        if state.queries >= params.cap {
            return Ok(Stage1Outcome { estimate: state.argmax(), tau: state.queries, cap_hit: true });
        }
        let column = codebook.column(state.queries as usize);
        let query = form_query(column);
        let measure = query.measure();
        let y = channel.sample_response(oracle_answer(s, &query), measure, rng)?;
        match params.mode {
            InfoDensityMode::Nominal => state.step(column, y, nominal),
            InfoDensityMode::Realized => {
                let table = channel.at(measure)?.info_density_table(nominal.bias())?;
                state.step(column, y, &table)
            }
        }
        transcript.push(QueryRecord::Stage1(query), y);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::Partition;
    use crate::channel::{ChannelConstants, HFunction, SATURATION};
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn params(threshold: f64) -> Stage1Params {
        Stage1Params { threshold, cap: 100_000, mode: InfoDensityMode::Nominal, rule: DecodeRule::MaxIndex }
    }

    #[test]
    fn form_query_examples() {
        let q = form_query(&[true, false, true, false]);
        assert_eq!(q.intervals(), vec![(0.0, 0.25), (0.5, 0.75)]);
        assert_eq!(q.measure(), 0.5);
        assert!(form_query(&[false; 4]).is_empty());
        assert_eq!(form_query(&[true; 4]).intervals(), vec![(0.0, 1.0)]);
    }

    #[test]
    fn codebook_columns_are_stable() {
        let mut cb = Codebook::new(5, 0.5, rng(3));
        let c7 = cb.column(7).to_vec();
        cb.column(40);
        assert_eq!(cb.column(7), &c7[..]);
        assert_eq!(cb.generated(), 41);
    }

    #[test]
    fn codebook_bit_frequency() {
        let (l, n, p) = (8usize, 5000usize, 0.3);
        let mut cb = Codebook::new(l, p, rng(11));
        let ones: usize = (0..n).map(|i| cb.column(i).iter().filter(|&&b| b).count()).sum();
        let freq = ones as f64 / (n * l) as f64;
        assert!((freq - p).abs() <= 4.0 * (p * (1.0 - p) / (n * l) as f64).sqrt());
    }

    #[test]
    fn step_examples() {
        let noiseless = Channel::noiseless().at(0.5).unwrap().info_density_table(0.5).unwrap();
        let mut st = Stage1State::new(2);
        st.step(&[true, false], 1, &noiseless);
        assert!((st.cum_density()[0] - 2f64.ln()).abs() < 1e-15);
        assert_eq!(st.cum_density()[1], -SATURATION);

        let useless = Channel::bsc(HFunction::Constant { q: 0.5 }).unwrap();
        let table = useless.at(0.5).unwrap().info_density_table(0.5).unwrap();
        let mut st = Stage1State::new(3);
        st.step(&[true, false, true], 0, &table);
        st.step(&[false, false, true], 1, &table);
        assert!(st.cum_density().iter().all(|&v| v == 0.0));

        let noisy = Channel::bsc(HFunction::Constant { q: 0.1 }).unwrap();
        let table = noisy.at(0.5).unwrap().info_density_table(0.5).unwrap();
        let mut once = Stage1State::new(2);
        once.step(&[true, false], 1, &table);
        let mut twice = once.clone();
        twice.step(&[true, false], 1, &table);
        for j in 0..2 {
            assert!((twice.cum_density()[j] - 2.0 * once.cum_density()[j]).abs() < 1e-15);
        }
        assert_eq!(twice.queries(), 2);
    }

    #[test]
    fn check_stop_examples() {
        let st = Stage1State { cum_density: vec![0.6, 0.7], queries: 4 };
        assert_eq!(
            st.check_stop(0.65, DecodeRule::MaxIndex),
            Some(Stage1Outcome { estimate: 1, tau: 4, cap_hit: false })
        );
        let st = Stage1State { cum_density: vec![0.7, 0.7], queries: 4 };
        assert_eq!(st.check_stop(0.65, DecodeRule::MaxIndex).unwrap().estimate, 1);
        assert_eq!(st.check_stop(0.65, DecodeRule::ArgmaxDensity).unwrap().estimate, 0);
        let st = Stage1State { cum_density: vec![0.1, 0.2], queries: 4 };
        assert_eq!(st.check_stop(0.65, DecodeRule::MaxIndex), None);
    }

    #[test]
    fn noiseless_single_step() {
        let ch = Channel::noiseless();
        let table = ch.at(0.5).unwrap().info_density_table(0.5).unwrap();
        for first in [vec![true, false], vec![false, true]] {
            let mut cb = Codebook::with_prefix(2, 0.5, vec![first], rng(0));
            let mut st = Stage1State::new(2);
            let mut t = Transcript::new();
            let out = run_estimation(&mut st, &mut cb, &ch, &table, 0.1, params(0.6), &mut rng(1), &mut t).unwrap();
            assert_eq!(out, Stage1Outcome { estimate: 0, tau: 1, cap_hit: false });
            assert_eq!(t.len(), 1);
        }
    }

    #[test]
    fn zero_threshold_stops_immediately() {
        let ch = Channel::bsc(HFunction::Constant { q: 0.1 }).unwrap();
        let table = ch.at(0.5).unwrap().info_density_table(0.5).unwrap();
        let mut cb = Codebook::new(4, 0.5, rng(0));
        let mut st = Stage1State::new(4);
        let mut t = Transcript::new();
        let out = run_estimation(&mut st, &mut cb, &ch, &table, 0.3, params(0.0), &mut rng(1), &mut t).unwrap();
        assert_eq!(out.tau, 0);
        assert_eq!(out.estimate, 3);
        assert!(t.is_empty());
    }

    #[test]
    fn cap_hit_is_reported() {
        let ch = Channel::bsc(HFunction::Constant { q: 0.45 }).unwrap();
        let table = ch.at(0.5).unwrap().info_density_table(0.5).unwrap();
        let mut cb = Codebook::new(4, 0.5, rng(0));
        let mut st = Stage1State::new(4);
        let mut t = Transcript::new();
        let p = Stage1Params { cap: 5, ..params(50.0) };
        let out = run_estimation(&mut st, &mut cb, &ch, &table, 0.3, p, &mut rng(1), &mut t).unwrap();
        assert!(out.cap_hit);
        assert_eq!(out.tau, 5);
    }

    struct Trial {
        wrong: bool,
        tau: u64,
        true_crossing: u64,
    }

    fn trial(levels: usize, lambda: f64, seed: u64) -> Trial {
        let ch = Channel::bsc(HFunction::Constant { q: 0.1 }).unwrap();
        let table = ch.at(0.5).unwrap().info_density_table(0.5).unwrap();
        let mut r = rng(seed);
        let s: f64 = r.gen();
        let truth = Partition::new(levels as u32, 1).first_level_of(s) as usize;
        let mut cb = Codebook::new(levels, 0.5, rng(seed ^ 0xC0DE));
        let mut st = Stage1State::new(levels);
        let mut t = Transcript::new();
        let out = run_estimation(&mut st, &mut cb, &ch, &table, s, params(lambda), &mut r, &mut t).unwrap();
        // continue the same sample path until the true codeword crosses on its own
        while st.cum_density()[truth] < lambda {
            let col = cb.column(st.queries() as usize).to_vec();
            let q = form_query(&col);
            let y = ch.sample_response(oracle_answer(s, &q), q.measure(), &mut r).unwrap();
            st.step(&col, y, &table);
        }
        Trial { wrong: out.estimate != truth, tau: out.tau, true_crossing: st.queries() }
    }

    #[test]
    fn misidentification_rate_and_stopping_time() {
        let constants = ChannelConstants::compute(&Channel::bsc(HFunction::Constant { q: 0.1 }).unwrap()).unwrap();
        let n = 10_000u64;
        for levels in [2usize, 4] {
            for lambda in [3.0f64, 5.0] {
                let trials: Vec<Trial> = (0..n).map(|i| trial(levels, lambda, i + 1000 * levels as u64)).collect();
                let errors = trials.iter().filter(|t| t.wrong).count() as f64;
                let bound = (levels as f64 - 1.0) * (-lambda).exp();
                let sigma = (bound * (1.0 - bound) / n as f64).sqrt();
                assert!(errors / n as f64 <= bound + 3.0 * sigma, "L={levels} λ={lambda}: {}", errors / n as f64);

                let mean_tau = trials.iter().map(|t| t.tau as f64).sum::<f64>() / n as f64;
                let tau_bound = (lambda + constants.b) / constants.capacity;
                assert!(mean_tau <= 1.05 * tau_bound, "mean τ {mean_tau} vs {tau_bound}");
                assert!(trials.iter().all(|t| t.tau <= t.true_crossing));
            }
        }
    }

    #[test]
    fn seeded_runs_reproduce_transcripts() {
        let ch = Channel::bsc(HFunction::affine(0.1, 0.3).unwrap()).unwrap();
        let k = ChannelConstants::compute(&ch).unwrap();
        let table = ch.at(k.p_star).unwrap().info_density_table(k.p_star).unwrap();
        let run = |mode| {
            let mut cb = Codebook::new(4, k.p_star, rng(5));
            let mut st = Stage1State::new(4);
            let mut t = Transcript::new();
            let p = Stage1Params { mode, ..params(4.0) };
            let out = run_estimation(&mut st, &mut cb, &ch, &table, 0.62, p, &mut rng(6), &mut t).unwrap();
            (out, t)
        };
        for mode in [InfoDensityMode::Nominal, InfoDensityMode::Realized] {
            assert_eq!(run(mode), run(mode));
        }
    }
}

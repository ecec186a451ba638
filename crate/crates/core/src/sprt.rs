//! Wald's sequential probability ratio test between the accept and reject
//! symbols. The oracle repeats `x_A` to confirm the questioner's first
//! estimate or `x_R` to reject it; the questioner walks the log-likelihood
//! ratio until it leaves `[-a_R, a_A]`.

use rand::Rng;

use crate::channel::{b_constant, kl_divergence, saturate, Channel, ChannelConstants, ChannelMatrix, SATURATION};
use crate::error::{Error, Result};
use crate::transcript::{QueryRecord, Transcript};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprtConfig {
    pub accept_threshold: f64,
    pub reject_threshold: f64,
    pub accept_symbol: bool,
    pub reject_symbol: bool,
    /// Query measure at which `h` is evaluated while the test runs.
    pub query_measure: f64,
}

impl SprtConfig {
    pub fn from_constants(constants: &ChannelConstants, accept_threshold: f64, reject_threshold: f64) -> Self {
        Self {
            accept_threshold,
            reject_threshold,
            accept_symbol: constants.accept_symbol,
            reject_symbol: constants.reject_symbol,
            query_measure: constants.p_star,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprtOutcome {
    pub decision: Decision,
    pub steps: u64,
    pub llr: f64,
}

/// A configured test: the channel is frozen at the test's query measure and
/// the per-symbol log-likelihood ratios are precomputed.
#[derive(Debug, Clone)]
pub struct Sprt {
    config: SprtConfig,
    matrix: ChannelMatrix,
    llr: Vec<f64>,
}

impl Sprt {
    pub fn new(config: SprtConfig, channel: &Channel) -> Result<Self> {
        if !(config.accept_threshold > 0.0 && config.reject_threshold > 0.0) {
            return Err(Error::Config("SPRT thresholds must be positive".into()));
        }
        if config.accept_symbol == config.reject_symbol {
            return Err(Error::Config("accept and reject symbols must differ".into()));
        }
        let matrix = channel.at(config.query_measure)?;
        let (pa, pr) = (matrix.row(config.accept_symbol), matrix.row(config.reject_symbol));
        if !(kl_divergence(pa, pr)? > 0.0 && kl_divergence(pr, pa)? > 0.0) {
            return Err(Error::Config("accept and reject outputs are indistinguishable".into()));
        }
        let llr = pa
            .iter()
            .zip(pr)
            .map(|(&a, &r)| match (a > 0.0, r > 0.0) {
                (true, true) => saturate((a / r).ln()),
                (true, false) => SATURATION,
                (false, true) => -SATURATION,
                (false, false) => 0.0,
            })
            .collect();
        Ok(Self { config, matrix, llr })
    }

    pub fn config(&self) -> &SprtConfig {
        &self.config
    }

    /// Runs one test with the oracle holding `truth`. Each transmitted symbol
    /// is recorded as a hypothesis-test entry when a transcript is given.
    pub fn run<R: Rng + ?Sized>(
        &self,
        truth: Decision,
        rng: &mut R,
        mut transcript: Option<&mut Transcript>,
    ) -> SprtOutcome {
        let x = match truth {
            Decision::Accept => self.config.accept_symbol,
            Decision::Reject => self.config.reject_symbol,
        };
        let mut llr = 0.0;
        let mut steps = 0u64;
        loop {
            let y = self.matrix.sample(x, rng);
            llr += self.llr[y];
            steps += 1;
            if let Some(t) = transcript.as_deref_mut() {
                t.push(QueryRecord::HypothesisTest, y);
            }
            if llr >= self.config.accept_threshold {
                return SprtOutcome { decision: Decision::Accept, steps, llr };
            }
            if llr <= -self.config.reject_threshold {
                return SprtOutcome { decision: Decision::Reject, steps, llr };
            }
        }
    }

    /// Upper bounds on `E[τ | H_A]` and `E[τ | H_R]`:
    /// `(a_A + b_A) / D(P_A‖P_R)` and `(a_R + b_R) / D(P_R‖P_A)`.
    pub fn expected_time_bounds(&self) -> Result<(f64, f64)> {
        let (xa, xr) = (self.config.accept_symbol, self.config.reject_symbol);
        let (pa, pr) = (self.matrix.row(xa), self.matrix.row(xr));
        let b_a = b_constant(&self.matrix.llr_distribution(xa, xr))?;
        let b_r = b_constant(&self.matrix.llr_distribution(xr, xa))?;
        Ok((
            (self.config.accept_threshold + b_a) / kl_divergence(pa, pr)?,
            (self.config.reject_threshold + b_r) / kl_divergence(pr, pa)?,
        ))
    }
}

pub fn sprt_run<R: Rng + ?Sized>(
    config: SprtConfig,
    channel: &Channel,
    truth: Decision,
    rng: &mut R,
    transcript: Option<&mut Transcript>,
) -> Result<SprtOutcome> {
    Ok(Sprt::new(config, channel)?.run(truth, rng, transcript))
}

pub fn sprt_expected_time_bounds(config: SprtConfig, channel: &Channel) -> Result<(f64, f64)> {
    Sprt::new(config, channel)?.expected_time_bounds()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::HFunction;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config(a: f64) -> SprtConfig {
        SprtConfig {
            accept_threshold: a,
            reject_threshold: a,
            accept_symbol: false,
            reject_symbol: true,
            query_measure: 0.5,
        }
    }

    fn bsc(q: f64) -> Channel {
        Channel::bsc(HFunction::Constant { q }).unwrap()
    }

    #[test]
    fn noiseless_decides_in_one_step() {
        let sprt = Sprt::new(config(3.0), &Channel::noiseless()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for truth in [Decision::Accept, Decision::Reject] {
            for _ in 0..50 {
                let out = sprt.run(truth, &mut rng, None);
                assert_eq!(out.decision, truth);
                assert_eq!(out.steps, 1);
            }
        }
    }

    #[test]
    fn tiny_thresholds_follow_first_sign() {
        let sprt = Sprt::new(config(1e-12), &bsc(0.2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let mut t = Transcript::new();
            let out = sprt.run(Decision::Accept, &mut rng, Some(&mut t));
            assert_eq!(out.steps, 1);
            let expected = if t.responses()[0] == 0 { Decision::Accept } else { Decision::Reject };
            assert_eq!(out.decision, expected);
            assert_eq!(t.eavesdropper_view().queries(), &[QueryRecord::HypothesisTest]);
        }
    }

    #[test]
    fn decision_matches_final_llr() {
        let sprt = Sprt::new(config(2.5), &bsc(0.15)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let out = sprt.run(Decision::Reject, &mut rng, None);
            match out.decision {
                Decision::Accept => assert!(out.llr >= 2.5),
                Decision::Reject => assert!(out.llr <= -2.5),
            }
        }
    }

    #[test]
    fn zero_drift_is_rejected() {
        assert!(matches!(Sprt::new(config(3.0), &bsc(0.5)), Err(Error::Config(_))));
        assert!(Sprt::new(config(0.0), &bsc(0.1)).is_err());
        let same = SprtConfig { reject_symbol: false, ..config(1.0) };
        assert!(Sprt::new(same, &bsc(0.1)).is_err());
    }

    #[test]
    fn time_bounds() {
        let (acc, rej) = sprt_expected_time_bounds(config(3.0), &bsc(0.1)).unwrap();
        assert!((acc - rej).abs() < 1e-12);
        // two-point oracle: LLR = ±ln 9 with probabilities 0.9 / 0.1
        let (v, d) = (9f64.ln(), 0.8 * 9f64.ln());
        let mean = 0.9 * v - 0.1 * v;
        let b = (0.9 * v * v / mean).min(v);
        assert!((acc - (3.0 + b) / d).abs() < 1e-12);
    }

    #[test]
    fn seeded_walk_reproduces() {
        let sprt = Sprt::new(config(3.0), &bsc(0.2)).unwrap();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let mut t = Transcript::new();
            let out = sprt.run(Decision::Accept, &mut rng, Some(&mut t));
            (out, t)
        };
        assert_eq!(run(), run());
    }
}

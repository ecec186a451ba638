//! The full private query procedure: optional stop at time zero, stage-1
//! estimation, the accept/reject test, an optional second stage-1 pass, and
//! cloned sortPM inside the chosen first-level sub-interval.

use rand::Rng;

use crate::bounds::{solve_branch, stop_at_zero_probability, BranchRoot, RootPolicy};
use crate::cells::Partition;
use crate::channel::{is_saturated, Channel, ChannelConstants, InfoDensityTable};
use crate::error::{Error, Result};
use crate::rng::TrialRngs;
use crate::sprt::{Decision, Sprt, SprtConfig};
use crate::stage1::{run_estimation, Codebook, DecodeRule, InfoDensityMode, Stage1Params, Stage1State};
use crate::stage2::{run_stage2, Stage2Params};
use crate::transcript::Transcript;

pub use crate::cells::oracle_answer;

/// Estimate emitted when the procedure stops before its first query.
pub const STOP_AT_ZERO_ESTIMATE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ProcedureConfig {
    pub levels: u32,
    pub total_bins: u32,
    pub lambda1: f64,
    pub lambda2: f64,
    pub accept_threshold: f64,
    pub reject_threshold: f64,
    pub eps_prime: f64,
    pub eps0: f64,
    /// Cap `N0` on stage-2 queries.
    pub stage2_cap: u64,
    /// Cap on stage-1 queries over both passes.
    pub stage1_cap: u64,
    pub info_density_mode: InfoDensityMode,
    pub decode_rule: DecodeRule,
}

impl ProcedureConfig {
    /// A config with the given thresholds and default caps.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        levels: u32,
        total_bins: u32,
        lambda1: f64,
        lambda2: f64,
        accept_threshold: f64,
        reject_threshold: f64,
        eps_prime: f64,
        eps0: f64,
        constants: &ChannelConstants,
    ) -> Result<Self> {
        if levels == 0 || !total_bins.is_multiple_of(levels) {
            return Err(Error::Config(format!("L = {levels} must divide M = {total_bins}")));
        }
        let config = Self {
            levels,
            total_bins,
            lambda1,
            lambda2,
            accept_threshold,
            reject_threshold,
            eps_prime,
            eps0,
            stage2_cap: default_stage2_cap(total_bins / levels, eps_prime, constants),
            stage1_cap: default_stage1_cap(lambda2, constants),
            info_density_mode: InfoDensityMode::default(),
            decode_rule: DecodeRule::default(),
        };
        config.validate()?;
        Ok(config)
    }

    /// Default thresholds, `ε0` chosen so the overall error is `eps`.
    pub fn from_thresholds(
        levels: u32,
        total_bins: u32,
        thresholds: &Thresholds,
        eps: f64,
        eps_prime: f64,
        constants: &ChannelConstants,
    ) -> Result<Self> {
        let mut config = Self::new(
            levels,
            total_bins,
            thresholds.lambda1,
            thresholds.lambda2,
            thresholds.accept,
            thresholds.reject,
            eps_prime,
            0.0,
            constants,
        )?;
        config.eps0 = stop_at_zero_probability(eps, config.eps_bar());
        Ok(config)
    }

    pub fn partition(&self) -> Partition {
        Partition::new(self.levels, self.total_bins / self.levels)
    }

    pub fn bins_per_level(&self) -> u32 {
        self.total_bins / self.levels
    }

    pub fn resolution(&self) -> f64 {
        1.0 / self.total_bins as f64
    }

    /// `ε̄ = (L−1)(e^{−λ1−a_A} + e^{−λ2}) + ε′`.
    pub fn eps_bar(&self) -> f64 {
        (self.levels as f64 - 1.0) * ((-self.lambda1 - self.accept_threshold).exp() + (-self.lambda2).exp())
            + self.eps_prime
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.levels < 2 || self.levels >= self.total_bins {
            return bad(format!("need 2 ≤ L ≤ M−1, got L = {}, M = {}", self.levels, self.total_bins));
        }
        if !self.total_bins.is_multiple_of(self.levels) {
            return bad(format!("L = {} must divide M = {}", self.levels, self.total_bins));
        }
        if !(self.lambda1.is_finite() && self.lambda2.is_finite() && self.lambda1 < self.lambda2) {
            return bad(format!("need λ1 < λ2, got {} and {}", self.lambda1, self.lambda2));
        }
        if !(self.accept_threshold > 0.0 && self.reject_threshold > 0.0) {
            return bad("SPRT thresholds must be positive".into());
        }
        if !(self.eps_prime > 0.0 && self.eps_prime < 1.0) {
            return bad(format!("ε′ = {} must lie in (0, 1)", self.eps_prime));
        }
        if !(0.0..=1.0).contains(&self.eps0) {
            return bad(format!("ε0 = {} must lie in [0, 1]", self.eps0));
        }
        if self.stage1_cap == 0 {
            return bad("stage-1 cap must be positive".into());
        }
        Ok(())
    }
}

/// `⌈20(λ2 + b)/C⌉`, at least 100.
pub fn default_stage1_cap(lambda2: f64, constants: &ChannelConstants) -> u64 {
    ((20.0 * (lambda2 + constants.b) / constants.capacity).ceil() as u64).max(100)
}

/// `N0 = ⌈10(log K / C + log(1/ε′)/C̃)⌉`.
pub fn default_stage2_cap(bins_per_level: u32, eps_prime: f64, constants: &ChannelConstants) -> u64 {
    let tilde = if is_saturated(constants.c_tilde) { 0.0 } else { (1.0 / eps_prime).ln() / constants.c_tilde };
    let t = (bins_per_level as f64).ln() / constants.capacity + tilde;
    ((10.0 * t).ceil() as u64).max(1)
}

/// Thresholds driven by `N†`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub n_dagger: BranchRoot,
    pub lambda1: f64,
    pub lambda2: f64,
    pub accept: f64,
    pub reject: f64,
}

/// `λ1 = log L + log log N†`, `λ2 = log L + log N†`, `a_A = a_R = log N†`.
///
/// When `log L = C·N − log log N` has no root beyond `e`, the branch start
/// stands in for `N†` and `n_dagger.exact` is false.
pub fn default_thresholds(levels: u32, capacity: f64) -> Result<Thresholds> {
    let n_dagger = solve_branch(levels, capacity, 0.0, RootPolicy::BranchStart)?;
    let (l, n) = ((levels as f64).ln(), n_dagger.value);
    Ok(Thresholds {
        n_dagger,
        lambda1: l + n.ln().ln(),
        lambda2: l + n.ln(),
        accept: n.ln(),
        reject: n.ln(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterChoice {
    pub thresholds: Thresholds,
    pub bins_per_level: u32,
    pub total_bins: u32,
    /// `log(M/L) − (C·N2 − (C/C̃)·log(1/ε′))` after rounding `M/L` to a power of two.
    pub budget_residual: f64,
}

/// Thresholds plus `M` sized for a stage-2 budget of `n2_target` queries.
pub fn select_parameters(
    levels: u32,
    eps_prime: f64,
    n2_target: f64,
    constants: &ChannelConstants,
) -> Result<ParameterChoice> {
    if !(eps_prime > 0.0 && eps_prime < 1.0) {
        return Err(Error::Domain(format!("ε′ = {eps_prime} must lie in (0, 1)")));
    }
    let thresholds = default_thresholds(levels, constants.capacity)?;
    let target = constants.capacity * n2_target - constants.rate_ratio() * (1.0 / eps_prime).ln();
    let exponent = (target / std::f64::consts::LN_2).round().clamp(1.0, 31.0) as u32;
    let bins_per_level = 1u32 << exponent;
    let total_bins = bins_per_level
        .checked_mul(levels)
        .ok_or_else(|| Error::Domain(format!("M = {levels}·2^{exponent} does not fit in 32 bits")))?;
    Ok(ParameterChoice {
        thresholds,
        bins_per_level,
        total_bins,
        budget_residual: (bins_per_level as f64).ln() - target,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
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
    /// A stage cap was reached; the trial counts as an excess-resolution event.
    pub cap_hit: bool,
    pub transcript: Transcript,
}

impl TrialResult {
    pub fn excess_resolution(&self, delta: f64) -> bool {
        self.stopped_at_zero || self.cap_hit || self.abs_err > delta
    }
}

/// A configured procedure with channel quantities precomputed.
#[derive(Debug, Clone)]
pub struct Procedure {
    config: ProcedureConfig,
    channel: Channel,
    constants: ChannelConstants,
    nominal: InfoDensityTable,
    sprt: Sprt,
}

impl Procedure {
    pub fn new(config: ProcedureConfig, channel: Channel) -> Result<Self> {
        config.validate()?;
        let constants = ChannelConstants::compute(&channel)?;
        let nominal = channel.at(constants.p_star)?.info_density_table(constants.p_star)?;
        let sprt = Sprt::new(
            SprtConfig::from_constants(&constants, config.accept_threshold, config.reject_threshold),
            &channel,
        )?;
        Ok(Self { config, channel, constants, nominal, sprt })
    }

    pub fn config(&self) -> &ProcedureConfig {
        &self.config
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    pub fn constants(&self) -> &ChannelConstants {
        &self.constants
    }

    pub fn run_trial(&self, s: f64, rngs: TrialRngs) -> Result<TrialResult> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain(format!("target {s} outside [0, 1]")));
        }
        let TrialRngs { codebook, mut noise, mut stop } = rngs;
        let cfg = &self.config;
        let partition = cfg.partition();
        let mut transcript = Transcript::new();

        if stop.gen::<f64>() < cfg.eps0 {
            return Ok(TrialResult {
                s,
                s_hat: STOP_AT_ZERO_ESTIMATE,
                abs_err: (STOP_AT_ZERO_ESTIMATE - s).abs(),
                tau_total: 0,
                tau_stage1: 0,
                tau_sprt: 0,
                tau_stage2: 0,
                stopped_at_zero: true,
                w1_correct: false,
                w2_correct: false,
                cap_hit: false,
                transcript,
            });
        }

        let levels = cfg.levels as usize;
        let true_first = partition.first_level_of(s) as usize;
        let mut codebook = Codebook::new(levels, self.constants.p_star, codebook);
        let mut state = Stage1State::new(levels);
        let params = |threshold| Stage1Params {
            threshold,
            cap: cfg.stage1_cap,
            mode: cfg.info_density_mode,
            rule: cfg.decode_rule,
        };
        let first = run_estimation(
            &mut state,
            &mut codebook,
            &self.channel,
            &self.nominal,
            s,
            params(cfg.lambda1),
            &mut noise,
            &mut transcript,
        )?;
        let mut estimate = first.estimate;
        let mut cap_hit = first.cap_hit;
        let mut tau_sprt = 0;
        if !cap_hit {
            let truth = if first.estimate == true_first { Decision::Accept } else { Decision::Reject };
            let test = self.sprt.run(truth, &mut noise, Some(&mut transcript));
            tau_sprt = test.steps;
            if test.decision == Decision::Reject {
                let second = run_estimation(
                    &mut state,
                    &mut codebook,
                    &self.channel,
                    &self.nominal,
                    s,
                    params(cfg.lambda2),
                    &mut noise,
                    &mut transcript,
                )?;
                estimate = second.estimate;
                cap_hit = second.cap_hit;
            }
        }
        let tau_stage1 = state.queries();

        let stage2 = run_stage2(
            &self.channel,
            partition,
            s,
            Stage2Params { eps_prime: cfg.eps_prime, cap: cfg.stage2_cap },
            &mut noise,
            Some(&mut transcript),
        )?;
        let s_hat = partition.center(estimate as u32, stage2.estimate as u32);
        let tau_total = tau_stage1 + tau_sprt + stage2.tau;
        debug_assert_eq!(tau_total as usize, transcript.len());
        Ok(TrialResult {
            s,
            s_hat,
            abs_err: (s_hat - s).abs(),
            tau_total,
            tau_stage1,
            tau_sprt,
            tau_stage2: stage2.tau,
            stopped_at_zero: false,
            w1_correct: estimate == true_first,
            w2_correct: stage2.estimate == partition.offset_of(s) as usize,
            cap_hit: cap_hit || stage2.cap_hit,
            transcript,
        })
    }

    pub fn run_seeded(&self, s: f64, master_seed: u64, trial: u64) -> Result<TrialResult> {
        self.run_trial(s, TrialRngs::derive(master_seed, trial))
    }
}

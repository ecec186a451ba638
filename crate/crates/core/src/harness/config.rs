//! Experiment configuration files.
//!
//! ```toml
//! [experiment]
//! trials = 10000
//! master_seed = 7
//!
//! [channel]
//! kind = "bsc"
//! h = { type = "constant", q = 0.1 }
//!
//! [procedure]
//! levels = 2
//! total_bins = 32
//! eps = 0.1
//! eps_prime = 0.05
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{stage2_asymptotic_time, stage2_mean_passage_time};
use crate::channel::{Channel, ChannelConstants, HFunction, MatrixFamily};
use crate::eavesdropper::AdversaryStrategy;
use crate::error::{Error, Result};
use crate::procedure::{default_thresholds, select_parameters, ProcedureConfig};
use crate::stage1::{DecodeRule, InfoDensityMode};

/// Overrides the configured output directory when set.
pub const OUT_DIR_ENV: &str = "TWENTYQ_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub channel: ChannelSpec,
    pub procedure: ProcedureSpec,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub sweep: SweepAxes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    #[default]
    Uniform,
    /// Every cell center, then every cell boundary, cycled.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub trials: u64,
    pub master_seed: u64,
    /// Not part of the config hash, nor is `output_dir`.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    #[serde(default = "default_output_dir", skip_serializing)]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub targets: TargetMode,
    #[serde(default = "default_adversaries")]
    pub adversaries: Vec<AdversaryStrategy>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_adversaries() -> Vec<AdversaryStrategy> {
    AdversaryStrategy::ALL.to_vec()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Bsc,
    Noiseless,
    Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixKnot {
    pub at: f64,
    pub rows: [Vec<f64>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    #[serde(default)]
    pub h: Option<HFunction>,
    #[serde(default)]
    pub knots: Vec<MatrixKnot>,
}

impl ChannelSpec {
    pub fn bsc(h: HFunction) -> Self {
        Self { kind: ChannelKind::Bsc, h: Some(h), knots: Vec::new() }
    }

    pub fn build(&self) -> Result<Channel> {
        match self.kind {
            ChannelKind::Bsc => {
                let h = self.h.ok_or_else(|| Error::Config("channel.kind = \"bsc\" needs channel.h".into()))?;
                Channel::bsc(h)
            }
            ChannelKind::Noiseless => Ok(Channel::noiseless()),
            ChannelKind::Matrix => Ok(Channel::Matrix(MatrixFamily::new(
                self.knots.iter().map(|k| (k.at, k.rows.clone())).collect(),
            )?)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage2TimeSpec {
    #[default]
    Asymptotic,
    Mc,
}

/// Procedure block. Unset thresholds come from the `N†` rule, an unset `M`
/// from `n2_target`, and an unset `eps0` from the target error `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcedureSpec {
    pub levels: u32,
    #[serde(default)]
    pub total_bins: Option<u32>,
    #[serde(default)]
    pub n2_target: Option<f64>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub eps_prime: Option<f64>,
    #[serde(default)]
    pub eps0: Option<f64>,
    #[serde(default)]
    pub lambda1: Option<f64>,
    #[serde(default)]
    pub lambda2: Option<f64>,
    #[serde(default)]
    pub accept_threshold: Option<f64>,
    #[serde(default)]
    pub reject_threshold: Option<f64>,
    #[serde(default)]
    pub stage1_cap: Option<u64>,
    #[serde(default)]
    pub stage2_cap: Option<u64>,
    #[serde(default)]
    pub info_density_mode: InfoDensityMode,
    #[serde(default)]
    pub decode_rule: DecodeRule,
}

fn default_eps() -> f64 {
    0.1
}

impl ProcedureSpec {
    pub fn eps_prime(&self) -> f64 {
        self.eps_prime.unwrap_or(self.eps / 2.0)
    }

    pub fn resolve(&self, constants: &ChannelConstants) -> Result<ProcedureConfig> {
        let eps_prime = self.eps_prime();
        let total_bins = match (self.total_bins, self.n2_target) {
            (Some(m), None) => m,
            (None, Some(n2)) => select_parameters(self.levels, eps_prime, n2, constants)?.total_bins,
            _ => return Err(Error::Config("procedure needs exactly one of total_bins and n2_target".into())),
        };
        if self.levels == 0 || total_bins % self.levels != 0 {
            return Err(Error::Config(format!("levels = {} must divide total_bins = {total_bins}", self.levels)));
        }
        let t = default_thresholds(self.levels, constants.capacity)?;
        let mut cfg = ProcedureConfig::new(
            self.levels,
            total_bins,
            self.lambda1.unwrap_or(t.lambda1),
            self.lambda2.unwrap_or(t.lambda2),
            self.accept_threshold.unwrap_or(t.accept),
            self.reject_threshold.unwrap_or(t.reject),
            eps_prime,
            0.0,
            constants,
        )?;
        cfg.eps0 = match self.eps0 {
            Some(e) => e,
            None => crate::bounds::stop_at_zero_probability(self.eps, cfg.eps_bar()),
        };
        if let Some(c) = self.stage1_cap {
            cfg.stage1_cap = c;
        }
        if let Some(c) = self.stage2_cap {
            cfg.stage2_cap = c;
        }
        cfg.info_density_mode = self.info_density_mode;
        cfg.decode_rule = self.decode_rule;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    #[serde(default)]
    pub stage2_time: Stage2TimeSpec,
    #[serde(default = "default_mc_trials")]
    pub mc_trials: u64,
}

fn default_mc_trials() -> u64 {
    10_000
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self { stage2_time: Stage2TimeSpec::default(), mc_trials: default_mc_trials() }
    }
}

impl BoundsSection {
    pub fn stage2_time(
        &self,
        channel: &Channel,
        config: &ProcedureConfig,
        constants: &ChannelConstants,
        seed: u64,
    ) -> Result<f64> {
        match self.stage2_time {
            Stage2TimeSpec::Asymptotic => Ok(stage2_asymptotic_time(config.bins_per_level(), config.eps_prime, constants)),
            Stage2TimeSpec::Mc => stage2_mean_passage_time(
                channel,
                config.partition(),
                config.eps_prime,
                config.stage2_cap,
                self.mc_trials,
                seed,
            ),
        }
    }
}

/// Sweep axes; the Cartesian product runs in the order listed here, the
/// first axis outermost.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    #[serde(default)]
    pub levels: Vec<u32>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub n2_target: Vec<f64>,
    #[serde(default)]
    pub h: Vec<HFunction>,
}

impl SweepAxes {
    pub fn is_empty(&self) -> bool {
        self.levels.is_empty() && self.eps.is_empty() && self.n2_target.is_empty() && self.h.is_empty()
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Checks everything that can be checked without running trials.
    pub fn validate(&self) -> Result<()> {
        if self.experiment.trials == 0 {
            return Err(Error::Config("experiment.trials must be positive".into()));
        }
        if self.experiment.workers == Some(0) {
            return Err(Error::Config("experiment.workers must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.procedure.eps) {
            return Err(Error::Config(format!("procedure.eps = {} must lie in [0, 1)", self.procedure.eps)));
        }
        let channel = self.channel.build()?;
        let constants = ChannelConstants::compute(&channel)?;
        self.procedure.resolve(&constants)?;
        Ok(())
    }

    /// The output directory after applying the environment override.
    pub fn output_dir(&self) -> PathBuf {
        std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| self.experiment.output_dir.clone())
    }

    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
[experiment]
trials = 100
master_seed = 1

[channel]
kind = "bsc"
h = { type = "constant", q = 0.1 }

[procedure]
levels = 2
total_bins = 32
"#;

    #[test]
    fn parses_and_resolves() {
        let cfg = ExperimentConfig::from_toml(BASIC).unwrap();
        assert_eq!(cfg.experiment.adversaries.len(), 2);
        assert_eq!(cfg.procedure.eps_prime(), 0.05);
        let ch = cfg.channel.build().unwrap();
        let k = ChannelConstants::compute(&ch).unwrap();
        let p = cfg.procedure.resolve(&k).unwrap();
        assert_eq!(p.total_bins, 32);
        assert!(p.lambda1 < p.lambda2);
    }

    #[test]
    fn unknown_key_reports_position() {
        let text = BASIC.replace("levels = 2", "levels = 2\nlevles = 3");
        let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("levles") && err.contains("line"), "{err}");
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(ExperimentConfig::from_toml(&BASIC.replace("total_bins = 32", "total_bins = 33")).is_err());
        assert!(ExperimentConfig::from_toml(&BASIC.replace("q = 0.1", "q = 0.7")).is_err());
        assert!(ExperimentConfig::from_toml(&BASIC.replace("trials = 100", "trials = 0")).is_err());
        assert!(ExperimentConfig::from_toml(&BASIC.replace("total_bins = 32", "n2_target = 20.0")).is_ok());
    }

    #[test]
    fn hash_is_stable() {
        let a = ExperimentConfig::from_toml(BASIC).unwrap();
        let b = ExperimentConfig::from_toml(&BASIC.replace("master_seed = 1", "master_seed = 1 # same")).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig::from_toml(&BASIC.replace("master_seed = 1", "master_seed = 2")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}

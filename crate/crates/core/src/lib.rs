//! Private noisy twenty questions.
//!
//! A player locates a target `s` in `[0, 1]` by asking a noisy oracle whether
//! `s` lies in chosen sets, while an eavesdropper who sees every query (but
//! not the answers) tries to guess where `s` is. Queries are built so the
//! eavesdropper cannot tell which of `L` sub-intervals holds the target.
//!
//! The search runs in two stages:
//!
//! * [`stage1`] estimates the first-level interval with a random codebook,
//! * [`sprt`] confirms that estimate with a sequential test,
//! * [`stage2`] refines inside the interval with sortPM queries cloned into
//!   all `L` intervals.
//!
//! [`procedure::Procedure`] ties the stages together. [`bounds`] evaluates the
//! non-asymptotic query bound and the resolution curves, [`eavesdropper`]
//! scores adversaries against the privacy guarantee, and [`harness`] drives
//! config-file experiments and writes CSV.
//!
//! ```
//! use private_twentyq::channel::{Channel, ChannelConstants, HFunction};
//! use private_twentyq::procedure::{Procedure, ProcedureConfig};
//!
//! let ch = Channel::bsc(HFunction::constant(0.1).unwrap()).unwrap();
//! let k = ChannelConstants::compute(&ch).unwrap();
//! let cfg = ProcedureConfig::new(2, 32, 6.0, 12.0, 4.0, 4.0, 0.05, 0.0, &k).unwrap();
//! let r = Procedure::new(cfg, ch).unwrap().run_seeded(0.3, 1, 0).unwrap();
//! assert!(r.tau_total > 0);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cells;
pub mod channel;
pub mod eavesdropper;
pub mod error;
pub mod procedure;
pub mod rng;
pub mod sprt;
pub mod stage1;
pub mod stage2;
pub mod transcript;
pub mod harness;
pub mod selftest;

pub use error::{Error, Result};

//! Expected-query bound for a concrete configuration and the resolution curves.
//!
//! ```bash
//! cargo run --example bounds
//! ```

use private_twentyq::bounds::{noiseless_benchmark, stage2_asymptotic_time, query_bound};
use private_twentyq::channel::{Channel, ChannelConstants, HFunction};
use private_twentyq::harness::figures::{figure3, figure5};
use private_twentyq::procedure::{select_parameters, ProcedureConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ch = Channel::bsc(HFunction::constant(0.1)?)?;
    let k = ChannelConstants::compute(&ch)?;
    let choice = select_parameters(4, 0.05, 30.0, &k)?;
    let cfg = ProcedureConfig::from_thresholds(4, choice.total_bins, &choice.thresholds, 0.2, 0.05, &k)?;
    let e_tau = stage2_asymptotic_time(cfg.bins_per_level(), cfg.eps_prime, &k);
    let bound = query_bound(&cfg, &k, e_tau);
    println!("M = {}, bound N = {:.2}, eps = {:.4}", cfg.total_bins, bound.n, bound.eps);
    let names = ["first est.", "second est.", "test accept", "test reject", "stage2 time", "stage2 pen."];
    for (name, v) in names.iter().zip(bound.terms.as_array()) {
        println!("  {name:<12} {v:>10.3}");
    }

    for p in figure3(&[100.0, 500.0, 1000.0])? {
        println!("L={:<2} N={:<5} -log delta {:.3} nats", p.levels, p.n, p.neg_log_delta);
    }
    let (_, rows) = figure5(&[2, 4, 8])?;
    for r in rows {
        println!("noiseless L={:<2} benchmark {:.2}  ours {:.2} bits", r.levels, r.benchmark, r.ours);
    }
    println!("check: {:.3}", noiseless_benchmark(100.0, 2));
    Ok(())
}

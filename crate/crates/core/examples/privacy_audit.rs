//! Runs many trials and checks the eavesdropper's hit rates against `(2k-1)/L`.
//!
//! ```bash
//! cargo run --release --example privacy_audit
//! ```

use private_twentyq::harness::config::ExperimentConfig;
use private_twentyq::harness::simulate;

const CONFIG: &str = r#"
[experiment]
trials = 5000
master_seed = 99

[channel]
kind = "bsc"
h = { type = "constant", q = 0.1 }

[procedure]
levels = 4
total_bins = 64
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let sim = simulate(&cfg)?;
    println!("excess-resolution probability {:.4}", sim.aggregate.excess_prob);
    for (strategy, report) in &sim.privacy {
        for row in &report.rows {
            println!(
                "{:<17} k={} hit {:.4} [{:.4}, {:.4}] bound {:.4} {}",
                strategy.as_str(),
                row.k,
                row.empirical,
                row.ci_lo,
                row.ci_hi,
                row.bound,
                if row.pass { "ok" } else { "over" }
            );
        }
    }
    let ind = &sim.independence;
    println!("pattern vs first level: chi2 {:.3}, dof {}, p {:.4}", ind.statistic, ind.dof, ind.p_value);
    Ok(())
}

//! A small sweep over privacy level and target error, written to a temp directory.
//!
//! ```bash
//! cargo run --release --example campaign
//! ```

use private_twentyq::harness::config::ExperimentConfig;
use private_twentyq::harness::sweep;

const CONFIG: &str = r#"
[experiment]
trials = 1000
master_seed = 2

[channel]
kind = "bsc"
h = { type = "affine", c0 = 0.1, c1 = 0.3 }

[procedure]
levels = 2
n2_target = 30.0
eps = 0.2

[sweep]
levels = [2, 4, 8]
eps = [0.1, 0.3]
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let dir = std::env::temp_dir().join("twentyq-campaign");
    let table = sweep(&cfg, &dir, false)?;
    let cols = ["L", "eps", "M", "excess_prob", "mean_tau_total", "bound_n"];
    let idx: Vec<usize> = cols.iter().map(|c| table.column(c).unwrap()).collect();
    println!("{}", cols.join("\t"));
    for row in &table.rows {
        let cells: Vec<&str> = idx.iter().map(|&i| row[i].as_str()).collect();
        println!("{}", cells.join("\t"));
    }
    println!("written to {}", dir.display());
    Ok(())
}

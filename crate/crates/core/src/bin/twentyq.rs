use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use private_twentyq::bounds::query_bound;
use private_twentyq::channel::ChannelConstants;
use private_twentyq::error::Result;
use private_twentyq::harness::figures::{query_bound_table, write_figure};
use private_twentyq::harness::{simulate_to_dir, sweep, ExperimentConfig};
use private_twentyq::selftest;

#[derive(Parser)]
#[command(name = "twentyq", version, about = "Private noisy twenty questions: simulation and bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo campaign and write trials, aggregate and privacy CSVs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Evaluate the bounds for a config, or regenerate one figure's data.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(3..=5))]
        figure: Option<u8>,
    },
    /// Run the Cartesian product of the config's sweep axes.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        resume: bool,
    },
    /// Run the acceptance checks.
    Selftest,
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate { config, trials, seed, workers } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(t) = trials {
                cfg.experiment.trials = t;
            }
            if let Some(s) = seed {
                cfg.experiment.master_seed = s;
            }
            if workers.is_some() {
                cfg.experiment.workers = workers;
            }
            cfg.validate()?;
            let out = cfg.output_dir();
            let sim = simulate_to_dir(&cfg, &out)?;
            let a = &sim.aggregate;
            println!(
                "{} trials: excess-resolution {:.4} [{:.4}, {:.4}], mean queries {:.2}; bound ε {:.4}, N {:.2}",
                a.trials, a.excess_prob, a.ci_lo, a.ci_hi, a.mean_tau_total, sim.bound.eps, sim.bound.n
            );
            println!("wrote {}", out.display());
        }
        Command::Bounds { config, figure } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = cfg.output_dir();
            match figure {
                Some(f) => {
                    for p in write_figure(f, &out, &cfg.hash())? {
                        println!("wrote {}", p.display());
                    }
                }
                None => {
                    let channel = cfg.channel.build()?;
                    let k = ChannelConstants::compute(&channel)?;
                    let pc = cfg.procedure.resolve(&k)?;
                    let e_tau = cfg.bounds.stage2_time(&channel, &pc, &k, cfg.experiment.master_seed)?;
                    let bound = query_bound(&pc, &k, e_tau);
                    std::fs::create_dir_all(&out)?;
                    let path = out.join("bounds_t1.csv");
                    query_bound_table(&pc, &bound).write(&path, &[("config_hash", cfg.hash())])?;
                    println!("N̄ {:.3}, ε̄ {:.4}, N {:.3}, ε {:.4}", bound.n_bar, bound.eps_bar, bound.n, bound.eps);
                    println!("wrote {}", path.display());
                }
            }
        }
        Command::Sweep { config, resume } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = cfg.output_dir();
            let table = sweep(&cfg, &out, resume)?;
            println!("{} cells; wrote {}", table.rows.len(), out.join("sweep.csv").display());
        }
        Command::Selftest => {
            let mut all = true;
            for id in 1..=10 {
                let r = selftest::run_criterion(id);
                println!("{r}");
                all &= r.passed;
            }
            return Ok(all);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

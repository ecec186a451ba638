//! Random-coding first-level estimation on its own, repeated over many targets.
//!
//! ```bash
//! cargo run --example stage1_estimation
//! ```

use private_twentyq::cells::Partition;
use private_twentyq::channel::{Channel, ChannelConstants, HFunction};
use private_twentyq::rng::{stream_rng, Stream};
use private_twentyq::stage1::{run_estimation, Codebook, DecodeRule, InfoDensityMode, Stage1Params, Stage1State};
use private_twentyq::transcript::Transcript;
use rand::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let levels = 8u32;
    let ch = Channel::bsc(HFunction::constant(0.1)?)?;
    let k = ChannelConstants::compute(&ch)?;
    let nominal = ch.at(k.p_star)?.info_density_table(k.p_star)?;
    let partition = Partition::new(levels, levels * 4);

    for threshold in [2.0, 4.0, 8.0] {
        let params = Stage1Params {
            threshold,
            cap: 10_000,
            mode: InfoDensityMode::Nominal,
            rule: DecodeRule::MaxIndex,
        };
        let (mut correct, mut queries) = (0, 0);
        let trials = 2000;
        for t in 0..trials {
            let s: f64 = stream_rng(7, t, Stream::Target).gen();
            let mut book = Codebook::new(levels as usize, k.p_star, stream_rng(7, t, Stream::Codebook));
            let mut state = Stage1State::new(levels as usize);
            let mut transcript = Transcript::new();
            let mut noise = stream_rng(7, t, Stream::Noise);
            let out = run_estimation(&mut state, &mut book, &ch, &nominal, s, params, &mut noise, &mut transcript)?;
            if out.estimate as u32 == partition.first_level_of(s) {
                correct += 1;
            }
            queries += out.tau;
        }
        println!(
            "threshold {threshold:>4}: accuracy {:.4}, mean queries {:.2}",
            correct as f64 / trials as f64,
            queries as f64 / trials as f64
        );
    }
    Ok(())
}

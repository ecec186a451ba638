//! Capacity, capacity-achieving bias and the test constants for a few channels.
//!
//! ```bash
//! cargo run --example channel_constants
//! ```

use private_twentyq::channel::{Channel, ChannelConstants, HFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let channels = [
        ("bsc q=0.1", Channel::bsc(HFunction::constant(0.1)?)?),
        ("bsc q=0.25", Channel::bsc(HFunction::constant(0.25)?)?),
        ("affine 0.1+0.3p", Channel::bsc(HFunction::affine(0.1, 0.3)?)?),
        ("noiseless", Channel::noiseless()),
    ];
    println!("{:<18} {:>9} {:>7} {:>12} {:>9}", "channel", "C (nats)", "p*", "C~", "b");
    for (name, ch) in &channels {
        let k = ChannelConstants::compute(ch)?;
        println!("{:<18} {:>9.5} {:>7.4} {:>12.5} {:>9.4}", name, k.capacity, k.p_star, k.c_tilde, k.b);
    }

    let ch = Channel::bsc(HFunction::affine(0.1, 0.3)?)?;
    for p in [0.1, 0.3, 0.5] {
        println!("I(p={p}) = {:.5}", ch.mutual_information(p)?);
    }
    Ok(())
}

//! Cloned sortPM refinement inside a known first-level interval.
//!
//! ```bash
//! cargo run --example sortpm_stage2
//! ```

use private_twentyq::cells::Partition;
use private_twentyq::channel::{Channel, HFunction};
use private_twentyq::stage2::{run_stage2, Stage2Params};
use private_twentyq::transcript::Transcript;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ch = Channel::bsc(HFunction::constant(0.1)?)?;
    let partition = Partition::new(4, 4 * 64);
    let params = Stage2Params { eps_prime: 0.01, cap: 5000 };
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    let s: f64 = rng.gen();
    let mut transcript = Transcript::new();
    let out = run_stage2(&ch, partition, s, params, &mut rng, Some(&mut transcript))?;
    println!("target {s:.6}: true offset {}, estimate {}", partition.offset_of(s), out.estimate);
    println!("queries {}, confidence {:.4}", out.tau, out.confidence);
    let view = transcript.eavesdropper_view();
    if let Some(q) = view.stage2_queries().last() {
        println!("last query touches {} cells, measure {:.4}", q.len(), q.measure());
    }

    let (mut hits, n) = (0, 1000);
    for _ in 0..n {
        let s: f64 = rng.gen();
        let out = run_stage2(&ch, partition, s, params, &mut rng, None)?;
        hits += (out.estimate as u32 == partition.offset_of(s)) as u32;
    }
    println!("offset accuracy over {n} targets: {:.4}", hits as f64 / n as f64);
    Ok(())
}

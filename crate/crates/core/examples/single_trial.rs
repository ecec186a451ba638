//! One full search, then what an eavesdropper sees of it.
//!
//! ```bash
//! cargo run --example single_trial
//! ```

use private_twentyq::channel::{Channel, ChannelConstants, HFunction};
use private_twentyq::eavesdropper::{final_pattern, Adversary, AdversaryStrategy};
use private_twentyq::procedure::{default_thresholds, Procedure, ProcedureConfig};
use private_twentyq::rng::{stream_rng, Stream};
use private_twentyq::transcript::QueryRecord;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ch = Channel::bsc(HFunction::constant(0.1)?)?;
    let k = ChannelConstants::compute(&ch)?;
    let t = default_thresholds(4, k.capacity)?;
    let cfg = ProcedureConfig::from_thresholds(4, 128, &t, 0.2, 0.05, &k)?;
    println!("lambda1 {:.3}  lambda2 {:.3}  a {:.3}  eps0 {:.4}", cfg.lambda1, cfg.lambda2, cfg.accept_threshold, cfg.eps0);
    let partition = cfg.partition();
    let proc = Procedure::new(cfg, ch)?;

    let s = 0.613;
    let r = proc.run_seeded(s, 5, 0)?;
    println!("s = {s}, estimate {:.6}, |error| {:.2e}", r.s_hat, r.abs_err);
    println!(
        "queries: stage1 {} + test {} + stage2 {} = {}",
        r.tau_stage1, r.tau_sprt, r.tau_stage2, r.tau_total
    );
    println!("first level right: {}, offset right: {}", r.w1_correct, r.w2_correct);

    let (mut s1, mut ht, mut s2) = (0, 0, 0);
    for (q, _) in r.transcript.records() {
        match q {
            QueryRecord::Stage1(_) => s1 += 1,
            QueryRecord::HypothesisTest => ht += 1,
            QueryRecord::Stage2(_) => s2 += 1,
        }
    }
    println!("transcript: {s1} codebook, {ht} test, {s2} cloned queries");

    let view = r.transcript.eavesdropper_view();
    println!("final cloned pattern: {:?}", final_pattern(&view, partition));
    for strategy in AdversaryStrategy::ALL {
        let mut rng = stream_rng(5, 0, Stream::Adversary);
        let guess = strategy.estimate(&view, partition, &mut rng);
        println!("{:<17} guesses {guess:.4} (distance {:.4})", strategy.name(), (guess - s).abs());
    }
    Ok(())
}

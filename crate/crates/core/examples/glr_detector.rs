// Bernoulli GLR on a single [0, 1] stream whose mean jumps from 0.1 to 0.5.

use bqcd::detectors::{bernoulli_kl, GlrArm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> bqcd::Result<()> {
    println!("kl(0.5, 0.1) = {:.4}", bernoulli_kl(0.5, 0.1)?);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut arm = GlrArm::new();
    let threshold = 8.0;
    for m in 1..=1_000usize {
        let p = if m <= 200 { 0.1 } else { 0.5 };
        let x = if rng.random_bool(p) { 1.0 } else { 0.0 };
        let g = arm.append(x)?;
        if m % 50 == 0 || g >= threshold {
            println!(
                "m={m:4} G={g:7.3} reward={:.4} increment variance={:?}",
                arm.normalized_reward(),
                arm.increment_variance()
            );
        }
        if g >= threshold {
            println!("alarm after {} post-change samples", m - 200);
            break;
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

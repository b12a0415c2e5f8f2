// The restarted UCB rule on three Gaussian reward streams. Bookkeeping is
// wiped every `window` steps, so every arm is tried again after a restart.

use bqcd::policies::{llr_bonus_scale, UcbPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn run_example() -> bqcd::Result<()> {
    let means = [-0.5, 0.0, 0.5];
    let window = 30;
    let mut policy = UcbPolicy::new(means.len(), window, llr_bonus_scale(1.0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut total = [0u64; 3];
    for _ in 0..(4 * window) {
        let a = policy.select();
        let noise: f64 = rng.sample(StandardNormal);
        total[a] += 1;
        if policy.observe(a, means[a] + noise) {
            println!("restart #{}: pulls so far {total:?}", policy.restarts());
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

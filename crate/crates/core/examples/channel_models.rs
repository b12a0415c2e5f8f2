// Observation models: densities, per-sample LLRs, KL divergences and the
// sub-Gaussian constant that scales the UCB bonus.

use bqcd::channels::{subgaussian_bound, ChannelModel, DistributionSpec, Regime};
use bqcd::cli::{preset, PRESETS};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> bqcd::Result<()> {
    let shifted = ChannelModel::with_shift(DistributionSpec::gaussian(0.0, 1.0)?, 1.0)?;
    for x in [-1.0, 0.0, 0.5, 1.0, 2.0] {
        println!("gaussian 0 -> 1: llr({x:+.1}) = {:+.3}", shifted.llr(x)?);
    }
    println!("KL = {}", shifted.kl_divergence());

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let beta = ChannelModel::with_shift(DistributionSpec::beta(0.02, 1.98)?, 0.19)?;
    println!("beta post law: {:?}", beta.post());
    let draws: Vec<f64> = (0..5).map(|_| beta.sample(Regime::Post, &mut rng)).collect();
    println!("post draws {draws:.4?}");

    for name in PRESETS {
        let sc = preset(name)?;
        let v = subgaussian_bound(sc.channels())?;
        println!(
            "{name:>14}: information rate {:.4}, v = {:.4}",
            sc.information_rate(),
            v.value()
        );
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

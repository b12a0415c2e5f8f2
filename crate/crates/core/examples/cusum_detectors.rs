// Global and per-action CuSum fed by LLRs from two channels, only one of
// which changes.

use bqcd::channels::{ChannelModel, DistributionSpec, Regime};
use bqcd::detectors::{AlarmDecision, GlobalCusum, PerActionCusum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> bqcd::Result<()> {
    let pre = DistributionSpec::gaussian(0.0, 1.0)?;
    let channels = [ChannelModel::with_shift(pre, 0.2)?, ChannelModel::with_shift(pre, 1.0)?];
    let threshold = 5.0;
    let change_at = 40;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut global = GlobalCusum::new();
    let mut per_action = PerActionCusum::new(channels.len());
    let (mut global_alarm, mut local_alarm) = (None, None);
    for step in 1..=400u64 {
        let action = (step % 2) as usize;
        let regime = if step >= change_at { Regime::Post } else { Regime::Pre };
        let llr = channels[action].llr(channels[action].sample(regime, &mut rng))?;
        global.update(llr)?;
        per_action.update(action, llr)?;
        if global_alarm.is_none() && global.check(threshold).is_alarm() {
            global_alarm = Some(step);
        }
        if local_alarm.is_none() {
            if let AlarmDecision::Alarm { action } = per_action.check(threshold) {
                local_alarm = Some((step, action));
            }
        }
        if global_alarm.is_some() && local_alarm.is_some() {
            break;
        }
    }
    println!("change at step {change_at}");
    println!("global CuSum alarm at {global_alarm:?}");
    println!("per-action CuSum alarm (step, action) {local_alarm:?}");
    println!("per-action values {:.3?}", per_action.values());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

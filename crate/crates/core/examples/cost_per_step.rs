// Wall-clock cost per step, end to end and without observation sampling.

use bqcd::cli::preset;
use bqcd::harness::trial_rng;
use bqcd::harness::StreamPurpose;
use bqcd::procedures::{run_until_alarm, Procedure, ProcedureConfig, ProcedureKind};
use bqcd::scenario::{ChangePoint, Environment, Scenario};

fn time_kind(kind: ProcedureKind, scenario: &Scenario) -> bqcd::Result<(f64, f64)> {
    let mut procedure = Procedure::new(ProcedureConfig::new(kind, 1e9, 17), scenario)?;
    let mut env = Environment::timed(scenario);
    let mut rng = trial_rng(0, StreamPurpose::Trace, 0);
    let record = run_until_alarm(&mut procedure, &mut env, &mut rng, 20_000)?;
    Ok((
        record.cost_per_step().unwrap_or_default(),
        record.detector_cost_per_step().unwrap_or_default(),
    ))
}

pub fn run_example() -> bqcd::Result<()> {
    let gaussian = preset("gaussian10")?.with_change_point(ChangePoint::Never)?;
    let beta = preset("beta10")?;
    for kind in bqcd::procedures::ProcedureKind::ALL {
        let sc = if kind.uses_glr() { &beta } else { &gaussian };
        let (total, detector) = time_kind(kind, sc)?;
        println!("{kind:>16}: {total:.3e} s/step, {detector:.3e} s/step without sampling");
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

// One UcbCusum trial on the gaussian10 preset with a change at step 100,
// traced step by step.

use bqcd::cli::preset;
use bqcd::harness::{threshold_for, trial_rng, window_for, StreamPurpose};
use bqcd::procedures::{run_traced, Procedure, ProcedureConfig, ProcedureKind};
use bqcd::scenario::{ChangePoint, Environment};

pub fn run_example() -> bqcd::Result<()> {
    let scenario = preset("gaussian10")?.with_change_point(ChangePoint::at(100)?)?;
    let b = threshold_for(1_000.0)?;
    let config = ProcedureConfig::new(ProcedureKind::UcbCusum, b, window_for(b));
    let mut procedure = Procedure::new(config, &scenario)?;
    let mut env = Environment::new(&scenario);
    let mut rng = trial_rng(42, StreamPurpose::Trace, 0);
    let mut trace = Vec::new();
    let record = run_traced(&mut procedure, &mut env, &mut rng, 100_000, &mut trace)?;
    let text = String::from_utf8(trace).expect("trace is ascii");
    let lines: Vec<&str> = text.lines().collect();
    println!("{}", lines[0]);
    for line in &lines[lines.len().saturating_sub(5)..] {
        println!("{line}");
    }
    println!(
        "b = {b:.3}: stopped at step {} (censored: {})",
        record.stopping_time, record.censored
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

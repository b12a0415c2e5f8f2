// GLR procedures need no densities, only observations in [0, 1]. Compare
// UCB and round-robin sampling on beta10 after a long pre-change phase.

use bqcd::cli::preset;
use bqcd::harness::{default_nu, estimate_delay, window_for};
use bqcd::procedures::{ProcedureConfig, ProcedureKind};

pub fn run_example() -> bqcd::Result<()> {
    let scenario = preset("beta10")?;
    let b = 4.0;
    for kind in [ProcedureKind::PaUcbGlr, ProcedureKind::PaRoundRobinGlr] {
        let nu = default_nu(kind, scenario.actions());
        let d = estimate_delay(ProcedureConfig::new(kind, b, window_for(b)), &scenario, nu, 40, 5_000, 1, false)?;
        println!(
            "{kind}: change at {nu}, delay {:.1} ± {:.1}, pre-change alarms {}",
            d.estimate.mean, d.estimate.stderr, d.false_alarms
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

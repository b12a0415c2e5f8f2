// Threshold sweep for three procedures on gaussian10, written as CSV to
// stdout. Small trial counts; raise them for real estimates.

use bqcd::cli::preset;
use bqcd::harness::{sweep, write_sweep_csv, RunOptions};
use bqcd::procedures::{ProcedureConfig, ProcedureKind};

pub fn run_example() -> bqcd::Result<()> {
    let scenario = preset("gaussian10")?;
    let options = RunOptions {
        trials: 100,
        seed: 7,
        ..RunOptions::default()
    };
    let mut rows = Vec::new();
    for kind in [ProcedureKind::UcbCusum, ProcedureKind::RoundRobin, ProcedureKind::Greedy] {
        rows.extend(sweep(
            ProcedureConfig::new(kind, 1.0, 2),
            &scenario,
            &[20.0, 100.0],
            &options,
        )?);
    }
    for row in &rows {
        eprintln!("{}", row.summary());
    }
    write_sweep_csv(&rows, std::io::stdout().lock())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

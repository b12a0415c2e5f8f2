// Under pre-change sampling the SR-like sum `S_n` has mean `n` whatever
// policy picks the channels. Checked here for round robin and UCB.

use bqcd::cli::preset;
use bqcd::harness::{run_martingale_oracle, write_oracle_json, OraclePolicy};

pub fn run_example() -> bqcd::Result<()> {
    let scenario = preset("laplace10")?;
    let mut reports = Vec::new();
    for policy in [OraclePolicy::RoundRobin, OraclePolicy::Ucb { window: 12 }] {
        let r = run_martingale_oracle(&scenario, policy, 2_000, 20, 9)?;
        println!(
            "{policy:?}: mean(S_20) - 20 = {:+.3} ± {:.3}, dominance violations {}",
            r.deviation, r.stderr, r.dominance_violations
        );
        reports.push(r);
    }
    write_oracle_json(&reports, std::io::stdout().lock())?;
    println!();
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

//! Monte-Carlo estimation of MTFA, detection delay and per-step cost.
//!
//! Every trial draws from its own ChaCha8 stream: the generator is seeded
//! with the run seed and switched to stream `(purpose << 48) | trial`. The
//! same streams are reused across procedures and thresholds, so rows of a
//! sweep are compared on common random numbers, and results do not depend
//! on how trials are scheduled across workers.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{subgaussian_bound, Regime};
use crate::detectors::{GlobalCusum, SrState};
use crate::error::{Error, Result};
use crate::policies::{llr_bonus_scale, roundrobin_select, UcbPolicy};
use crate::procedures::{run_until_alarm, Procedure, ProcedureConfig, ProcedureKind, TrialRecord};
use crate::scenario::{ChangePoint, Environment, Scenario};

pub const DEFAULT_TRIALS: usize = 5_000;
/// Default per-trial step cap, as a multiple of γ.
pub const CAP_MULTIPLIER: f64 = 50.0;
/// Rows censored above this fraction are flagged.
pub const CENSOR_FLAG_FRACTION: f64 = 0.01;
/// Default change point for GLR procedures, per action: the GLR needs a
/// pre-change history to split against.
pub const GLR_PRECHANGE_STEPS_PER_ACTION: u64 = 200;
/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "BQCD_THREADS";

pub const SWEEP_CSV_HEADER: [&str; 12] = [
    "procedure",
    "scenario",
    "gamma",
    "b",
    "W",
    "trials",
    "mtfa_mean",
    "mtfa_stderr",
    "delay_mean",
    "delay_stderr",
    "censored_fraction",
    "cost_per_step_s",
];

/// `b = ln γ`.
pub fn threshold_for(gamma: f64) -> Result<f64> {
    if !(gamma.is_finite() && gamma > 1.0) {
        return Err(Error::config("gammas", format!("gamma must exceed 1, got {gamma}")));
    }
    Ok(gamma.ln())
}

/// `W = ceil(8 ln b)`, at least 2.
pub fn window_for(threshold: f64) -> usize {
    let w = (8.0 * threshold.ln()).ceil();
    if w.is_nan() || w < 2.0 {
        2
    } else {
        w as usize
    }
}

/// Default step cap for target γ.
pub fn default_cap(gamma: f64) -> u64 {
    (CAP_MULTIPLIER * gamma).ceil().min(u64::MAX as f64 / 4.0) as u64
}

/// Change point used for delay runs when none is given.
pub fn default_nu(kind: ProcedureKind, actions: usize) -> u64 {
    if kind.uses_glr() {
        GLR_PRECHANGE_STEPS_PER_ACTION * actions as u64
    } else {
        1
    }
}

/// Change points probed by a ν sweep: {1, W/2, W, 2W, 5W}.
pub fn nu_sweep_points(window: usize) -> Vec<u64> {
    let w = window as u64;
    let mut v = vec![1, (w / 2).max(1), w, 2 * w, 5 * w];
    v.sort_unstable();
    v.dedup();
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    Mtfa = 1,
    Delay = 2,
    Oracle = 3,
    Trace = 4,
}

/// The generator for one trial.
pub fn trial_rng(seed: u64, purpose: StreamPurpose, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 48) | trial);
    rng
}

/// Number of workers: explicit request, else `BQCD_THREADS`, else rayon's
/// default.
pub fn resolve_threads(requested: Option<usize>) -> Result<Option<usize>> {
    if let Some(t) = requested {
        if t == 0 {
            return Err(Error::config("threads", "must be >= 1"));
        }
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(Error::config(THREADS_ENV, format!("expected a positive integer, got {s:?}"))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs `f` inside a pool with the resolved worker count.
pub fn with_workers<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match resolve_threads(threads)? {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Contract(format!("worker pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub trials: usize,
    pub seed: u64,
    /// Per-trial step cap; `None` means `50 γ` in sweeps.
    pub cap: Option<u64>,
    /// Measure wall-clock per step.
    pub timing: bool,
    /// Report cost excluding observation sampling.
    pub pure_detector_cost: bool,
    /// Change point for delay runs; `None` picks [`default_nu`].
    pub nu: Option<u64>,
    pub nu_sweep: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            trials: DEFAULT_TRIALS,
            seed: 0,
            cap: None,
            timing: false,
            pure_detector_cost: false,
            nu: None,
            nu_sweep: false,
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    /// Trials entering the mean.
    pub trials: usize,
    pub censored: usize,
}

impl Estimate {
    /// Summarizes `values` in the order given.
    pub fn from_values(values: &[f64], censored: usize) -> Self {
        let n = values.len();
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                stderr: f64::NAN,
                trials: 0,
                censored,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean,
            stderr,
            trials: n,
            censored,
        }
    }

    pub fn censored_fraction(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.censored as f64 / self.trials as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MtfaEstimate {
    pub estimate: Estimate,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayEstimate {
    pub nu: u64,
    /// Over trials that did not alarm before `nu`.
    pub estimate: Estimate,
    /// Trials alarming before `nu`; excluded from `estimate`.
    pub false_alarms: usize,
    pub records: Vec<TrialRecord>,
}

fn run_trials(
    config: ProcedureConfig,
    scenario: &Scenario,
    trials: usize,
    cap: u64,
    seed: u64,
    purpose: StreamPurpose,
    timing: bool,
) -> Result<Vec<TrialRecord>> {
    if trials == 0 {
        return Err(Error::config("trials", "must be >= 1"));
    }
    // Resolve v once; calibration is not per trial.
    let config = config.resolved(scenario)?;
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, purpose, t);
            let mut procedure = Procedure::new(config, scenario)?;
            let mut env = if timing {
                Environment::timed(scenario)
            } else {
                Environment::new(scenario)
            };
            run_until_alarm(&mut procedure, &mut env, &mut rng, cap)
        })
        .collect()
}

/// MTFA under pure pre-change sampling. Censored trials contribute `cap`.
pub fn estimate_mtfa(
    config: ProcedureConfig,
    scenario: &Scenario,
    trials: usize,
    cap: u64,
    seed: u64,
    timing: bool,
) -> Result<MtfaEstimate> {
    let sc = scenario.with_change_point(ChangePoint::Never)?;
    let records = run_trials(config, &sc, trials, cap, seed, StreamPurpose::Mtfa, timing)?;
    let values: Vec<f64> = records.iter().map(|r| r.stopping_time as f64).collect();
    let censored = records.iter().filter(|r| r.censored).count();
    Ok(MtfaEstimate {
        estimate: Estimate::from_values(&values, censored),
        records,
    })
}

/// Delay `T - ν + 1` over trials that survive to `ν`. Each trial may run
/// `cap` steps past `ν - 1`.
pub fn estimate_delay(
    config: ProcedureConfig,
    scenario: &Scenario,
    nu: u64,
    trials: usize,
    cap: u64,
    seed: u64,
    timing: bool,
) -> Result<DelayEstimate> {
    let sc = scenario.with_change_point(ChangePoint::at(nu)?)?;
    let total_cap = (nu - 1).saturating_add(cap);
    let records = run_trials(config, &sc, trials, total_cap, seed, StreamPurpose::Delay, timing)?;
    let mut values = Vec::with_capacity(records.len());
    let mut censored = 0;
    let mut false_alarms = 0;
    for r in &records {
        if r.stopping_time < nu {
            false_alarms += 1;
            continue;
        }
        values.push((r.stopping_time - nu + 1) as f64);
        censored += usize::from(r.censored);
    }
    Ok(DelayEstimate {
        nu,
        estimate: Estimate::from_values(&values, censored),
        false_alarms,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub procedure: ProcedureKind,
    pub scenario: String,
    pub gamma: f64,
    pub threshold: f64,
    /// Restart window; `None` for procedures without UCB.
    pub window: Option<usize>,
    pub trials: usize,
    pub mtfa: Estimate,
    /// The reported delay: the worst estimate over the probed change points.
    pub delay: Estimate,
    pub delay_nu: u64,
    pub delay_false_alarms: usize,
    /// Every probed change point, as `(ν, estimate, false alarms)`.
    pub nu_sweep: Vec<(u64, Estimate, usize)>,
    /// End-to-end seconds per step, averaged over trials.
    pub cost_per_step_s: Option<f64>,
    /// Seconds per step excluding observation sampling.
    pub detector_cost_per_step_s: Option<f64>,
    /// Which cost goes to the CSV column.
    pub pure_detector_cost: bool,
}

impl SweepRow {
    /// Larger of the MTFA and delay censored fractions.
    pub fn censored_fraction(&self) -> f64 {
        self.mtfa.censored_fraction().max(self.delay.censored_fraction())
    }

    pub fn is_flagged(&self) -> bool {
        self.censored_fraction() > CENSOR_FLAG_FRACTION
    }

    pub fn reported_cost(&self) -> Option<f64> {
        if self.pure_detector_cost {
            self.detector_cost_per_step_s
        } else {
            self.cost_per_step_s
        }
    }

    pub fn csv_record(&self) -> [String; 12] {
        [
            self.procedure.name().to_string(),
            self.scenario.clone(),
            self.gamma.to_string(),
            self.threshold.to_string(),
            self.window.map(|w| w.to_string()).unwrap_or_default(),
            self.trials.to_string(),
            self.mtfa.mean.to_string(),
            self.mtfa.stderr.to_string(),
            self.delay.mean.to_string(),
            self.delay.stderr.to_string(),
            self.censored_fraction().to_string(),
            self.reported_cost().map(|c| format!("{c:e}")).unwrap_or_default(),
        ]
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} on {}: gamma={} b={:.4} W={} mtfa={:.2}±{:.2} delay={:.3}±{:.3} (nu={})",
            self.procedure,
            self.scenario,
            self.gamma,
            self.threshold,
            self.window.map(|w| w.to_string()).unwrap_or_else(|| "-".into()),
            self.mtfa.mean,
            self.mtfa.stderr,
            self.delay.mean,
            self.delay.stderr,
            self.delay_nu,
        );
        if let (Some(c), Some(d)) = (self.cost_per_step_s, self.detector_cost_per_step_s) {
            s.push_str(&format!(" cost={c:.3e}s/step detector={d:.3e}s/step"));
        }
        if self.delay_false_alarms > 0 {
            s.push_str(&format!(" pre-change-alarms={}", self.delay_false_alarms));
        }
        if self.is_flagged() {
            s.push_str(&format!(" [CENSORED {:.1}%]", 100.0 * self.censored_fraction()));
        }
        s
    }
}

fn mean_cost(records: &[&TrialRecord], f: impl Fn(&TrialRecord) -> Option<f64>) -> Option<f64> {
    let costs: Vec<f64> = records.iter().filter_map(|r| f(r)).collect();
    (!costs.is_empty()).then(|| costs.iter().sum::<f64>() / costs.len() as f64)
}

/// One row per γ, ascending. `template.threshold` and `template.window`
/// are replaced by `ln γ` and `ceil(8 ln b)`.
pub fn sweep(
    template: ProcedureConfig,
    scenario: &Scenario,
    gammas: &[f64],
    options: &RunOptions,
) -> Result<Vec<SweepRow>> {
    if gammas.is_empty() {
        return Err(Error::config("gammas", "at least one gamma is required"));
    }
    let mut gammas = gammas.to_vec();
    for &g in &gammas {
        threshold_for(g)?;
    }
    gammas.sort_by(f64::total_cmp);
    let template = template.resolved(scenario)?;
    let mut rows = Vec::with_capacity(gammas.len());
    for gamma in gammas {
        let b = threshold_for(gamma)?;
        let w = window_for(b);
        let config = ProcedureConfig {
            threshold: b,
            window: w,
            ..template
        };
        let cap = options.cap.unwrap_or_else(|| default_cap(gamma));
        let mtfa = estimate_mtfa(config, scenario, options.trials, cap, options.seed, options.timing)?;
        let nus = if options.nu_sweep {
            nu_sweep_points(w)
        } else {
            vec![options.nu.unwrap_or_else(|| default_nu(template.kind, scenario.actions()))]
        };
        let mut delays = Vec::with_capacity(nus.len());
        for nu in nus {
            delays.push(estimate_delay(
                config,
                scenario,
                nu,
                options.trials,
                cap,
                options.seed,
                options.timing,
            )?);
        }
        let worst = delays
            .iter()
            .max_by(|a, b| a.estimate.mean.total_cmp(&b.estimate.mean))
            .expect("at least one change point");
        let all: Vec<&TrialRecord> = mtfa
            .records
            .iter()
            .chain(delays.iter().flat_map(|d| d.records.iter()))
            .collect();
        rows.push(SweepRow {
            procedure: template.kind,
            scenario: scenario.label().to_string(),
            gamma,
            threshold: b,
            window: template.kind.uses_ucb().then_some(w),
            trials: options.trials,
            mtfa: mtfa.estimate,
            delay: worst.estimate,
            delay_nu: worst.nu,
            delay_false_alarms: worst.false_alarms,
            nu_sweep: delays.iter().map(|d| (d.nu, d.estimate, d.false_alarms)).collect(),
            cost_per_step_s: mean_cost(&all, TrialRecord::cost_per_step),
            detector_cost_per_step_s: mean_cost(&all, TrialRecord::detector_cost_per_step),
            pure_detector_cost: options.pure_detector_cost,
        });
    }
    Ok(rows)
}

/// Writes the sweep table with the fixed header.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_CSV_HEADER)?;
    for row in rows {
        w.write_record(row.csv_record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv_file(rows: &[SweepRow], path: &Path) -> Result<()> {
    write_sweep_csv(rows, std::fs::File::create(path)?)
}

/// Action-selection rule for the martingale oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OraclePolicy {
    RoundRobin,
    /// Restarted UCB over LLR rewards.
    Ucb { window: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub scenario: String,
    pub policy: OraclePolicy,
    pub horizon: u64,
    pub paths: usize,
    /// Mean of `S_n` over paths.
    pub mean: f64,
    pub stderr: f64,
    /// `mean - n`; zero in expectation.
    pub deviation: f64,
    /// `|mean - n| <= 3 stderr`.
    pub within_three_stderr: bool,
    pub overflowed_paths: usize,
    /// Paths where some pulled arm had `exp(C_a) > S_a` or `S_a > S_n`.
    pub dominance_violations: usize,
}

struct OraclePath {
    total: f64,
    overflowed: bool,
    dominance_ok: bool,
}

fn oracle_path<R: Rng + ?Sized>(
    scenario: &Scenario,
    policy: OraclePolicy,
    v: f64,
    horizon: u64,
    rng: &mut R,
) -> Result<OraclePath> {
    let k = scenario.actions();
    let mut sr = SrState::new(k);
    let mut cusum = vec![GlobalCusum::new(); k];
    let mut pulled = vec![false; k];
    let mut ucb = match policy {
        OraclePolicy::Ucb { window } => Some(UcbPolicy::new(k, window, llr_bonus_scale(v))?),
        OraclePolicy::RoundRobin => None,
    };
    let mut dominance_ok = true;
    for step in 0..horizon {
        let a = match ucb.as_mut() {
            Some(p) => p.select(),
            None => roundrobin_select(step, k),
        };
        let channel = &scenario.channels()[a];
        let llr = channel.llr(channel.sample(Regime::Pre, rng))?;
        sr.update(a, llr)?;
        cusum[a].update(llr)?;
        pulled[a] = true;
        if let Some(p) = ucb.as_mut() {
            p.observe(a, llr);
        }
        for i in (0..k).filter(|&i| pulled[i]) {
            let s = sr.values()[i];
            if cusum[i].value().exp() > s || s > sr.total() {
                dominance_ok = false;
            }
        }
    }
    Ok(OraclePath {
        total: sr.total(),
        overflowed: sr.overflowed(),
        dominance_ok,
    })
}

/// Simulates the SR-like statistic under pre-change sampling.
pub fn run_martingale_oracle(
    scenario: &Scenario,
    policy: OraclePolicy,
    paths: usize,
    horizon: u64,
    seed: u64,
) -> Result<OracleReport> {
    if scenario.change_point() != ChangePoint::Never {
        return Err(Error::config("scenario", "martingale oracle needs a pre-change scenario (nu = never)"));
    }
    if paths == 0 {
        return Err(Error::config("paths", "must be >= 1"));
    }
    if let OraclePolicy::Ucb { window } = policy {
        if window < 2 {
            return Err(Error::config("window", "must be >= 2"));
        }
    }
    let v = match policy {
        OraclePolicy::Ucb { .. } => subgaussian_bound(scenario.channels())?.value(),
        OraclePolicy::RoundRobin => 0.0,
    };
    let results: Vec<OraclePath> = (0..paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut rng = trial_rng(seed, StreamPurpose::Oracle, p);
            oracle_path(scenario, policy, v, horizon, &mut rng)
        })
        .collect::<Result<_>>()?;
    let totals: Vec<f64> = results.iter().map(|r| r.total).collect();
    let est = Estimate::from_values(&totals, 0);
    let deviation = est.mean - horizon as f64;
    Ok(OracleReport {
        scenario: scenario.label().to_string(),
        policy,
        horizon,
        paths,
        mean: est.mean,
        stderr: est.stderr,
        deviation,
        within_three_stderr: deviation.abs() <= 3.0 * est.stderr,
        overflowed_paths: results.iter().filter(|r| r.overflowed).count(),
        dominance_violations: results.iter().filter(|r| !r.dominance_ok).count(),
    })
}

pub fn write_oracle_json<W: Write>(reports: &[OracleReport], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, reports)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::DistributionSpec;

    fn gaussian(shifts: &[f64]) -> Scenario {
        Scenario::from_shift_vector(
            "g",
            DistributionSpec::gaussian(0.0, 1.0).unwrap(),
            shifts,
            ChangePoint::Never,
        )
        .unwrap()
    }

    #[test]
    fn parameter_rules() {
        assert!((threshold_for(8f64.exp()).unwrap() - 8.0).abs() < 1e-12);
        assert_eq!(window_for(8.0), 17);
        assert_eq!(window_for(1.0), 2);
        assert_eq!(window_for(0.5), 2);
        assert_eq!(window_for(4.0), 12);
        let err = threshold_for(0.5).unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("gamma must exceed 1"));
        assert!(threshold_for(1.0).is_err());
    }

    #[test]
    fn nu_points() {
        assert_eq!(nu_sweep_points(17), vec![1, 8, 17, 34, 85]);
        assert_eq!(nu_sweep_points(2), vec![1, 2, 4, 10]);
    }

    #[test]
    fn streams_differ_by_purpose_and_trial() {
        let a: u64 = trial_rng(1, StreamPurpose::Mtfa, 0).random();
        let b: u64 = trial_rng(1, StreamPurpose::Delay, 0).random();
        let c: u64 = trial_rng(1, StreamPurpose::Mtfa, 1).random();
        let d: u64 = trial_rng(1, StreamPurpose::Mtfa, 0).random();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, d);
    }

    #[test]
    fn estimate_stats() {
        let e = Estimate::from_values(&[1.0, 2.0, 3.0, 4.0], 1);
        assert_eq!(e.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((e.stderr - sd / 2.0).abs() < 1e-15);
        assert_eq!(e.censored_fraction(), 0.25);
        assert!(Estimate::from_values(&[], 0).mean.is_nan());
    }

    #[test]
    fn fully_censored_mtfa() {
        let sc = gaussian(&[0.0, 1.0]);
        let cfg = ProcedureConfig::new(ProcedureKind::UcbCusum, 1e9, 4);
        let m = estimate_mtfa(cfg, &sc, 20, 50, 3, false).unwrap();
        assert_eq!(m.estimate.mean, 50.0);
        assert_eq!(m.estimate.censored_fraction(), 1.0);
    }

    #[test]
    fn delay_at_nu_one_is_stopping_time() {
        let sc = gaussian(&[0.0, 2.0]);
        let cfg = ProcedureConfig::new(ProcedureKind::PaRoundRobin, 3.0, 2);
        let d = estimate_delay(cfg, &sc, 1, 50, 10_000, 9, false).unwrap();
        let times: Vec<f64> = d.records.iter().map(|r| r.stopping_time as f64).collect();
        assert_eq!(d.false_alarms, 0);
        assert_eq!(d.estimate.mean, times.iter().sum::<f64>() / 50.0);
    }

    #[test]
    fn late_change_counts_false_alarms() {
        let sc = gaussian(&[0.0, 2.0]);
        // tiny threshold: alarms almost immediately, before nu = 200
        let cfg = ProcedureConfig::new(ProcedureKind::PaRoundRobin, 0.5, 2);
        let d = estimate_delay(cfg, &sc, 200, 100, 10_000, 1, false).unwrap();
        assert!(d.false_alarms > 90);
        assert_eq!(d.estimate.trials + d.false_alarms, 100);
    }

    #[test]
    fn sweep_rows_sorted_and_validated() {
        let sc = gaussian(&[0.0, 1.0]);
        let opts = RunOptions {
            trials: 20,
            seed: 4,
            ..RunOptions::default()
        };
        let cfg = ProcedureConfig::new(ProcedureKind::UcbCusum, 1.0, 2);
        let rows = sweep(cfg, &sc, &[50.0, 10.0], &opts).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].gamma, 10.0);
        assert_eq!(rows[0].window, Some(window_for(10f64.ln())));
        assert!(rows[0].cost_per_step_s.is_none());
        assert!(sweep(cfg, &sc, &[10.0, 1.0], &opts).unwrap_err().is_config());
        assert!(sweep(cfg, &sc, &[], &opts).is_err());
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_sweep_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "procedure,scenario,gamma,b,W,trials,mtfa_mean,mtfa_stderr,delay_mean,delay_stderr,censored_fraction,cost_per_step_s\n"
        );
    }

    #[test]
    fn oracle_horizon_zero_is_exact() {
        let sc = gaussian(&[0.0, 1.0]);
        let r = run_martingale_oracle(&sc, OraclePolicy::RoundRobin, 10, 0, 0).unwrap();
        assert_eq!(r.mean, 0.0);
        assert_eq!(r.deviation, 0.0);
    }

    #[test]
    fn oracle_rejects_post_change_scenario() {
        let sc = gaussian(&[0.0, 1.0]).with_change_point(ChangePoint::at(1).unwrap()).unwrap();
        assert!(run_martingale_oracle(&sc, OraclePolicy::RoundRobin, 10, 5, 0).is_err());
    }
}

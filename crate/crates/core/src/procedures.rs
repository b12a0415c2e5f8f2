//! Stepping agents: one policy + one detector.
//!
//! Each step runs, in order: select an action, draw its observation, update
//! the detection statistic, feed the reward to the policy, check for an
//! alarm. LLR procedures use the LLR of the observation as reward; the GLR
//! procedures use `G_a / L_a` after appending the observation.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{subgaussian_bound, SubGaussianBound};
use crate::detectors::{first_crossing, AlarmDecision, GlobalCusum, GlrArm, PerActionCusum};
use crate::error::{Error, Result};
use crate::policies::{
    glr_bonus_scale, llr_bonus_scale, roundrobin_select, GreedyDecision, GreedyPolicy, UcbPolicy,
};
use crate::scenario::{Environment, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProcedureKind {
    /// Restarted UCB over LLR rewards, one global CuSum.
    UcbCusum,
    /// Restarted UCB over LLR rewards, one CuSum per action.
    PaUcbCusum,
    /// Restarted UCB over normalized GLR rewards, one Bernoulli GLR per arm.
    PaUcbGlr,
    /// Stay on a component until its CuSum alarms or hits zero.
    Greedy,
    /// Cyclic sampling, one global CuSum.
    RoundRobin,
    /// Cyclic sampling, one CuSum per action.
    PaRoundRobin,
    /// Cyclic sampling, one Bernoulli GLR per arm.
    PaRoundRobinGlr,
}

impl ProcedureKind {
    pub const ALL: [ProcedureKind; 7] = [
        ProcedureKind::UcbCusum,
        ProcedureKind::PaUcbCusum,
        ProcedureKind::PaUcbGlr,
        ProcedureKind::Greedy,
        ProcedureKind::RoundRobin,
        ProcedureKind::PaRoundRobin,
        ProcedureKind::PaRoundRobinGlr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProcedureKind::UcbCusum => "UcbCusum",
            ProcedureKind::PaUcbCusum => "PaUcbCusum",
            ProcedureKind::PaUcbGlr => "PaUcbGlr",
            ProcedureKind::Greedy => "Greedy",
            ProcedureKind::RoundRobin => "RoundRobin",
            ProcedureKind::PaRoundRobin => "PaRoundRobin",
            ProcedureKind::PaRoundRobinGlr => "PaRoundRobinGlr",
        }
    }

    /// Selects with the restarted UCB rule (and so needs a window).
    pub fn uses_ucb(self) -> bool {
        matches!(
            self,
            ProcedureKind::UcbCusum | ProcedureKind::PaUcbCusum | ProcedureKind::PaUcbGlr
        )
    }

    /// Works from raw [0, 1] observations instead of known densities.
    pub fn uses_glr(self) -> bool {
        matches!(self, ProcedureKind::PaUcbGlr | ProcedureKind::PaRoundRobinGlr)
    }

    /// Alarms report which action crossed.
    pub fn is_per_action(self) -> bool {
        matches!(
            self,
            ProcedureKind::PaUcbCusum
                | ProcedureKind::PaUcbGlr
                | ProcedureKind::PaRoundRobin
                | ProcedureKind::PaRoundRobinGlr
        )
    }

    /// Needs the sub-Gaussian constant `v`.
    pub fn needs_subgaussian_bound(self) -> bool {
        matches!(self, ProcedureKind::UcbCusum | ProcedureKind::PaUcbCusum)
    }
}

impl fmt::Display for ProcedureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProcedureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        ProcedureKind::ALL
            .into_iter()
            .find(|k| k.name().to_ascii_lowercase() == norm)
            .ok_or_else(|| {
                let names: Vec<_> = ProcedureKind::ALL.iter().map(|k| k.name()).collect();
                Error::config(
                    "procedures",
                    format!("unknown procedure {s:?}; expected one of {}", names.join(", ")),
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcedureConfig {
    pub kind: ProcedureKind,
    pub threshold: f64,
    /// Restart window of the UCB rule; ignored by the other selectors.
    pub window: usize,
    /// `None` means "derive from the scenario".
    pub v: Option<SubGaussianBound>,
    /// GLR split-point subsampling; 1 is exact.
    pub glr_split_stride: usize,
}

impl ProcedureConfig {
    pub fn new(kind: ProcedureKind, threshold: f64, window: usize) -> Self {
        ProcedureConfig {
            kind,
            threshold,
            window,
            v: None,
            glr_split_stride: 1,
        }
    }

    pub fn with_v(mut self, v: SubGaussianBound) -> Self {
        self.v = Some(v);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::config(
                "threshold",
                format!("must be finite and > 0, got {}", self.threshold),
            ));
        }
        if self.kind.uses_ucb() && self.window < 2 {
            return Err(Error::config("window", format!("must be >= 2, got {}", self.window)));
        }
        if self.glr_split_stride == 0 {
            return Err(Error::config("glr_split_stride", "must be >= 1"));
        }
        Ok(())
    }

    /// Fills `v` from the scenario when the kind needs it.
    pub fn resolved(mut self, scenario: &Scenario) -> Result<Self> {
        if self.kind.needs_subgaussian_bound() && self.v.is_none() {
            self.v = Some(subgaussian_bound(scenario.channels())?);
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub action: usize,
    pub observation: f64,
    pub alarmed: bool,
    /// Set only for per-action procedures.
    pub alarm_action: Option<usize>,
    /// The statistic component this step moved (global value, the selected
    /// action's CuSum/GLR, or Greedy's running sum).
    pub statistic: f64,
}

#[derive(Debug, Clone)]
enum Statistic {
    Global(GlobalCusum),
    PerAction(PerActionCusum),
    Glr(Vec<GlrArm>),
}

impl Statistic {
    fn check(&self, threshold: f64) -> AlarmDecision {
        match self {
            Statistic::Global(c) => c.check(threshold),
            Statistic::PerAction(c) => c.check(threshold),
            Statistic::Glr(arms) => first_crossing(arms.iter().map(GlrArm::value), threshold),
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            Statistic::Global(c) => vec![c.value()],
            Statistic::PerAction(c) => c.values().to_vec(),
            Statistic::Glr(arms) => arms.iter().map(GlrArm::value).collect(),
        }
    }
}

#[derive(Debug, Clone)]
enum Selector {
    Ucb(UcbPolicy),
    RoundRobin,
}

#[derive(Debug, Clone)]
enum Engine {
    Indexed { selector: Selector, statistic: Statistic },
    Greedy(GreedyPolicy),
}

/// A bandit change-detection procedure bound to one trial.
#[derive(Debug, Clone)]
pub struct Procedure {
    config: ProcedureConfig,
    actions: usize,
    steps: u64,
    alarmed: bool,
    engine: Engine,
}

impl Procedure {
    pub fn new(config: ProcedureConfig, scenario: &Scenario) -> Result<Self> {
        config.validate()?;
        let config = config.resolved(scenario)?;
        let k = scenario.actions();
        if config.kind.uses_glr() && !scenario.is_unit_bounded() {
            return Err(Error::config(
                "procedures",
                format!(
                    "{} needs observations in [0, 1] but scenario {:?} has unbounded channels",
                    config.kind,
                    scenario.label()
                ),
            ));
        }
        let glr_arms = || Statistic::Glr(vec![GlrArm::with_split_stride(config.glr_split_stride); k]);
        let engine = match config.kind {
            ProcedureKind::UcbCusum | ProcedureKind::PaUcbCusum => {
                let v = config.v.expect("resolved above").value();
                let statistic = if config.kind == ProcedureKind::UcbCusum {
                    Statistic::Global(GlobalCusum::new())
                } else {
                    Statistic::PerAction(PerActionCusum::new(k))
                };
                Engine::Indexed {
                    selector: Selector::Ucb(UcbPolicy::new(k, config.window, llr_bonus_scale(v))?),
                    statistic,
                }
            }
            ProcedureKind::PaUcbGlr => Engine::Indexed {
                selector: Selector::Ucb(UcbPolicy::new(k, config.window, f64::INFINITY)?),
                statistic: glr_arms(),
            },
            ProcedureKind::RoundRobin => Engine::Indexed {
                selector: Selector::RoundRobin,
                statistic: Statistic::Global(GlobalCusum::new()),
            },
            ProcedureKind::PaRoundRobin => Engine::Indexed {
                selector: Selector::RoundRobin,
                statistic: Statistic::PerAction(PerActionCusum::new(k)),
            },
            ProcedureKind::PaRoundRobinGlr => Engine::Indexed {
                selector: Selector::RoundRobin,
                statistic: glr_arms(),
            },
            ProcedureKind::Greedy => Engine::Greedy(GreedyPolicy::new(k)),
        };
        Ok(Procedure {
            config,
            actions: k,
            steps: 0,
            alarmed: false,
            engine,
        })
    }

    pub fn config(&self) -> &ProcedureConfig {
        &self.config
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn alarmed(&self) -> bool {
        self.alarmed
    }

    /// Snapshot of every detection statistic (one entry for global ones).
    pub fn statistics(&self) -> Vec<f64> {
        match &self.engine {
            Engine::Indexed { statistic, .. } => statistic.values(),
            Engine::Greedy(g) => vec![g.cum_llr()],
        }
    }

    /// The UCB bookkeeping, when the procedure has one.
    pub fn ucb(&self) -> Option<&UcbPolicy> {
        match &self.engine {
            Engine::Indexed {
                selector: Selector::Ucb(p),
                ..
            } => Some(p),
            _ => None,
        }
    }

    /// Executes one select → observe → detect → learn → check cycle.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        env: &mut Environment<'_>,
        rng: &mut R,
    ) -> Result<StepOutcome> {
        if self.alarmed {
            return Err(Error::Contract("step called after the procedure alarmed".into()));
        }
        let threshold = self.config.threshold;
        let draws_before = env.draws();
        let outcome = match &mut self.engine {
            Engine::Indexed { selector, statistic } => {
                let action = match selector {
                    Selector::Ucb(p) => p.select(),
                    Selector::RoundRobin => roundrobin_select(self.steps, self.actions),
                };
                let x = env.observe(action, rng);
                let channel = &env.scenario().channels()[action];
                let (reward, value) = match statistic {
                    Statistic::Global(c) => {
                        let llr = channel.llr(x)?;
                        (llr, c.update(llr)?)
                    }
                    Statistic::PerAction(c) => {
                        let llr = channel.llr(x)?;
                        (llr, c.update(action, llr)?)
                    }
                    Statistic::Glr(arms) => {
                        let arm = &mut arms[action];
                        let g = arm.append(x)?;
                        if let Selector::Ucb(p) = selector {
                            p.set_bonus_scale(action, glr_bonus_scale(arm.increment_variance()));
                        }
                        (arm.normalized_reward(), g)
                    }
                };
                if let Selector::Ucb(p) = selector {
                    p.observe(action, reward);
                }
                let decision = statistic.check(threshold);
                let (alarmed, alarm_action) = match decision {
                    AlarmDecision::Continue => (false, None),
                    AlarmDecision::Alarm { action } => (true, action),
                };
                StepOutcome {
                    action,
                    observation: x,
                    alarmed,
                    alarm_action,
                    statistic: value,
                }
            }
            Engine::Greedy(g) => {
                let action = g.current();
                let x = env.observe(action, rng);
                let llr = env.scenario().channels()[action].llr(x)?;
                if !llr.is_finite() {
                    return Err(Error::Numeric(format!("non-finite LLR {llr}")));
                }
                let decision = g.step(llr, threshold);
                StepOutcome {
                    action,
                    observation: x,
                    alarmed: decision == GreedyDecision::Alarm,
                    alarm_action: None,
                    statistic: g.cum_llr(),
                }
            }
        };
        debug_assert_eq!(env.draws(), draws_before + 1, "exactly one draw per step");
        self.steps += 1;
        self.alarmed = outcome.alarmed;
        Ok(outcome)
    }
}

/// Result of running one procedure until it alarms or hits the cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// 1-indexed step of the alarm, or the cap when censored.
    pub stopping_time: u64,
    pub censored: bool,
    pub alarm_action: Option<usize>,
    /// Wall-clock of the whole loop; present when timing was requested.
    pub elapsed: Option<Duration>,
    /// Portion of `elapsed` spent drawing observations.
    pub sampling: Option<Duration>,
}

impl TrialRecord {
    /// End-to-end seconds per step.
    pub fn cost_per_step(&self) -> Option<f64> {
        self.elapsed
            .map(|e| e.as_secs_f64() / self.stopping_time.max(1) as f64)
    }

    /// Seconds per step excluding observation sampling.
    pub fn detector_cost_per_step(&self) -> Option<f64> {
        let e = self.elapsed?;
        let s = self.sampling.unwrap_or_default();
        Some(e.saturating_sub(s).as_secs_f64() / self.stopping_time.max(1) as f64)
    }
}

/// Steps until alarm or `cap` steps. Timing is taken when `env` was built
/// with [`Environment::timed`].
pub fn run_until_alarm<R: Rng + ?Sized>(
    procedure: &mut Procedure,
    env: &mut Environment<'_>,
    rng: &mut R,
    cap: u64,
) -> Result<TrialRecord> {
    if cap == 0 {
        return Err(Error::config("cap", "must be > 0"));
    }
    let timed = env.sampling_time().is_some();
    let start = timed.then(Instant::now);
    let mut alarm = None;
    while procedure.steps() < cap {
        let outcome = procedure.step(env, rng)?;
        if outcome.alarmed {
            alarm = Some(outcome.alarm_action);
            break;
        }
    }
    Ok(TrialRecord {
        stopping_time: procedure.steps(),
        censored: alarm.is_none(),
        alarm_action: alarm.flatten(),
        elapsed: start.map(|s| s.elapsed()),
        sampling: env.sampling_time(),
    })
}

/// Like [`run_until_alarm`] but writes one CSV line per step:
/// `step,action,observation,statistic` where `statistic` lists every
/// component separated by `;`.
pub fn run_traced<R: Rng + ?Sized, W: Write>(
    procedure: &mut Procedure,
    env: &mut Environment<'_>,
    rng: &mut R,
    cap: u64,
    out: &mut W,
) -> Result<TrialRecord> {
    if cap == 0 {
        return Err(Error::config("cap", "must be > 0"));
    }
    writeln!(out, "step,action,observation,statistic")?;
    let mut alarm = None;
    while procedure.steps() < cap {
        let outcome = procedure.step(env, rng)?;
        let snapshot: Vec<String> = procedure.statistics().iter().map(|v| v.to_string()).collect();
        writeln!(
            out,
            "{},{},{},{}",
            procedure.steps(),
            outcome.action,
            outcome.observation,
            snapshot.join(";")
        )?;
        if outcome.alarmed {
            alarm = Some(outcome.alarm_action);
            break;
        }
    }
    Ok(TrialRecord {
        stopping_time: procedure.steps(),
        censored: alarm.is_none(),
        alarm_action: alarm.flatten(),
        elapsed: None,
        sampling: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{DistributionSpec, Regime};
    use crate::scenario::ChangePoint;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gaussian(shifts: &[f64], cp: ChangePoint) -> Scenario {
        Scenario::from_shift_vector("g", DistributionSpec::gaussian(0.0, 1.0).unwrap(), shifts, cp)
            .unwrap()
    }

    fn beta(shifts: &[f64], cp: ChangePoint) -> Scenario {
        Scenario::from_shift_vector("b", DistributionSpec::beta(0.02, 1.98).unwrap(), shifts, cp)
            .unwrap()
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("UcbCusum".parse::<ProcedureKind>().unwrap(), ProcedureKind::UcbCusum);
        assert_eq!("pa-roundrobin-glr".parse::<ProcedureKind>().unwrap(), ProcedureKind::PaRoundRobinGlr);
        assert!("wcc".parse::<ProcedureKind>().unwrap_err().is_config());
    }

    #[test]
    fn fresh_statistics_are_zero() {
        let sc = gaussian(&[0.0; 9].iter().chain(&[1.0]).copied().collect::<Vec<_>>(), ChangePoint::Never);
        let p = Procedure::new(ProcedureConfig::new(ProcedureKind::UcbCusum, 3.0, 10), &sc).unwrap();
        assert_eq!(p.statistics(), vec![0.0]);
        let p = Procedure::new(ProcedureConfig::new(ProcedureKind::PaUcbCusum, 3.0, 10), &sc).unwrap();
        assert_eq!(p.statistics(), vec![0.0; 10]);
        assert!(p.ucb().unwrap().index(0).is_infinite());
    }

    #[test]
    fn glr_needs_bounded_channels() {
        let sc = gaussian(&[0.0, 1.0], ChangePoint::Never);
        let err = Procedure::new(ProcedureConfig::new(ProcedureKind::PaUcbGlr, 3.0, 10), &sc).unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("[0, 1]"));
    }

    #[test]
    fn invalid_config() {
        let sc = gaussian(&[0.0, 1.0], ChangePoint::Never);
        assert!(Procedure::new(ProcedureConfig::new(ProcedureKind::UcbCusum, 0.0, 10), &sc).is_err());
        assert!(Procedure::new(ProcedureConfig::new(ProcedureKind::UcbCusum, 1.0, 1), &sc).is_err());
        // window is irrelevant to round robin
        assert!(Procedure::new(ProcedureConfig::new(ProcedureKind::RoundRobin, 1.0, 0), &sc).is_ok());
    }

    #[test]
    fn single_channel_trace_is_cusum_fold() {
        let sc = gaussian(&[1.0], ChangePoint::Never);
        let cfg = ProcedureConfig::new(ProcedureKind::UcbCusum, 1e9, 4);
        let mut p = Procedure::new(cfg, &sc).unwrap();
        let mut env = Environment::new(&sc);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut obs = Vec::new();
        let mut trace = Vec::new();
        for _ in 0..200 {
            let o = p.step(&mut env, &mut rng).unwrap();
            obs.push(o.observation);
            trace.push(o.statistic);
        }
        // Independent oracle: redraw the same path and fold δx - δ²/2.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ch = &sc.channels()[0];
        let mut c = 0.0f64;
        for (i, &x) in obs.iter().enumerate() {
            assert_eq!(ch.sample(Regime::Pre, &mut rng), x);
            c = c.max(0.0) + (x - 0.5);
            assert_eq!(trace[i].to_bits(), c.to_bits());
        }
    }

    #[test]
    fn pa_roundrobin_cycles_and_isolates() {
        let sc = gaussian(&[0.5, 1.0, 0.2], ChangePoint::at(1).unwrap());
        let mut p = Procedure::new(ProcedureConfig::new(ProcedureKind::PaRoundRobin, 1e9, 2), &sc).unwrap();
        let mut env = Environment::new(&sc);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for i in 0..30usize {
            let before = p.statistics();
            let o = p.step(&mut env, &mut rng).unwrap();
            assert_eq!(o.action, i % 3);
            let after = p.statistics();
            for a in 0..3 {
                if a != o.action {
                    assert_eq!(before[a].to_bits(), after[a].to_bits());
                }
            }
        }
    }

    #[test]
    fn glr_arms_with_few_samples_stay_infinite() {
        let sc = beta(&[0.0, 0.19], ChangePoint::at(1).unwrap());
        let cfg = ProcedureConfig::new(ProcedureKind::PaUcbGlr, 1e9, 50);
        let mut p = Procedure::new(cfg, &sc).unwrap();
        let mut env = Environment::new(&sc);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // Fewer than three samples: undefined variance, infinite index, and
        // ties go to the lowest index.
        let actions: Vec<usize> = (0..6).map(|_| p.step(&mut env, &mut rng).unwrap().action).collect();
        assert_eq!(actions, vec![0, 0, 0, 1, 1, 1]);
        assert!(p.ucb().unwrap().index(0).is_finite());
    }

    #[test]
    fn step_after_alarm_is_rejected() {
        let sc = gaussian(&[3.0], ChangePoint::at(1).unwrap());
        let mut p = Procedure::new(ProcedureConfig::new(ProcedureKind::PaRoundRobin, 1e-6, 2), &sc).unwrap();
        let mut env = Environment::new(&sc);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rec = run_until_alarm(&mut p, &mut env, &mut rng, 10_000).unwrap();
        assert!(!rec.censored);
        assert!(rec.stopping_time >= 1);
        assert_eq!(rec.alarm_action, Some(0));
        assert!(matches!(p.step(&mut env, &mut rng), Err(Error::Contract(_))));
    }

    #[test]
    fn huge_threshold_is_censored() {
        let sc = gaussian(&[0.0, 1.0], ChangePoint::Never);
        let mut p = Procedure::new(ProcedureConfig::new(ProcedureKind::UcbCusum, 1e12, 8), &sc).unwrap();
        let mut env = Environment::new(&sc);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rec = run_until_alarm(&mut p, &mut env, &mut rng, 1000).unwrap();
        assert!(rec.censored);
        assert_eq!(rec.stopping_time, 1000);
        assert_eq!(env.draws(), 1000);
    }

    #[test]
    fn greedy_skips_unaffected_channels() {
        let sc = gaussian(&[0.0, 0.0, 2.0], ChangePoint::at(1).unwrap());
        let mut p = Procedure::new(ProcedureConfig::new(ProcedureKind::Greedy, 1e9, 2), &sc).unwrap();
        let mut env = Environment::new(&sc);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a: Vec<usize> = (0..3).map(|_| p.step(&mut env, &mut rng).unwrap().action).collect();
        assert_eq!(a, vec![0, 1, 2]);
    }

    #[test]
    fn trace_lines() {
        let sc = gaussian(&[0.0, 1.0], ChangePoint::at(1).unwrap());
        let mut p = Procedure::new(ProcedureConfig::new(ProcedureKind::PaUcbCusum, 2.0, 6), &sc).unwrap();
        let mut env = Environment::new(&sc);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut buf = Vec::new();
        let rec = run_traced(&mut p, &mut env, &mut rng, 500, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,action,observation,statistic");
        assert_eq!(lines.len() as u64, rec.stopping_time + 1);
        assert_eq!(lines[1].split(',').nth(3).unwrap().split(';').count(), 2);
    }
}

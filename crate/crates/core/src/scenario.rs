//! Experiment definitions and the observation environment.

use std::num::NonZeroU64;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{ChannelModel, DistributionSpec, Family, Regime};
use crate::error::{Error, Result};

/// When the affected channels switch to their post-change law.
///
/// `At(ν)` is 1-indexed: the observation at step `ν` is the first
/// post-change draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangePoint {
    Never,
    At(NonZeroU64),
}

impl ChangePoint {
    /// `At(nu)`; fails for `nu == 0`.
    pub fn at(nu: u64) -> Result<Self> {
        NonZeroU64::new(nu)
            .map(ChangePoint::At)
            .ok_or_else(|| Error::config("nu", "change point is 1-indexed and must be >= 1"))
    }

    pub fn step(self) -> Option<u64> {
        match self {
            ChangePoint::Never => None,
            ChangePoint::At(nu) => Some(nu.get()),
        }
    }
}

/// K channels plus a change point.
#[derive(Debug, Clone)]
pub struct Scenario {
    label: String,
    channels: Vec<ChannelModel>,
    change_point: ChangePoint,
}

impl Scenario {
    pub fn new(
        label: impl Into<String>,
        channels: Vec<ChannelModel>,
        change_point: ChangePoint,
    ) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::config("channels", "scenario needs at least one channel"));
        }
        if change_point != ChangePoint::Never && !channels.iter().any(ChannelModel::is_affected) {
            return Err(Error::config(
                "channels",
                "affected set is empty but a finite change point was given",
            ));
        }
        Ok(Scenario {
            label: label.into(),
            channels,
            change_point,
        })
    }

    /// Channels built from a common pre-change law and a shift vector.
    pub fn from_shift_vector(
        label: impl Into<String>,
        pre: DistributionSpec,
        shifts: &[f64],
        change_point: ChangePoint,
    ) -> Result<Self> {
        let channels = shifts
            .iter()
            .map(|&s| ChannelModel::with_shift(pre, s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(label, channels, change_point)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn channels(&self) -> &[ChannelModel] {
        &self.channels
    }

    pub fn actions(&self) -> usize {
        self.channels.len()
    }

    pub fn change_point(&self) -> ChangePoint {
        self.change_point
    }

    /// Indices of channels whose law changes.
    pub fn affected(&self) -> Vec<usize> {
        (0..self.actions())
            .filter(|&a| self.channels[a].is_affected())
            .collect()
    }

    /// Largest post-change KL over the affected set.
    pub fn information_rate(&self) -> f64 {
        self.channels
            .iter()
            .map(ChannelModel::kl_divergence)
            .fold(0.0, f64::max)
    }

    /// True when every channel draws from [0, 1].
    pub fn is_unit_bounded(&self) -> bool {
        self.channels.iter().all(|c| c.family().is_unit_bounded())
    }

    pub fn families(&self) -> Vec<Family> {
        let mut f: Vec<Family> = self.channels.iter().map(ChannelModel::family).collect();
        f.dedup();
        f
    }

    pub fn with_change_point(&self, change_point: ChangePoint) -> Result<Self> {
        Self::new(self.label.clone(), self.channels.clone(), change_point)
    }
}

/// Produces one observation per step from the scenario.
///
/// Keeps the step clock and counts draws so callers can check that exactly
/// one channel is observed per step. Optionally accumulates the wall-clock
/// time spent sampling.
#[derive(Debug)]
pub struct Environment<'a> {
    scenario: &'a Scenario,
    /// Step of the next observation (1-indexed).
    time: u64,
    draws: u64,
    sampling_clock: Option<Duration>,
}

impl<'a> Environment<'a> {
    pub fn new(scenario: &'a Scenario) -> Self {
        Environment {
            scenario,
            time: 1,
            draws: 0,
            sampling_clock: None,
        }
    }

    /// Also time each draw.
    pub fn timed(scenario: &'a Scenario) -> Self {
        Environment {
            sampling_clock: Some(Duration::ZERO),
            ..Self::new(scenario)
        }
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    /// Step that the next observation belongs to.
    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn sampling_time(&self) -> Option<Duration> {
        self.sampling_clock
    }

    /// Regime of `action` at the current step.
    #[inline]
    pub fn regime(&self, action: usize) -> Regime {
        match self.scenario.change_point {
            ChangePoint::At(nu) if self.time >= nu.get() && self.scenario.channels[action].is_affected() => {
                Regime::Post
            }
            _ => Regime::Pre,
        }
    }

    /// Draws the current step's observation from `action` and advances the
    /// clock.
    #[inline]
    pub fn observe<R: Rng + ?Sized>(&mut self, action: usize, rng: &mut R) -> f64 {
        let regime = self.regime(action);
        let channel = &self.scenario.channels[action];
        let x = match self.sampling_clock.as_mut() {
            Some(clock) => {
                let start = Instant::now();
                let x = channel.sample(regime, rng);
                *clock += start.elapsed();
                x
            }
            None => channel.sample(regime, rng),
        };
        self.draws += 1;
        self.time += 1;
        x
    }
}

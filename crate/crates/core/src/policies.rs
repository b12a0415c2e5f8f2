//! Action-selection controllers.
//!
//! [`UcbPolicy`] is the periodically restarted UCB rule: every `window`
//! observations its pull counts and empirical means are wiped, so the first
//! `K` selections of each window visit every arm once. Ties go to the
//! smallest index.

use crate::error::{Error, Result};

/// Exploration scale for an LLR-reward UCB: `4 v`.
pub fn llr_bonus_scale(v: f64) -> f64 {
    4.0 * v
}

/// Exploration scale for a GLR-reward arm: `2 σ²`, infinite while the
/// variance is undefined so the arm keeps being explored.
pub fn glr_bonus_scale(variance: Option<f64>) -> f64 {
    variance.map_or(f64::INFINITY, |s2| 2.0 * s2)
}

/// Restarted UCB bookkeeping.
#[derive(Debug, Clone)]
pub struct UcbPolicy {
    window: usize,
    log_window: f64,
    step_in_window: usize,
    pulls: Vec<u64>,
    means: Vec<f64>,
    bonus_scale: Vec<f64>,
    pending: Option<usize>,
    restarts: u64,
}

impl UcbPolicy {
    /// `bonus_scale` is the per-arm factor under the square root; use
    /// [`llr_bonus_scale`] for every arm, or update it per arm with
    /// [`UcbPolicy::set_bonus_scale`].
    pub fn new(actions: usize, window: usize, bonus_scale: f64) -> Result<Self> {
        if actions == 0 {
            return Err(Error::config("actions", "need at least one action"));
        }
        if window < 2 {
            return Err(Error::config("window", format!("must be >= 2, got {window}")));
        }
        if bonus_scale.is_nan() || bonus_scale < 0.0 {
            return Err(Error::config("bonus_scale", format!("must be >= 0, got {bonus_scale}")));
        }
        Ok(UcbPolicy {
            window,
            log_window: (window as f64).ln(),
            step_in_window: 0,
            pulls: vec![0; actions],
            means: vec![0.0; actions],
            bonus_scale: vec![bonus_scale; actions],
            pending: None,
            restarts: 0,
        })
    }

    pub fn actions(&self) -> usize {
        self.pulls.len()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn step_in_window(&self) -> usize {
        self.step_in_window
    }

    pub fn pulls(&self) -> &[u64] {
        &self.pulls
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// Number of completed windows.
    pub fn restarts(&self) -> u64 {
        self.restarts
    }

    pub fn set_bonus_scale(&mut self, action: usize, scale: f64) {
        self.bonus_scale[action] = scale;
    }

    /// UCB index of `action`; `+∞` for an unpulled arm.
    #[inline]
    pub fn index(&self, action: usize) -> f64 {
        let n = self.pulls[action];
        if n == 0 {
            return f64::INFINITY;
        }
        let scale = self.bonus_scale[action];
        let bonus = if scale == 0.0 {
            0.0
        } else {
            (scale * self.log_window / n as f64).sqrt()
        };
        self.means[action] + bonus
    }

    /// Arm with the largest index, smallest index on ties.
    ///
    /// Panics if the previous selection has not been observed yet.
    #[inline]
    pub fn select(&mut self) -> usize {
        assert!(
            self.pending.is_none(),
            "UcbPolicy::select called twice without observe"
        );
        let mut best = 0;
        let mut best_index = self.index(0);
        for a in 1..self.actions() {
            if best_index == f64::INFINITY {
                break;
            }
            let idx = self.index(a);
            if idx > best_index {
                best = a;
                best_index = idx;
            }
        }
        self.pending = Some(best);
        best
    }

    /// Records the reward of the pending selection and advances the window
    /// clock. Returns true if this observation closed the window.
    #[inline]
    pub fn observe(&mut self, action: usize, reward: f64) -> bool {
        assert_eq!(
            self.pending.take(),
            Some(action),
            "UcbPolicy::observe must follow select for the same action"
        );
        let n = self.pulls[action] as f64;
        self.means[action] = (n * self.means[action] + reward) / (n + 1.0);
        self.pulls[action] += 1;
        self.step_in_window += 1;
        if self.step_in_window == self.window {
            self.restart();
            true
        } else {
            false
        }
    }

    fn restart(&mut self) {
        self.step_in_window = 0;
        self.pulls.fill(0);
        self.means.fill(0.0);
        self.restarts += 1;
    }
}

/// Cyclic sampling.
#[inline]
pub fn roundrobin_select(step: u64, actions: usize) -> usize {
    (step % actions as u64) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreedyDecision {
    Continue,
    Alarm,
    /// Evidence dropped to zero; moved to the next component.
    Switch,
}

/// Sample one component until its cumulative LLR either reaches the
/// threshold or falls to zero, then move on.
#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    actions: usize,
    current: usize,
    cum_llr: f64,
}

impl GreedyPolicy {
    pub fn new(actions: usize) -> Self {
        assert!(actions > 0, "greedy policy needs at least one action");
        GreedyPolicy {
            actions,
            current: 0,
            cum_llr: 0.0,
        }
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn cum_llr(&self) -> f64 {
        self.cum_llr
    }

    #[inline]
    pub fn step(&mut self, llr: f64, threshold: f64) -> GreedyDecision {
        self.cum_llr += llr;
        if self.cum_llr >= threshold {
            GreedyDecision::Alarm
        } else if self.cum_llr <= 0.0 {
            self.cum_llr = 0.0;
            self.current = (self.current + 1) % self.actions;
            GreedyDecision::Switch
        } else {
            GreedyDecision::Continue
        }
    }
}

//! Change-detection statistics.
//!
//! - [`GlobalCusum`]: one CuSum-like recursion fed by whichever channel was
//!   sampled, `C_n = max(C_{n-1}, 0) + LLR_n`.
//! - [`PerActionCusum`]: one recursion per action; only the sampled action's
//!   component moves.
//! - [`GlrArm`]: the Bernoulli GLR statistic for [0, 1]-valued observations of
//!   one arm, maintained incrementally with prefix sums, together with the
//!   running moments of its increments.
//! - [`SrState`]: the per-action Shiryaev–Roberts-like statistic whose sum
//!   minus `n` is a martingale before the change. It is only used to check
//!   false-alarm behavior.

use crate::error::{Error, Result};

/// Outcome of comparing statistics against a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlarmDecision {
    Continue,
    /// `action` is `Some` for per-action statistics: the smallest index that
    /// crossed.
    Alarm { action: Option<usize> },
}

impl AlarmDecision {
    pub fn is_alarm(self) -> bool {
        matches!(self, AlarmDecision::Alarm { .. })
    }
}

/// Smallest index whose value reaches `threshold`.
#[inline]
pub fn first_crossing(values: impl IntoIterator<Item = f64>, threshold: f64) -> AlarmDecision {
    match values.into_iter().position(|c| c >= threshold) {
        Some(a) => AlarmDecision::Alarm { action: Some(a) },
        None => AlarmDecision::Continue,
    }
}

fn check_finite(increment: f64) -> Result<()> {
    if increment.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite statistic increment {increment}")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GlobalCusum {
    c: f64,
}

impl GlobalCusum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts from an arbitrary value (tests and restarts).
    pub fn with_value(c: f64) -> Self {
        GlobalCusum { c }
    }

    pub fn value(&self) -> f64 {
        self.c
    }

    #[inline]
    pub fn update(&mut self, increment: f64) -> Result<f64> {
        check_finite(increment)?;
        self.c = self.c.max(0.0) + increment;
        Ok(self.c)
    }

    #[inline]
    pub fn check(&self, threshold: f64) -> AlarmDecision {
        if self.c >= threshold {
            AlarmDecision::Alarm { action: None }
        } else {
            AlarmDecision::Continue
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerActionCusum {
    c: Vec<f64>,
}

impl PerActionCusum {
    pub fn new(actions: usize) -> Self {
        PerActionCusum {
            c: vec![0.0; actions],
        }
    }

    pub fn from_values(c: Vec<f64>) -> Self {
        PerActionCusum { c }
    }

    pub fn values(&self) -> &[f64] {
        &self.c
    }

    /// Panics when `action` is out of range.
    #[inline]
    pub fn update(&mut self, action: usize, increment: f64) -> Result<f64> {
        check_finite(increment)?;
        let c = &mut self.c[action];
        *c = c.max(0.0) + increment;
        Ok(*c)
    }

    #[inline]
    pub fn check(&self, threshold: f64) -> AlarmDecision {
        first_crossing(self.c.iter().copied(), threshold)
    }
}

/// `p ln(p/q) + (1-p) ln((1-p)/(1-q))` with `0 ln 0 = 0`.
///
/// `q` must lie strictly inside (0, 1). Tiny negative results from rounding
/// are clamped to zero.
#[inline]
pub fn bernoulli_kl(p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("kl: p = {p} outside [0, 1]")));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("kl: q = {q} outside (0, 1)")));
    }
    Ok(bernoulli_kl_unchecked(p, q))
}

#[inline]
fn bernoulli_kl_unchecked(p: f64, q: f64) -> f64 {
    let head = if p > 0.0 { p * (p / q).ln() } else { 0.0 };
    let tail = if p < 1.0 {
        (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln()
    } else {
        0.0
    };
    (head + tail).max(0.0)
}

/// Bernoulli GLR state for one arm.
///
/// The buffer is never truncated: the statistic is an exact maximum over all
/// split points, `O(count)` work per append. `split_stride > 1` evaluates
/// only every `stride`-th split point (plus the last one) and trades
/// exactness for speed.
#[derive(Debug, Clone, PartialEq)]
pub struct GlrArm {
    prefix: Vec<f64>,
    g: f64,
    split_stride: usize,
    // Welford moments of ΔG(m) for m >= 2.
    inc_count: u64,
    inc_mean: f64,
    inc_m2: f64,
}

impl Default for GlrArm {
    fn default() -> Self {
        Self::new()
    }
}

impl GlrArm {
    pub fn new() -> Self {
        Self::with_split_stride(1)
    }

    pub fn with_split_stride(split_stride: usize) -> Self {
        GlrArm {
            prefix: Vec::new(),
            g: 0.0,
            split_stride: split_stride.max(1),
            inc_count: 0,
            inc_mean: 0.0,
            inc_m2: 0.0,
        }
    }

    /// Total samples ever appended.
    pub fn count(&self) -> usize {
        self.prefix.len()
    }

    /// Current GLR value.
    pub fn value(&self) -> f64 {
        self.g
    }

    /// Running sums; `prefix_sums()[i]` is the sum of the first `i + 1` samples.
    pub fn prefix_sums(&self) -> &[f64] {
        &self.prefix
    }

    pub fn append(&mut self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("GLR observation {x} outside [0, 1]")));
        }
        let total = self.prefix.last().copied().unwrap_or(0.0) + x;
        self.prefix.push(total);
        let previous = self.g;
        self.g = self.recompute();
        if self.count() >= 2 {
            let delta = self.g - previous;
            self.inc_count += 1;
            let d = delta - self.inc_mean;
            self.inc_mean += d / self.inc_count as f64;
            self.inc_m2 += d * (delta - self.inc_mean);
        }
        Ok(self.g)
    }

    fn recompute(&self) -> f64 {
        let n = self.prefix.len();
        if n < 2 {
            return 0.0;
        }
        let total = self.prefix[n - 1];
        let global = total / n as f64;
        // A global mean at 0 or 1 means every sample equals it, so every
        // segment mean does too and each kl term vanishes.
        if !(global > 0.0 && global < 1.0) {
            return 0.0;
        }
        let mut best = 0.0f64;
        let stride = self.split_stride;
        let mut s = stride.min(n - 1);
        loop {
            let head = self.prefix[s - 1];
            let left = head / s as f64;
            let right = (total - head) / (n - s) as f64;
            let score = s as f64 * bernoulli_kl_unchecked(left.clamp(0.0, 1.0), global)
                + (n - s) as f64 * bernoulli_kl_unchecked(right.clamp(0.0, 1.0), global);
            best = best.max(score);
            if s == n - 1 {
                break;
            }
            s = (s + stride).min(n - 1);
        }
        best
    }

    /// `G / count`. Panics if nothing has been appended.
    pub fn normalized_reward(&self) -> f64 {
        assert!(self.count() > 0, "normalized reward of an empty GLR arm");
        self.g / self.count() as f64
    }

    /// Variance of the increments `ΔG(m)`, `m = 2..=count`, with divisor
    /// `count - 2`. `None` until `count >= 3`.
    pub fn increment_variance(&self) -> Option<f64> {
        if self.count() < 3 {
            return None;
        }
        Some((self.inc_m2 / (self.count() - 2) as f64).max(0.0))
    }
}

/// Cap applied when `exp` overflows inside [`SrState::update`].
pub const SR_OVERFLOW_CAP: f64 = 1e300;

#[derive(Debug, Clone, PartialEq)]
pub struct SrState {
    s: Vec<f64>,
    total: f64,
    overflowed: bool,
}

impl SrState {
    pub fn new(actions: usize) -> Self {
        SrState {
            s: vec![0.0; actions],
            total: 0.0,
            overflowed: false,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.s
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// True once any update had to be clamped.
    pub fn overflowed(&self) -> bool {
        self.overflowed
    }

    pub fn update(&mut self, action: usize, llr: f64) -> Result<f64> {
        check_finite(llr)?;
        let mut next = (self.s[action] + 1.0) * llr.exp();
        if !next.is_finite() || next > SR_OVERFLOW_CAP {
            next = SR_OVERFLOW_CAP;
            self.overflowed = true;
        }
        self.s[action] = next;
        self.total = self.s.iter().sum();
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cusum_trace() {
        let mut c = GlobalCusum::new();
        let trace: Vec<f64> = [1.0, -2.0, 3.0].iter().map(|&i| c.update(i).unwrap()).collect();
        assert_eq!(trace, vec![1.0, -1.0, 3.0]);

        let mut c = GlobalCusum::with_value(-5.0);
        assert_eq!(c.update(0.0).unwrap(), 0.0);
        let mut c = GlobalCusum::with_value(2.0);
        assert_eq!(c.update(-1.0).unwrap(), 1.0);
    }

    #[test]
    fn cusum_rejects_non_finite() {
        let mut c = GlobalCusum::new();
        assert!(matches!(c.update(f64::NAN), Err(Error::Numeric(_))));
        assert!(c.update(f64::INFINITY).is_err());
        let mut pa = PerActionCusum::new(2);
        assert!(pa.update(0, f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn per_action_recursion() {
        let mut pa = PerActionCusum::new(3);
        pa.update(1, 2.0).unwrap();
        assert_eq!(pa.values(), &[0.0, 2.0, 0.0]);
        pa.update(1, -3.0).unwrap();
        pa.update(1, 1.0).unwrap();
        assert_eq!(pa.values()[1], 1.0);
        let before = pa.values()[2];
        pa.update(0, 7.0).unwrap();
        assert_eq!(pa.values()[2].to_bits(), before.to_bits());
    }

    #[test]
    #[should_panic]
    fn per_action_out_of_range_panics() {
        let mut pa = PerActionCusum::new(2);
        let _ = pa.update(2, 1.0);
    }

    #[test]
    fn alarm_rules() {
        let b = 4.0;
        assert!(GlobalCusum::with_value(b).check(b).is_alarm());
        assert_eq!(GlobalCusum::with_value(b - 1e-12).check(b), AlarmDecision::Continue);
        let pa = PerActionCusum::from_values(vec![0.1, b + 1.0, b + 2.0]);
        assert_eq!(pa.check(b), AlarmDecision::Alarm { action: Some(1) });
        assert_eq!(first_crossing([0.0, 3.0], b), AlarmDecision::Continue);
    }

    #[test]
    fn kl_values() {
        assert_eq!(bernoulli_kl(0.5, 0.5).unwrap(), 0.0);
        assert!((bernoulli_kl(0.0, 0.5).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((bernoulli_kl(1.0, 0.25).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert!(bernoulli_kl(0.3, 0.0).is_err());
        assert!(bernoulli_kl(0.3, 1.0).is_err());
        assert!(bernoulli_kl(1.2, 0.5).is_err());
    }

    #[test]
    fn glr_constant_and_single() {
        let mut arm = GlrArm::new();
        arm.append(0.7).unwrap();
        assert_eq!(arm.value(), 0.0);
        let mut arm = GlrArm::new();
        for _ in 0..4 {
            arm.append(0.25).unwrap();
        }
        assert_eq!(arm.value(), 0.0);
        assert_eq!(arm.normalized_reward(), 0.0);
        assert_eq!(arm.increment_variance(), Some(0.0));
        // inexact sums leave only rounding noise
        let mut arm = GlrArm::new();
        for _ in 0..50 {
            arm.append(0.3).unwrap();
        }
        assert!(arm.value().abs() < 1e-12, "{}", arm.value());
        // all zeros: global mean on the boundary, no evidence
        let mut arm = GlrArm::new();
        for _ in 0..5 {
            assert_eq!(arm.append(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn glr_step_sequence() {
        let xs = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let mut arm = GlrArm::new();
        for &x in &xs {
            arm.append(x).unwrap();
        }
        // Direct double loop.
        let n = xs.len();
        let q = xs.iter().sum::<f64>() / n as f64;
        let mut best = 0.0f64;
        for s in 1..n {
            let l: f64 = xs[..s].iter().sum::<f64>() / s as f64;
            let r: f64 = xs[s..].iter().sum::<f64>() / (n - s) as f64;
            best = best.max(s as f64 * bernoulli_kl(l, q).unwrap() + (n - s) as f64 * bernoulli_kl(r, q).unwrap());
        }
        assert_eq!(arm.value(), best);
        // split at s = 3 gives 6 ln 2
        assert!((best - 6.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(arm.normalized_reward(), best / 6.0);
        assert_eq!(arm.prefix_sums().len(), arm.count());
    }

    #[test]
    fn glr_rejects_out_of_range() {
        let mut arm = GlrArm::new();
        assert!(arm.append(1.5).is_err());
        assert!(arm.append(-0.1).is_err());
        assert!(arm.append(f64::NAN).is_err());
        assert_eq!(arm.count(), 0);
    }

    #[test]
    #[should_panic]
    fn normalized_reward_of_empty_arm_panics() {
        GlrArm::new().normalized_reward();
    }

    #[test]
    fn increment_variance_two_pass() {
        let xs = [0.0, 1.0, 0.0, 1.0, 0.0];
        let mut arm = GlrArm::new();
        let mut gs = vec![0.0];
        for (i, &x) in xs.iter().enumerate() {
            gs.push(arm.append(x).unwrap());
            if i < 2 {
                assert_eq!(arm.increment_variance(), None);
            }
        }
        // ΔG(m) for m = 2..=5, gs[m] = G(m)
        let incs: Vec<f64> = (2..=5).map(|m| gs[m] - gs[m - 1]).collect();
        let mean = incs.iter().sum::<f64>() / incs.len() as f64;
        let ss: f64 = incs.iter().map(|d| (d - mean) * (d - mean)).sum();
        let two_pass = ss / (5 - 2) as f64;
        let got = arm.increment_variance().unwrap();
        assert!(
            (got - two_pass).abs() <= 8.0 * f64::EPSILON * two_pass.abs().max(f64::MIN_POSITIVE),
            "{got} vs {two_pass}"
        );
    }

    #[test]
    fn sr_updates() {
        let mut sr = SrState::new(2);
        assert_eq!(sr.update(0, 0.0).unwrap(), 1.0);
        assert_eq!(sr.update(0, std::f64::consts::LN_2).unwrap(), 4.0);
        assert_eq!(sr.values()[1], 0.0);
        assert_eq!(sr.total(), 4.0);
        assert!(!sr.overflowed());
        sr.update(1, 800.0).unwrap();
        assert!(sr.overflowed());
        assert_eq!(sr.values()[1], SR_OVERFLOW_CAP);
    }

    #[test]
    fn glr_stride_bounds_exact_value() {
        let xs: Vec<f64> = (0..40).map(|i| if i < 25 { 0.1 } else { 0.8 }).collect();
        let mut exact = GlrArm::new();
        let mut coarse = GlrArm::with_split_stride(4);
        for &x in &xs {
            exact.append(x).unwrap();
            coarse.append(x).unwrap();
            assert!(coarse.value() <= exact.value());
        }
        assert!(coarse.value() > 0.5 * exact.value());
    }

    proptest! {
        #[test]
        fn kl_is_nonnegative(p in 0.0f64..=1.0, q in 1e-9f64..(1.0 - 1e-9)) {
            prop_assert!(bernoulli_kl(p, q).unwrap() >= 0.0);
            prop_assert_eq!(bernoulli_kl(q, q).unwrap(), 0.0);
        }

        #[test]
        fn cusum_matches_fold(incs in proptest::collection::vec(-5.0f64..5.0, 0..200)) {
            let mut c = GlobalCusum::new();
            for &i in &incs {
                c.update(i).unwrap();
            }
            let folded = incs.iter().fold(0.0f64, |acc, &i| acc.max(0.0) + i);
            prop_assert_eq!(c.value().to_bits(), folded.to_bits());
        }

        #[test]
        fn sr_total_is_sum(steps in proptest::collection::vec((0usize..4, -3.0f64..3.0), 1..100)) {
            let mut sr = SrState::new(4);
            for (a, l) in steps {
                sr.update(a, l).unwrap();
                prop_assert!(sr.values().iter().all(|&s| s >= 0.0));
                prop_assert_eq!(sr.total(), sr.values().iter().sum::<f64>());
            }
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack for the schedule laws in floating point, measured against
/// the magnitude of `γ_{t+1}` (the difference `γ_{t+1} − γ_t` cancels).
pub const SCHEDULE_REL_SLACK: f64 = 1e-12;

/// Oblivious polynomial step sizes of degree `n`:
/// `α_t = c·(t+1)ⁿ`, `γ_t = c·t^{n+1}/(n+1)`.
///
/// The `t+1` in `α_t` is what makes `γ_{t+1} − γ_t ≤ α_t` hold: by the mean
/// value theorem `γ_{t+1} − γ_t = c·ξⁿ` for some `ξ ∈ (t, t+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub degree: u32,
    pub scale: f64,
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule {
            degree: 1,
            scale: 1.0,
        }
    }
}

impl StepSchedule {
    pub fn new(degree: u32, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::invalid("scale", format!("must be positive, got {scale}")));
        }
        Ok(StepSchedule { degree, scale })
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.scale * ((t + 1) as f64).powi(self.degree as i32)
    }

    pub fn gamma(&self, t: usize) -> f64 {
        let n1 = self.degree as i32 + 1;
        self.scale * (t as f64).powi(n1) / n1 as f64
    }

    /// `(α_t, γ_t)` for `t ≥ 1`.
    pub fn at(&self, t: usize) -> Result<(f64, f64)> {
        if t < 1 {
            return Err(Error::invalid("t", "schedule is indexed from 1"));
        }
        Ok((self.alpha(t), self.gamma(t)))
    }

    /// Checks `α_t ≤ α_{t+1}` and `γ_{t+1} − γ_t ≤ α_t` for `1 ≤ t ≤ horizon`,
    /// and that `A_t` stays finite and strictly increasing.
    pub fn verify(&self, horizon: usize) -> Result<()> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::invalid("scale", "must be positive"));
        }
        let mut partial = 0.0f64;
        for t in 1..=horizon {
            let (a0, a1) = (self.alpha(t), self.alpha(t + 1));
            let (g0, g1) = (self.gamma(t), self.gamma(t + 1));
            if a0 > a1 {
                return Err(Error::ScheduleViolation {
                    law: "alpha_t <= alpha_{t+1}",
                    t,
                });
            }
            if g1 - g0 > a0 + SCHEDULE_REL_SLACK * g1.abs() {
                return Err(Error::ScheduleViolation {
                    law: "gamma_{t+1} - gamma_t <= alpha_t",
                    t,
                });
            }
            let next = partial + a0;
            if !next.is_finite() || next <= partial {
                return Err(Error::ScheduleViolation {
                    law: "A_t finite and increasing",
                    t,
                });
            }
            partial = next;
        }
        Ok(())
    }

    /// Relative-scale transition time `sup{t ≥ 1 : γ_t/α_t ≤ 2L⋆/μ}`.
    /// `γ_t/α_t` is increasing, so this is a simple scan capped at `cap`.
    pub fn transition_time_relative(&self, lstar: f64, mu: f64, cap: usize) -> Option<usize> {
        let threshold = 2.0 * lstar / mu;
        (1..=cap)
            .take_while(|&t| self.gamma(t) / self.alpha(t) <= threshold)
            .last()
    }

    /// Smooth-case transition time `max{t : 2L/μ ≤ γ_t A_t / α_t²}` is
    /// reported as the first `t` where the inequality starts to hold.
    pub fn transition_time_smooth(&self, l: f64, mu: f64, cap: usize) -> Option<usize> {
        let threshold = 2.0 * l / mu;
        let mut partial = 0.0;
        for t in 1..=cap {
            let a = self.alpha(t);
            partial += a;
            if self.gamma(t) * partial / (a * a) >= threshold {
                return Some(t);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_zero_is_equality_case() {
        let s = StepSchedule::new(0, 2.0).unwrap();
        for t in 1..50 {
            let (a, g) = s.at(t).unwrap();
            assert_eq!(a, 2.0);
            assert_eq!(g, 2.0 * t as f64);
            assert_eq!(s.gamma(t + 1) - s.gamma(t), a);
        }
    }

    #[test]
    fn degree_one_values() {
        let s = StepSchedule::new(1, 1.0).unwrap();
        assert_eq!(s.at(3).unwrap(), (4.0, 4.5));
        assert!(s.at(0).is_err());
        assert!(StepSchedule::new(1, 0.0).is_err());
    }

    #[test]
    fn degree_two_long_horizon() {
        let s = StepSchedule::new(2, 1.0).unwrap();
        s.verify(100_000).unwrap();
    }

    #[test]
    fn unshifted_polynomials_would_fail() {
        // α_t = tⁿ with γ_t = t^{n+1}/(n+1) breaks the second law for n ≥ 1.
        for n in 1..4 {
            let alpha = |t: f64| t.powi(n);
            let gamma = |t: f64| t.powi(n + 1) / (n + 1) as f64;
            assert!(gamma(2.0) - gamma(1.0) > alpha(1.0));
        }
    }

    #[test]
    fn transition_times() {
        let s = StepSchedule::new(1, 1.0).unwrap();
        // γ_t/α_t = t²/(2(t+1)) ≤ 10 up to t = 20.
        assert_eq!(s.transition_time_relative(0.5, 0.1, 1000), Some(20));
        assert_eq!(s.transition_time_relative(1e-9, 1.0, 1000), None);
        assert!(s.transition_time_smooth(10.0, 0.1, 10_000).is_some());
    }
}

//! Diffusion variance schedule.
//!
//! A schedule holds `beta[t]` for `t in 0..T` together with the derived
//! quantities used throughout forward and reverse diffusion:
//! `alpha_bar[t] = prod_{i=0..t} (1 - beta[i])` and the posterior variance
//! `beta_hat[t] = (1 - alpha_bar[t-1]) / (1 - alpha_bar[t]) * beta[t]`
//! (with `beta_hat[0] = beta[0]`).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSchedule {
    beta: Vec<f64>,
    alpha_bar: Vec<f64>,
    beta_hat: Vec<f64>,
}

impl DiffusionSchedule {
    /// Build a schedule from raw per-step variances.
    pub fn from_betas(beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::param("beta", "schedule needs at least one step"));
        }
        if beta.iter().any(|&b| !(0.0..1.0).contains(&b) || b == 0.0) {
            return Err(Error::param("beta", "every beta must lie in (0, 1)"));
        }
        let mut alpha_bar = Vec::with_capacity(beta.len());
        let mut prod = 1.0;
        for &b in &beta {
            prod *= 1.0 - b;
            alpha_bar.push(prod);
        }
        if *alpha_bar.last().unwrap() <= 0.0 {
            return Err(Error::param("beta", "alpha_bar underflowed to zero"));
        }
        let mut beta_hat = Vec::with_capacity(beta.len());
        beta_hat.push(beta[0]);
        for t in 1..beta.len() {
            beta_hat.push((1.0 - alpha_bar[t - 1]) / (1.0 - alpha_bar[t]) * beta[t]);
        }
        Ok(Self {
            beta,
            alpha_bar,
            beta_hat,
        })
    }

    /// Linear schedule: `beta[t] = start + (end - start) * t / (T - 1)`,
    /// degenerating to `beta = [start]` when `T = 1`.
    pub fn linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::param("steps", "must be at least 1"));
        }
        if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
            return Err(Error::param(
                "beta range",
                format!("need 0 < start <= end < 1, got start={beta_start}, end={beta_end}"),
            ));
        }
        let beta = if steps == 1 {
            vec![beta_start]
        } else {
            (0..steps)
                .map(|t| beta_start + (beta_end - beta_start) * t as f64 / (steps - 1) as f64)
                .collect()
        };
        Self::from_betas(beta)
    }

    pub fn steps(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.beta[t]
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bar[t]
    }

    pub fn beta_hat(&self, t: usize) -> f64 {
        self.beta_hat[t]
    }

    pub fn betas(&self) -> &[f64] {
        &self.beta
    }

    pub fn check_timestep(&self, t: usize) -> Result<()> {
        if t < self.steps() {
            Ok(())
        } else {
            Err(Error::TimestepOutOfRange {
                t,
                steps: self.steps(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_endpoints() {
        let s = DiffusionSchedule::linear(1000, 1e-4, 0.02).unwrap();
        assert_eq!(s.beta(0), 1e-4);
        assert_eq!(s.beta(999), 0.02);
        assert_eq!(s.steps(), 1000);
    }

    #[test]
    fn alpha_bar_two_steps() {
        let s = DiffusionSchedule::linear(2, 0.5, 0.5).unwrap();
        assert!((s.alpha_bar(0) - 0.5).abs() < 1e-15);
        assert!((s.alpha_bar(1) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn alpha_bar_three_steps() {
        let s = DiffusionSchedule::linear(3, 0.1, 0.3).unwrap();
        assert!((s.alpha_bar(2) - 0.504).abs() < 1e-12, "{}", s.alpha_bar(2));
    }

    #[test]
    fn beta_hat_definition() {
        let s = DiffusionSchedule::linear(5, 0.1, 0.3).unwrap();
        assert_eq!(s.beta_hat(0), s.beta(0));
        for t in 1..5 {
            let expect = (1.0 - s.alpha_bar(t - 1)) / (1.0 - s.alpha_bar(t)) * s.beta(t);
            assert!((s.beta_hat(t) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn single_step_schedule() {
        let s = DiffusionSchedule::linear(1, 0.1, 0.2).unwrap();
        assert_eq!(s.beta(0), 0.1);
        assert_eq!(s.beta_hat(0), 0.1);
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(DiffusionSchedule::linear(0, 0.1, 0.2).is_err());
        assert!(DiffusionSchedule::linear(10, 0.0, 0.2).is_err());
        assert!(DiffusionSchedule::linear(10, 0.3, 0.2).is_err());
        assert!(DiffusionSchedule::linear(10, 0.1, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn alpha_bar_strictly_decreasing_in_unit_interval(
            steps in 1usize..200,
            start in 1e-5f64..0.05,
            spread in 0.0f64..0.5,
        ) {
            let end = (start + spread).min(0.95);
            let s = DiffusionSchedule::linear(steps, start, end).unwrap();
            for t in 0..s.steps() {
                prop_assert!(s.alpha_bar(t) > 0.0 && s.alpha_bar(t) <= 1.0);
                if t > 0 {
                    prop_assert!(s.alpha_bar(t) < s.alpha_bar(t - 1));
                }
            }
        }
    }
}

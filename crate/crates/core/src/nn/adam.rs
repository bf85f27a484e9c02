use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates for one parameter group.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f32>,
    pub v: Vec<f32>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

pub struct Adam;

impl Adam {
    /// One bias-corrected Adam update of `params` from `grads`.
    pub fn step(cfg: &AdamConfig, state: &mut AdamState, params: &mut [f32], grads: &[f32]) {
        assert_eq!(params.len(), grads.len());
        assert_eq!(params.len(), state.m.len());
        state.t += 1;
        let t = state.t as i32;
        let (b1, b2) = (cfg.beta1 as f32, cfg.beta2 as f32);
        let c1 = 1.0 - libm::pow(cfg.beta1, t as f64);
        let c2 = 1.0 - libm::pow(cfg.beta2, t as f64);
        let step = (cfg.learning_rate / c1) as f32;
        let c2 = c2 as f32;
        let eps = cfg.eps as f32;
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(state.m.iter_mut())
            .zip(state.v.iter_mut())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let vhat = *v / c2;
            *p -= step * *m / (libm::sqrtf(vhat) + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let cfg = AdamConfig::default();
        let mut s = AdamState::new(3);
        let mut p = [0.5f32, -1.0, 2.0];
        for _ in 0..10 {
            Adam::step(&cfg, &mut s, &mut p, &[0.0; 3]);
        }
        assert_eq!(p, [0.5, -1.0, 2.0]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamConfig::default();
        let mut s = AdamState::new(2);
        let mut p = [0.0f32, 0.0];
        Adam::step(&cfg, &mut s, &mut p, &[3.0, -0.5]);
        assert!((p[0] + 2e-4).abs() < 1e-8);
        assert!((p[1] - 2e-4).abs() < 1e-8);
    }
}

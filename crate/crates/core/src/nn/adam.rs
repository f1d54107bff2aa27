//! Adam with bias correction. The defaults follow the converter training
//! protocol: no first-moment averaging (β₁ = 0) and β₂ = 0.999.

use serde::{Deserialize, Serialize};

use super::{DenseNet, Gradients};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.0,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub config: AdamConfig,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(param_count: usize, config: AdamConfig) -> Result<Self> {
        if !(0.0..1.0).contains(&config.beta1) || !(0.0..1.0).contains(&config.beta2) {
            return Err(Error::param("beta", "β₁ and β₂ must lie in [0, 1)"));
        }
        if config.learning_rate < 0.0 || config.epsilon <= 0.0 {
            return Err(Error::param("learning_rate", "learning rate must be ≥ 0 and ε > 0"));
        }
        Ok(Self {
            config,
            first_moment: vec![0.0; param_count],
            second_moment: vec![0.0; param_count],
            step: 0,
        })
    }

    pub fn for_net(net: &DenseNet, config: AdamConfig) -> Result<Self> {
        Self::new(net.param_count(), config)
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One descent update of `params` along `grads`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(Error::shape(format!(
                "adam state sized for {}, got {} params and {} grads",
                self.first_moment.len(),
                params.len(),
                grads.len()
            )));
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
        Ok(())
    }

    /// Descent step on a network's parameters.
    pub fn step_net(&mut self, net: &mut DenseNet, grads: &Gradients) -> Result<()> {
        let mut params = net.params();
        self.step(&mut params, &grads.flatten())?;
        net.set_params(&params)
    }

    /// Ascent step: moves the parameters up the gradient.
    pub fn ascend_net(&mut self, net: &mut DenseNet, grads: &Gradients) -> Result<()> {
        let mut params = net.params();
        let neg: Vec<f64> = grads.flatten().iter().map(|g| -g).collect();
        self.step(&mut params, &neg)?;
        net.set_params(&params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut s = AdamState::new(3, AdamConfig::default()).unwrap();
        let mut p = vec![1.0, -2.0, 0.5];
        s.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(s.step_count(), 1);
    }

    #[test]
    fn single_step_by_hand() {
        let cfg = AdamConfig {
            learning_rate: 0.1,
            beta1: 0.0,
            beta2: 0.999,
            epsilon: 1e-8,
        };
        let mut s = AdamState::new(1, cfg).unwrap();
        let mut p = vec![0.0];
        s.step(&mut p, &[1.0]).unwrap();
        // m = 1, v = 0.001, v̂ = 0.001 / (1 - 0.999) = 1
        let v_hat: f64 = (1.0 - 0.999) * 1.0 / (1.0 - 0.999);
        let expected = -0.1 * 1.0 / (v_hat.sqrt() + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15);
        assert!((p[0] + 0.1).abs() < 1e-8);
    }

    #[test]
    fn repeated_gradient_step_does_not_grow() {
        let cfg = AdamConfig::with_lr(0.1);
        let mut s = AdamState::new(1, cfg).unwrap();
        let mut p = vec![0.0];
        let mut steps = Vec::new();
        for _ in 0..5 {
            let before = p[0];
            s.step(&mut p, &[1.0]).unwrap();
            steps.push((p[0] - before).abs());
        }
        // Recurrence with β₁ = 0 and constant g: v̂_t = g² exactly, so every step is lr·g/(|g|+ε).
        for w in steps.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "{steps:?}");
        }
    }

    #[test]
    fn rejects_bad_config_and_shapes() {
        let bad = AdamConfig {
            beta2: 1.0,
            ..AdamConfig::default()
        };
        assert!(AdamState::new(1, bad).is_err());
        let mut s = AdamState::new(2, AdamConfig::default()).unwrap();
        assert!(s.step(&mut [0.0], &[0.0]).is_err());
    }
}

use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Adam with bias-corrected moments.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(params: usize, config: AdamConfig) -> Self {
        Self { config, m: vec![T::zero(); params], v: vec![T::zero(); params], step: 0 }
    }

    pub fn apply(&mut self, params: &mut [T], grad: &[T]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.step += 1;
        let c = &self.config;
        let b1 = T::lit(c.beta1);
        let b2 = T::lit(c.beta2);
        let one = T::one();
        let t = self.step as i32;
        let bc1 = one - T::lit(c.beta1.powi(t));
        let bc2 = one - T::lit(c.beta2.powi(t));
        let lr = T::lit(c.learning_rate);
        let eps = T::lit(c.epsilon);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + (one - b1) * g;
            self.v[i] = b2 * self.v[i] + (one - b2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = vec![1.0f64, -2.0, 0.5];
        let mut adam = AdamState::new(3, AdamConfig::default());
        adam.apply(&mut p, &[0.3, -4.0, 0.0]);
        assert!((p[0] - (1.0 - 1e-3 * 0.3 / (0.3 + 1e-8))).abs() < 1e-15);
        assert!((p[1] - (-2.0 + 1e-3 * 4.0 / (4.0 + 1e-8))).abs() < 1e-15);
        assert_eq!(p[2], 0.5);
    }

    #[test]
    fn zero_gradient_keeps_params() {
        let mut p = vec![0.7f32; 4];
        let mut adam = AdamState::new(4, AdamConfig::default());
        for _ in 0..5 {
            adam.apply(&mut p, &[0.0; 4]);
        }
        assert_eq!(p, vec![0.7f32; 4]);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut p = vec![3.0f64];
        let mut adam = AdamState::new(1, AdamConfig { learning_rate: 0.05, ..Default::default() });
        for _ in 0..2000 {
            let g = 2.0 * (p[0] - 1.0);
            adam.apply(&mut p, &[g]);
        }
        assert!((p[0] - 1.0).abs() < 1e-3);
    }
}

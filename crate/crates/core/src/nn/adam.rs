use crate::error::{config_err, Result};
use crate::tensor::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment estimates for one parameter array.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T: Real = f32> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: u64,
    pub config: AdamConfig,
}

impl<T: Real> AdamState<T> {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        AdamState {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            t: 0,
            config,
        }
    }
}

/// One bias-corrected Adam update of `param` in place.
pub fn adam_step<T: Real>(param: &mut [T], grad: &[T], state: &mut AdamState<T>, lr: T) -> Result<()> {
    if param.len() != grad.len() || param.len() != state.m.len() {
        return Err(config_err!(
            "adam_step: param {}, grad {}, state {}",
            param.len(),
            grad.len(),
            state.m.len()
        ));
    }
    state.t += 1;
    let b1 = T::lit(state.config.beta1);
    let b2 = T::lit(state.config.beta2);
    let eps = T::lit(state.config.eps);
    let t = i32::try_from(state.t).unwrap_or(i32::MAX);
    let bc1 = T::one() - b1.powi(t);
    let bc2 = T::one() - b2.powi(t);
    for (((p, &g), m), v) in param.iter_mut().zip(grad).zip(&mut state.m).zip(&mut state.v) {
        *m = b1 * *m + (T::one() - b1) * g;
        *v = b2 * *v + (T::one() - b2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = vec![0.5f32, -1.0];
        let mut s = AdamState::new(2, AdamConfig::default());
        adam_step(&mut p, &[0.0, 0.0], &mut s, 0.1).unwrap();
        assert_eq!(p, vec![0.5, -1.0]);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient() {
        let mut p = vec![0.0f64, 0.0, 0.0];
        let mut s = AdamState::new(3, AdamConfig::default());
        adam_step(&mut p, &[3.0, -0.02, 1e-3], &mut s, 1e-3).unwrap();
        assert!((p[0] + 1e-3).abs() < 1e-9);
        assert!((p[1] - 1e-3).abs() < 1e-9);
        // ε matters once |g| approaches it
        assert!((p[2] + 1e-3).abs() < 1e-8);
    }

    #[test]
    fn matches_scalar_oracle_on_quadratic() {
        // Independent scalar transcription of Adam on f(w) = w².
        let (b1, b2, eps, lr) = (0.9f64, 0.999f64, 1e-8f64, 0.1f64);
        let (mut w, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        let mut expected = Vec::new();
        for t in 1..=3 {
            let g = 2.0 * w;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            w -= lr * mh / (vh.sqrt() + eps);
            expected.push(w);
        }
        let mut p = vec![1.0f64];
        let mut s = AdamState::new(1, AdamConfig::default());
        for want in expected {
            let g = [2.0 * p[0]];
            adam_step(&mut p, &g, &mut s, 0.1).unwrap();
            assert!((p[0] - want).abs() < 1e-6);
        }
        assert_eq!(s.t, 3);
        assert!(s.v.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn shape_mismatch() {
        let mut s = AdamState::<f32>::new(2, AdamConfig::default());
        assert!(adam_step(&mut [0.0f32; 3], &[0.0; 3], &mut s, 0.1).is_err());
    }
}

use serde::{Deserialize, Serialize};

use super::Real;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
            step: 0,
        }
    }
}

/// One bias-corrected Adam step applied in place.
pub fn adam_update<T: Real>(params: &mut [T], grads: &[T], state: &mut AdamState<T>, cfg: &AdamConfig) -> Result<()> {
    let n = params.len();
    if grads.len() != n || state.m.len() != n || state.v.len() != n {
        return Err(Error::Shape {
            what: "Adam buffers",
            expected: n,
            got: grads.len().min(state.m.len()).min(state.v.len()),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let b1 = T::of(cfg.beta1);
    let b2 = T::of(cfg.beta2);
    let one = T::one();
    let c1 = T::of(1.0 / (1.0 - cfg.beta1.powi(t)));
    let c2 = T::of(1.0 / (1.0 - cfg.beta2.powi(t)));
    let lr = T::of(cfg.lr);
    let eps = T::of(cfg.eps);
    for i in 0..n {
        let g = grads[i];
        let m = b1 * state.m[i] + (one - b1) * g;
        let v = b2 * state.v[i] + (one - b2) * g * g;
        state.m[i] = m;
        state.v[i] = v;
        params[i] -= lr * (m * c1) / ((v * c2).sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_first_step_is_noop() {
        let mut p = vec![1.0f64, -2.0, 3.0];
        let mut s = AdamState::new(3);
        adam_update(&mut p, &[0.0; 3], &mut s, &AdamConfig::default()).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let cfg = AdamConfig {
            eps: 0.0,
            ..Default::default()
        };
        let mut p = vec![0.0f64; 3];
        let mut s = AdamState::new(3);
        adam_update(&mut p, &[0.5, -3.0, 1e-4], &mut s, &cfg).unwrap();
        assert!((p[0] + 1e-3).abs() < 1e-15);
        assert!((p[1] - 1e-3).abs() < 1e-15);
        assert!((p[2] + 1e-3).abs() < 1e-12);
    }

    #[test]
    fn quadratic_trajectory_matches_scalar_oracle() {
        // f(x) = Σ a_i (x_i - c_i)², gradient 2a(x - c).
        let a = [1.0, 3.0, 0.2];
        let c = [0.5, -1.0, 2.0];
        let cfg = AdamConfig {
            lr: 0.05,
            ..Default::default()
        };
        let mut x = vec![0.0f64; 3];
        let mut s = AdamState::new(3);
        for _ in 0..10 {
            let g: Vec<f64> = (0..3).map(|i| 2.0 * a[i] * (x[i] - c[i])).collect();
            adam_update(&mut x, &g, &mut s, &cfg).unwrap();
        }
        for i in 0..3 {
            let (mut xi, mut m, mut v) = (0.0f64, 0.0f64, 0.0f64);
            for t in 1..=10 {
                let g = 2.0 * a[i] * (xi - c[i]);
                m = 0.9 * m + 0.1 * g;
                v = 0.999 * v + 0.001 * g * g;
                let mh = m / (1.0 - 0.9f64.powi(t));
                let vh = v / (1.0 - 0.999f64.powi(t));
                xi -= 0.05 * mh / (vh.sqrt() + 1e-8);
            }
            assert!((x[i] - xi).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch() {
        let mut s = AdamState::<f64>::new(2);
        assert!(adam_update(&mut [0.0, 0.0], &[1.0], &mut s, &AdamConfig::default()).is_err());
    }
}

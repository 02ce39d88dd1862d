//! AdamW: Adam moments with weight decay applied directly to the parameters
//! rather than folded into the gradient.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Parameters, TensorRole};

#[derive(Debug, Error, PartialEq)]
pub enum OptimError {
    #[error("non-finite gradient in `{0}`")]
    NonFinite(&'static str),
    #[error("gradient/parameter/state shapes disagree at `{0}`")]
    Shape(&'static str),
    #[error("invalid hyperparameter: {0}")]
    Hyper(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for OptimHyper {
    fn default() -> Self {
        Self {
            lr: 2e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

impl OptimHyper {
    pub fn validate(&self) -> Result<(), OptimError> {
        let ok = self.lr > 0.0
            && self.eps > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.weight_decay >= 0.0
            && [self.lr, self.eps, self.weight_decay].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(OptimError::Hyper(format!("{self:?}")))
        }
    }
}

/// Step counter and moment estimates, one flat buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OptimizerState {
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new<P: Parameters>(params: &P) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .tensors()
            .iter()
            .map(|t| vec![0.0; t.data.len()])
            .collect();
        Self {
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }
}

/// One AdamW update. Gradients are validated before anything is mutated.
///
/// Biases and the PAD embedding row receive no weight decay.
pub fn adamw_step<P: Parameters>(
    params: &mut P,
    grads: &P,
    state: &mut OptimizerState,
    hyper: &OptimHyper,
) -> Result<(), OptimError> {
    let grad_tensors = grads.tensors();
    {
        let param_tensors = params.tensors();
        if param_tensors.len() != grad_tensors.len()
            || state.m.len() != grad_tensors.len()
            || state.v.len() != grad_tensors.len()
        {
            return Err(OptimError::Shape("tensor count"));
        }
        for (i, (p, g)) in param_tensors.iter().zip(&grad_tensors).enumerate() {
            let n = p.data.len();
            if g.data.len() != n || state.m[i].len() != n || state.v[i].len() != n {
                return Err(OptimError::Shape(p.name));
            }
            if g.data.iter().any(|x| !x.is_finite()) {
                return Err(OptimError::NonFinite(g.name));
            }
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - hyper.beta1.powi(t);
    let bias2 = 1.0 - hyper.beta2.powi(t);

    for (i, (p, g)) in params.tensors_mut().into_iter().zip(&grad_tensors).enumerate() {
        let decay_from = match p.role {
            TensorRole::Weight => 0,
            TensorRole::Bias => p.data.len(),
            TensorRole::Embedding { pad_len } => pad_len,
        };
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for (j, theta) in p.data.iter_mut().enumerate() {
            let gj = g.data[j];
            m[j] = hyper.beta1 * m[j] + (1.0 - hyper.beta1) * gj;
            v[j] = hyper.beta2 * v[j] + (1.0 - hyper.beta2) * gj * gj;
            let m_hat = m[j] / bias1;
            let v_hat = v[j] / bias2;
            let decay = if j >= decay_from { hyper.weight_decay * *theta } else { 0.0 };
            *theta -= hyper.lr * (m_hat / (v_hat.sqrt() + hyper.eps) + decay);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{TensorMut, TensorRef};
    use proptest::prelude::*;

    /// Flat test parameter set with a chosen role.
    #[derive(Clone, Debug, PartialEq)]
    struct Flat(Vec<f64>, TensorRole);

    impl Parameters for Flat {
        fn tensors(&self) -> Vec<TensorRef<'_>> {
            vec![TensorRef {
                name: "flat",
                role: self.1,
                shape: vec![self.0.len()],
                data: &self.0,
            }]
        }
        fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
            vec![TensorMut {
                name: "flat",
                role: self.1,
                data: &mut self.0,
            }]
        }
    }

    fn hyper(lr: f64, wd: f64) -> OptimHyper {
        OptimHyper {
            lr,
            weight_decay: wd,
            ..OptimHyper::default()
        }
    }

    #[test]
    fn defaults() {
        let h = OptimHyper::default();
        assert_eq!((h.lr, h.beta1, h.beta2, h.eps, h.weight_decay), (2e-5, 0.9, 0.999, 1e-8, 0.01));
        assert!(h.validate().is_ok());
        assert!(hyper(0.0, 0.0).validate().is_err());
        assert!(OptimHyper { beta2: 1.0, ..h }.validate().is_err());
    }

    /// Textbook scalar Adam on f(θ) = Σ a_i (θ_i − c_i)², written out
    /// independently of `adamw_step`.
    fn scalar_adam(theta: &mut [f64], a: &[f64], c: &[f64], steps: usize, h: &OptimHyper) {
        let mut m = vec![0.0; theta.len()];
        let mut v = vec![0.0; theta.len()];
        for t in 1..=steps {
            for i in 0..theta.len() {
                let g = 2.0 * a[i] * (theta[i] - c[i]);
                m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
                v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
                let mh = m[i] / (1.0 - h.beta1.powi(t as i32));
                let vh = v[i] / (1.0 - h.beta2.powi(t as i32));
                theta[i] -= h.lr * mh / (vh.sqrt() + h.eps);
            }
        }
    }

    #[test]
    fn without_decay_matches_scalar_adam_over_many_steps() {
        let a = [0.5, 2.0, 0.1, 3.0];
        let c = [1.0, -2.0, 0.5, 0.0];
        let h = hyper(0.01, 0.0);
        let start = vec![0.3, 0.7, -1.2, 2.5];
        let mut expect = start.clone();
        scalar_adam(&mut expect, &a, &c, 100, &h);

        let mut p = Flat(start, TensorRole::Weight);
        let mut s = OptimizerState::new(&p);
        for _ in 0..100 {
            let g: Vec<f64> = (0..4).map(|i| 2.0 * a[i] * (p.0[i] - c[i])).collect();
            adamw_step(&mut p, &Flat(g, TensorRole::Weight), &mut s, &h).unwrap();
        }
        for (x, y) in p.0.iter().zip(&expect) {
            assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn zero_gradient_without_decay_is_identity() {
        let mut p = Flat(vec![0.3, -2.0, 7.5], TensorRole::Weight);
        let g = Flat(vec![0.0; 3], TensorRole::Weight);
        let mut s = OptimizerState::new(&p);
        for _ in 0..5 {
            adamw_step(&mut p, &g, &mut s, &hyper(0.1, 0.0)).unwrap();
        }
        assert_eq!(p.0, vec![0.3, -2.0, 7.5]);
        assert_eq!(s.step, 5);
    }

    #[test]
    fn first_step_value() {
        let mut p = Flat(vec![1.0], TensorRole::Weight);
        let g = Flat(vec![0.5], TensorRole::Weight);
        let mut s = OptimizerState::new(&p);
        adamw_step(&mut p, &g, &mut s, &hyper(0.01, 0.0)).unwrap();
        let expected = 1.0 - 0.01 * (0.5 / (0.5 + 1e-8));
        assert!((p.0[0] - expected).abs() < 1e-15);
        assert!((p.0[0] - 0.99).abs() < 1e-9);
    }

    #[test]
    fn decoupled_decay_with_zero_gradient() {
        let mut p = Flat(vec![2.0, -4.0], TensorRole::Weight);
        let g = Flat(vec![0.0; 2], TensorRole::Weight);
        let mut s = OptimizerState::new(&p);
        adamw_step(&mut p, &g, &mut s, &hyper(0.1, 0.5)).unwrap();
        assert_eq!(p.0, vec![2.0 * (1.0 - 0.1 * 0.5), -4.0 * (1.0 - 0.1 * 0.5)]);
    }

    #[test]
    fn biases_and_pad_row_skip_decay() {
        let mut b = Flat(vec![2.0], TensorRole::Bias);
        let g = Flat(vec![0.0], TensorRole::Bias);
        let mut s = OptimizerState::new(&b);
        adamw_step(&mut b, &g, &mut s, &hyper(0.1, 0.5)).unwrap();
        assert_eq!(b.0, vec![2.0]);

        let role = TensorRole::Embedding { pad_len: 2 };
        let mut e = Flat(vec![0.0, 0.0, 1.0, 1.0], role);
        let g = Flat(vec![0.0; 4], role);
        let mut s = OptimizerState::new(&e);
        adamw_step(&mut e, &g, &mut s, &hyper(0.1, 0.5)).unwrap();
        assert_eq!(e.0, vec![0.0, 0.0, 0.95, 0.95]);
    }

    #[test]
    fn nan_gradient_leaves_everything_untouched() {
        let mut p = Flat(vec![1.0, 2.0], TensorRole::Weight);
        let g = Flat(vec![0.1, f64::NAN], TensorRole::Weight);
        let mut s = OptimizerState::new(&p);
        let before = (p.clone(), s.clone());
        assert_eq!(adamw_step(&mut p, &g, &mut s, &hyper(0.1, 0.1)), Err(OptimError::NonFinite("flat")));
        assert_eq!((p, s), before);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = Flat(vec![1.0, 2.0], TensorRole::Weight);
        let g = Flat(vec![0.1], TensorRole::Weight);
        let mut s = OptimizerState::new(&p);
        assert!(matches!(adamw_step(&mut p, &g, &mut s, &hyper(0.1, 0.1)), Err(OptimError::Shape(_))));
    }

    proptest! {
        #[test]
        fn first_step_is_bounded_by_lr(
            theta in proptest::collection::vec(-5.0f64..5.0, 1..8),
            grad in proptest::collection::vec(-3.0f64..3.0, 8),
            lr in 1e-5f64..1.0,
        ) {
            let n = theta.len();
            let mut p = Flat(theta.clone(), TensorRole::Weight);
            let g = Flat(grad[..n].to_vec(), TensorRole::Weight);
            let mut s = OptimizerState::new(&p);
            adamw_step(&mut p, &g, &mut s, &hyper(lr, 0.0)).unwrap();
            for j in 0..n {
                prop_assert!((p.0[j] - theta[j]).abs() <= lr * (1.0 + 1e-12));
            }
        }
    }
}

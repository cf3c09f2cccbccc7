use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const MOMENTUM: f64 = 0.9;
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Momentum,
    Adam,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 3] = [OptimizerKind::Sgd, OptimizerKind::Momentum, OptimizerKind::Adam];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Momentum => "momentum",
            OptimizerKind::Adam => "adam",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown optimizer {s:?} (expected sgd, momentum or adam)"))
    }
}

/// Optimizer with its per-parameter buffers.
///
/// Buffers are allocated on the first [`apply`](Self::apply) to mirror the
/// parameter shapes; later calls must present the same shapes.
#[derive(Debug, Clone)]
pub struct OptimizerState<T: Scalar> {
    pub kind: OptimizerKind,
    pub learning_rate: T,
    velocity: Vec<Tensor<T>>,
    first_moment: Vec<Tensor<T>>,
    second_moment: Vec<Tensor<T>>,
    step: u64,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(kind: OptimizerKind, learning_rate: T) -> Self {
        Self { kind, learning_rate, velocity: Vec::new(), first_moment: Vec::new(), second_moment: Vec::new(), step: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    fn ensure_buffers(&mut self, params: &[&mut Tensor<T>]) -> Result<(), EngineError> {
        let zeros = || params.iter().map(|p| Tensor::zeros(p.shape())).collect::<Vec<_>>();
        let buffers: Vec<&mut Vec<Tensor<T>>> = match self.kind {
            OptimizerKind::Sgd => Vec::new(),
            OptimizerKind::Momentum => vec![&mut self.velocity],
            OptimizerKind::Adam => vec![&mut self.first_moment, &mut self.second_moment],
        };
        for buf in buffers {
            if buf.is_empty() {
                *buf = zeros();
            } else if buf.len() != params.len() || buf.iter().zip(params).any(|(b, p)| b.shape() != p.shape()) {
                return Err(EngineError::Dimension("optimizer buffers do not match parameter shapes".into()));
            }
        }
        Ok(())
    }

    /// Applies one update to every parameter in place.
    pub fn apply(&mut self, params: &mut [&mut Tensor<T>], grads: &[Tensor<T>]) -> Result<(), EngineError> {
        if params.len() != grads.len() {
            return Err(EngineError::Dimension(format!("{} parameters but {} gradients", params.len(), grads.len())));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() {
                return Err(EngineError::Dimension(format!(
                    "parameter {i} has shape {:?} but gradient {:?}",
                    p.shape(),
                    g.shape()
                )));
            }
        }
        self.ensure_buffers(params)?;
        self.step += 1;
        let lr = self.learning_rate;

        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    for (w, &d) in p.data_mut().iter_mut().zip(g.data()) {
                        *w -= lr * d;
                    }
                }
            }
            OptimizerKind::Momentum => {
                let mu = T::of(MOMENTUM);
                for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.velocity) {
                    for ((w, &d), vel) in p.data_mut().iter_mut().zip(g.data()).zip(v.data_mut()) {
                        *vel = mu * *vel + d;
                        *w -= lr * *vel;
                    }
                }
            }
            OptimizerKind::Adam => {
                let t = self.step as i32;
                let (b1, b2, eps) = (T::of(ADAM_BETA1), T::of(ADAM_BETA2), T::of(ADAM_EPSILON));
                let c1 = T::of(1.0 - ADAM_BETA1.powi(t));
                let c2 = T::of(1.0 - ADAM_BETA2.powi(t));
                let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
                for (((p, g), m), v) in
                    params.iter_mut().zip(grads).zip(&mut self.first_moment).zip(&mut self.second_moment)
                {
                    let iter = p.data_mut().iter_mut().zip(g.data()).zip(m.data_mut()).zip(v.data_mut());
                    for (((w, &d), m), v) in iter {
                        *m = b1 * *m + one_b1 * d;
                        *v = b2 * *v + one_b2 * d * d;
                        let m_hat = *m / c1;
                        let v_hat = *v / c2;
                        *w -= lr * m_hat / (v_hat.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar(v: f64) -> Tensor<f64> {
        Tensor::from_f64(vec![1], &[v]).unwrap()
    }

    fn run(kind: OptimizerKind, lr: f64, theta: f64, grads: &[f64]) -> f64 {
        let mut p = scalar(theta);
        let mut opt = OptimizerState::new(kind, lr);
        for &g in grads {
            opt.apply(&mut [&mut p], &[scalar(g)]).unwrap();
        }
        p.data()[0]
    }

    #[test]
    fn sgd_single_step() {
        assert!((run(OptimizerKind::Sgd, 0.1, 1.0, &[1.0]) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn momentum_two_steps() {
        // v1 = 1, v2 = 0.9 + 1 = 1.9; total displacement 2.9
        assert!((run(OptimizerKind::Momentum, 1.0, 0.0, &[1.0, 1.0]) + 2.9).abs() < 1e-12);
    }

    #[test]
    fn adam_first_step() {
        // m_hat = v_hat = 1 so the step is lr / (1 + eps)
        let delta = run(OptimizerKind::Adam, 0.001, 0.0, &[1.0]);
        let want = -0.001 / (1.0 + 1e-8);
        assert!((delta - want).abs() < 1e-15);
        assert!((delta + 0.000999999).abs() < 1e-9);
    }

    #[test]
    fn step_count_increments() {
        let mut p = scalar(0.0);
        let mut opt = OptimizerState::new(OptimizerKind::Adam, 0.1);
        for i in 1..=3 {
            opt.apply(&mut [&mut p], &[scalar(1.0)]).unwrap();
            assert_eq!(opt.step_count(), i);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = Tensor::<f64>::zeros(&[2]);
        let mut opt = OptimizerState::new(OptimizerKind::Momentum, 0.1);
        assert!(opt.apply(&mut [&mut p], &[Tensor::zeros(&[3])]).is_err());
        opt.apply(&mut [&mut p], &[Tensor::zeros(&[2])]).unwrap();
        let mut q = Tensor::<f64>::zeros(&[4]);
        assert!(opt.apply(&mut [&mut q], &[Tensor::zeros(&[4])]).is_err());
    }

    proptest! {
        // With a constant gradient magnitude the bias-corrected second moment
        // equals g^2 exactly, so |m_hat| / sqrt(v_hat) <= 1.
        #[test]
        fn adam_step_is_bounded_by_learning_rate(
            signs in proptest::collection::vec(any::<bool>(), 1..60),
            magnitude in 1e-3f64..100.0,
            lr in 1e-4f64..1e-1,
        ) {
            let mut p = scalar(0.0);
            let mut opt = OptimizerState::new(OptimizerKind::Adam, lr);
            for s in signs {
                let g = if s { magnitude } else { -magnitude };
                let before = p.data()[0];
                opt.apply(&mut [&mut p], &[scalar(g)]).unwrap();
                let step = (p.data()[0] - before).abs();
                prop_assert!(step <= lr * (1.0 + 1e-6), "step {} > lr {}", step, lr);
            }
        }

        // Arbitrary gradient sequences: the worst case is a burst after a
        // quiet stretch, bounded by lr * (1 - beta1) / sqrt(1 - beta2).
        #[test]
        fn adam_step_has_universal_bound(
            grads in proptest::collection::vec(-100.0f64..100.0, 1..60),
            lr in 1e-4f64..1e-1,
        ) {
            let bound = lr * (1.0 - ADAM_BETA1) / (1.0 - ADAM_BETA2).sqrt() * (1.0 + 1e-6);
            let mut p = scalar(0.0);
            let mut opt = OptimizerState::new(OptimizerKind::Adam, lr);
            for g in grads {
                let before = p.data()[0];
                opt.apply(&mut [&mut p], &[scalar(g)]).unwrap();
                prop_assert!((p.data()[0] - before).abs() <= bound);
            }
        }
    }
}

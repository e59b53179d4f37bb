//! First-order optimizers: plain SGD and Adam with bias-corrected moments.

use crate::error::{Error, Result};
use crate::net::{Dims, Gradients, Model};
use crate::scalar::{real, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

/// Adam moment coefficients and stability epsilon.
#[derive(Clone, Copy, Debug)]
pub struct AdamParams<T> {
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Scalar> Default for AdamParams<T> {
    fn default() -> Self {
        AdamParams {
            beta1: real(0.9),
            beta2: real(0.999),
            epsilon: real(1e-8),
        }
    }
}

/// Optimizer state; Adam carries first/second moments and a step counter.
#[derive(Clone, Debug)]
pub enum OptState<T> {
    Sgd,
    Adam {
        m: Gradients<T>,
        v: Gradients<T>,
        step: u32,
    },
}

impl<T: Scalar> OptState<T> {
    pub fn new(kind: OptimizerKind, dims: Dims) -> Self {
        match kind {
            OptimizerKind::Sgd => OptState::Sgd,
            OptimizerKind::Adam => OptState::Adam {
                m: Gradients::zeros(dims),
                v: Gradients::zeros(dims),
                step: 0,
            },
        }
    }
}

/// Applies one update in place. Shapes must match the model.
pub fn optimizer_step<T: Scalar>(
    model: &mut Model<T>,
    grads: &Gradients<T>,
    state: &mut OptState<T>,
    lr: T,
    adam: &AdamParams<T>,
) -> Result<()> {
    if grads.iter_flat().count() != model.param_count() {
        return Err(Error::invalid("gradient shape does not match model"));
    }
    match state {
        OptState::Sgd => {
            for (p, &g) in model.iter_flat_mut().zip(grads.iter_flat()) {
                *p = *p - lr * g;
            }
        }
        OptState::Adam { m, v, step } => {
            *step += 1;
            let t = *step as i32;
            let one = T::one();
            let bc1 = one - adam.beta1.powi(t);
            let bc2 = one - adam.beta2.powi(t);
            for (((p, &g), m), v) in model
                .iter_flat_mut()
                .zip(grads.iter_flat())
                .zip(m.iter_flat_mut())
                .zip(v.iter_flat_mut())
            {
                *m = adam.beta1 * *m + (one - adam.beta1) * g;
                *v = adam.beta2 * *v + (one - adam.beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *p = *p - lr * m_hat / (v_hat.sqrt() + adam.epsilon);
            }
        }
    }
    Ok(())
}

//! SGD with classical momentum. Deterministic: the update order follows the
//! network's fixed parameter traversal.

use super::value::{NnError, ValueGrads, ValueNetwork};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct SgdConfig<F> {
    pub learning_rate: F,
    pub momentum: F,
}

/// `v <- momentum * v + g; p <- p - lr * v`
#[derive(Debug, Clone)]
pub struct SgdMomentum<F> {
    pub config: SgdConfig<F>,
    velocity: Option<ValueGrads<F>>,
}

impl<F: Real> SgdMomentum<F> {
    pub fn new(config: SgdConfig<F>) -> Self {
        Self {
            config,
            velocity: None,
        }
    }

    pub fn reset(&mut self) {
        self.velocity = None;
    }

    pub fn step(
        &mut self,
        net: &mut ValueNetwork<F>,
        grads: &ValueGrads<F>,
    ) -> Result<(), NnError> {
        // Finiteness gate before any state is touched.
        let mut bad: Option<String> = None;
        grads.visit(|path, g| {
            if bad.is_none() && g.iter().any(|v| !v.is_finite()) {
                bad = Some(path);
            }
        });
        if let Some(path) = bad {
            return Err(NnError::NonFiniteGradient { path });
        }

        let velocity = self
            .velocity
            .get_or_insert_with(|| ValueGrads::zeros_like(net));
        let (lr, mu) = (self.config.learning_rate, self.config.momentum);

        let mut grad_bufs: Vec<Vec<F>> = Vec::new();
        grads.visit(|_, g| grad_bufs.push(g.to_vec()));
        let mut idx = 0usize;
        velocity.visit_mut(|_, v| {
            let g = &grad_bufs[idx];
            idx += 1;
            for (vi, gi) in v.iter_mut().zip(g) {
                *vi = mu * *vi + *gi;
            }
        });
        let mut vel_bufs: Vec<Vec<F>> = Vec::new();
        velocity.visit(|_, v| vel_bufs.push(v.to_vec()));
        let mut idx = 0usize;
        net.visit_params_mut(|_, p| {
            let v = &vel_bufs[idx];
            idx += 1;
            for (pi, vi) in p.iter_mut().zip(v) {
                *pi = *pi - lr * *vi;
            }
        });
        Ok(())
    }
}

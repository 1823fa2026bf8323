//! Dense layers and the ReLU multilayer perceptron underneath the value
//! network. Parameters are plain row-major `Vec<F>`s so serialization and
//! the optimizer can walk them in a fixed order.

use crate::scalar::{real, Real};
use crate::seeding::Rng;
use rand_distr::{Distribution, Normal};

/// Fully connected layer: `y = W x + b`, `W` is `out_dim x in_dim` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<F> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<F>,
    pub bias: Vec<F>,
}

impl<F: Real> Linear<F> {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![F::zero(); in_dim * out_dim],
            bias: vec![F::zero(); out_dim],
        }
    }

    /// He-style init for ReLU stacks; biases start at zero.
    pub fn he_init(in_dim: usize, out_dim: usize, rng: &mut Rng) -> Self {
        let std = (2.0 / in_dim as f64).sqrt();
        let normal = Normal::new(0.0, std).expect("positive std");
        let weights = (0..in_dim * out_dim)
            .map(|_| real(normal.sample(rng)))
            .collect();
        Self {
            in_dim,
            out_dim,
            weights,
            bias: vec![F::zero(); out_dim],
        }
    }

    pub fn forward(&self, x: &[F], y: &mut Vec<F>) {
        debug_assert_eq!(x.len(), self.in_dim);
        y.clear();
        y.reserve(self.out_dim);
        for o in 0..self.out_dim {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = self.bias[o];
            for (w, xi) in row.iter().zip(x) {
                acc = acc + *w * *xi;
            }
            y.push(acc);
        }
    }

    /// Accumulate parameter gradients and the input gradient for upstream
    /// `dy`; `x` is the input that produced the cached output.
    pub fn backward(
        &self,
        x: &[F],
        dy: &[F],
        dx: &mut [F],
        grad_w: &mut [F],
        grad_b: &mut [F],
    ) {
        debug_assert_eq!(dy.len(), self.out_dim);
        debug_assert_eq!(dx.len(), self.in_dim);
        for o in 0..self.out_dim {
            let g = dy[o];
            grad_b[o] = grad_b[o] + g;
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let grow = &mut grad_w[o * self.in_dim..(o + 1) * self.in_dim];
            for i in 0..self.in_dim {
                grow[i] = grow[i] + g * x[i];
                dx[i] = dx[i] + g * row[i];
            }
        }
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// MLP with ReLU on hidden layers and a linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<F> {
    pub layers: Vec<Linear<F>>,
}

/// Cached activations from [`Mlp::forward_cached`]: `acts[0]` is the input,
/// `acts[k]` the post-activation output of layer `k-1`.
#[derive(Debug, Clone)]
pub struct MlpCache<F> {
    pub acts: Vec<Vec<F>>,
}

impl<F: Real> Mlp<F> {
    /// `dims = [input, hidden.., output]`.
    pub fn zeros(dims: &[usize]) -> Self {
        assert!(dims.len() >= 2, "an MLP needs at least one layer");
        let layers = dims
            .windows(2)
            .map(|w| Linear::zeros(w[0], w[1]))
            .collect();
        Self { layers }
    }

    pub fn he_init(dims: &[usize], rng: &mut Rng) -> Self {
        assert!(dims.len() >= 2, "an MLP needs at least one layer");
        let layers = dims
            .windows(2)
            .map(|w| Linear::he_init(w[0], w[1], rng))
            .collect();
        Self { layers }
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.layers.iter().map(|l| l.in_dim).collect();
        d.push(self.layers.last().expect("nonempty").out_dim);
        d
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().expect("nonempty").out_dim
    }

    pub fn forward_cached(&self, x: &[F]) -> MlpCache<F> {
        let n = self.layers.len();
        let mut acts = Vec::with_capacity(n + 1);
        acts.push(x.to_vec());
        let mut buf = Vec::new();
        for (k, layer) in self.layers.iter().enumerate() {
            layer.forward(acts.last().expect("input"), &mut buf);
            if k + 1 < n {
                for v in buf.iter_mut() {
                    if *v < F::zero() {
                        *v = F::zero();
                    }
                }
            }
            acts.push(std::mem::take(&mut buf));
        }
        MlpCache { acts }
    }

    pub fn output<'c>(&self, cache: &'c MlpCache<F>) -> &'c [F] {
        cache.acts.last().expect("forward ran")
    }

    /// Backprop through the cached pass; accumulates into `grads` and
    /// returns the gradient w.r.t. the input.
    pub fn backward(&self, cache: &MlpCache<F>, dy: &[F], grads: &mut MlpGrads<F>) -> Vec<F> {
        let n = self.layers.len();
        let mut delta = dy.to_vec();
        for k in (0..n).rev() {
            // ReLU derivative for hidden outputs: post-activation > 0.
            if k + 1 < n {
                let act = &cache.acts[k + 1];
                for (d, a) in delta.iter_mut().zip(act) {
                    if *a <= F::zero() {
                        *d = F::zero();
                    }
                }
            }
            let layer = &self.layers[k];
            let mut dx = vec![F::zero(); layer.in_dim];
            layer.backward(
                &cache.acts[k],
                &delta,
                &mut dx,
                &mut grads.weights[k],
                &mut grads.bias[k],
            );
            delta = dx;
        }
        delta
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Linear::param_count).sum()
    }
}

/// Gradient buffers shaped like an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads<F> {
    pub weights: Vec<Vec<F>>,
    pub bias: Vec<Vec<F>>,
}

impl<F: Real> MlpGrads<F> {
    pub fn zeros_like(mlp: &Mlp<F>) -> Self {
        Self {
            weights: mlp
                .layers
                .iter()
                .map(|l| vec![F::zero(); l.weights.len()])
                .collect(),
            bias: mlp
                .layers
                .iter()
                .map(|l| vec![F::zero(); l.bias.len()])
                .collect(),
        }
    }

    pub fn scale(&mut self, s: F) {
        for w in self.weights.iter_mut().chain(self.bias.iter_mut()) {
            for v in w.iter_mut() {
                *v = *v * s;
            }
        }
    }

    pub fn add(&mut self, other: &Self) {
        for (a, b) in self
            .weights
            .iter_mut()
            .chain(self.bias.iter_mut())
            .zip(other.weights.iter().chain(other.bias.iter()))
        {
            for (x, y) in a.iter_mut().zip(b) {
                *x = *x + *y;
            }
        }
    }
}

//! Attention-pooled state-value network. Per-worker rows are embedded,
//! softmax-scored against the mean embedding, pooled, and joined with the
//! robot features for the final value head. Pooling by softmax keeps the
//! output exactly permutation invariant in the worker order.

use super::features::{FEAT_DIM, ROBOT_FEAT_DIM};
use super::linear::{Mlp, MlpCache, MlpGrads};
use crate::scalar::Real;
use crate::seeding::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite gradient in {path}")]
    NonFiniteGradient { path: String },
    #[error("weights file: {0}")]
    Format(String),
    #[error("architecture mismatch: file has {file:?}, expected {expected:?}")]
    ArchMismatch { file: Vec<usize>, expected: Vec<usize> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Layer sizes. `embed_hidden` ends in the embedding width; the attention
/// head reads `[e_i, mean_j e_j]`; the value head reads the robot features
/// concatenated with the pooled embedding.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValueArch {
    pub input_dim: usize,
    pub robot_dim: usize,
    pub embed_dims: Vec<usize>,
    pub attn_dims: Vec<usize>,
    pub value_dims: Vec<usize>,
}

impl Default for ValueArch {
    fn default() -> Self {
        Self {
            input_dim: FEAT_DIM,
            robot_dim: ROBOT_FEAT_DIM,
            embed_dims: vec![150, 100],
            attn_dims: vec![100, 1],
            value_dims: vec![150, 100, 100, 1],
        }
    }
}

impl ValueArch {
    pub fn embed_out(&self) -> usize {
        *self.embed_dims.last().expect("embed layer sizes")
    }

    fn embed_full(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim];
        d.extend(&self.embed_dims);
        d
    }

    fn attn_full(&self) -> Vec<usize> {
        let mut d = vec![2 * self.embed_out()];
        d.extend(&self.attn_dims);
        d
    }

    fn value_full(&self) -> Vec<usize> {
        let mut d = vec![self.robot_dim + self.embed_out()];
        d.extend(&self.value_dims);
        d
    }

    /// Flat size list written into the weights header.
    pub fn flat_dims(&self) -> Vec<usize> {
        let mut all = vec![self.input_dim, self.robot_dim];
        for part in [&self.embed_dims, &self.attn_dims, &self.value_dims] {
            all.push(part.len());
            all.extend(part);
        }
        all
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.robot_dim > self.input_dim {
            return Err(NnError::Dimension(format!(
                "robot_dim {} exceeds input_dim {}",
                self.robot_dim, self.input_dim
            )));
        }
        for (name, dims, out) in [
            ("embed", &self.embed_dims, None),
            ("attn", &self.attn_dims, Some(1)),
            ("value", &self.value_dims, Some(1)),
        ] {
            if dims.is_empty() || dims.iter().any(|d| *d == 0) {
                return Err(NnError::Dimension(format!("{name} layer sizes empty or zero")));
            }
            if let Some(o) = out {
                if *dims.last().expect("nonempty") != o {
                    return Err(NnError::Dimension(format!(
                        "{name} head must end in {o}, got {dims:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The value network `V(s_joint)` with its three MLPs.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueNetwork<F> {
    pub arch: ValueArch,
    pub embed: Mlp<F>,
    pub attn: Mlp<F>,
    pub value: Mlp<F>,
}

/// Gradients shaped like a [`ValueNetwork`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValueGrads<F> {
    pub embed: MlpGrads<F>,
    pub attn: MlpGrads<F>,
    pub value: MlpGrads<F>,
}

impl<F: Real> ValueGrads<F> {
    pub fn zeros_like(net: &ValueNetwork<F>) -> Self {
        Self {
            embed: MlpGrads::zeros_like(&net.embed),
            attn: MlpGrads::zeros_like(&net.attn),
            value: MlpGrads::zeros_like(&net.value),
        }
    }

    pub fn scale(&mut self, s: F) {
        self.embed.scale(s);
        self.attn.scale(s);
        self.value.scale(s);
    }

    pub fn add(&mut self, other: &Self) {
        self.embed.add(&other.embed);
        self.attn.add(&other.attn);
        self.value.add(&other.value);
    }
}

/// Sum in ascending value order: the result depends only on the multiset of
/// addends, which makes the pooled reductions exactly permutation invariant.
fn stable_sum<F: Real>(values: &mut Vec<F>) -> F {
    values.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut acc = F::zero();
    for v in values.iter() {
        acc = acc + *v;
    }
    acc
}

/// Cached intermediates from [`ValueNetwork::forward`], consumed by
/// [`ValueNetwork::backward`].
pub struct ValueCache<F> {
    rows: Vec<Vec<F>>,
    embed_caches: Vec<MlpCache<F>>,
    attn_caches: Vec<MlpCache<F>>,
    mean_embed: Vec<F>,
    pub attention: Vec<F>,
    pooled: Vec<F>,
    value_cache: MlpCache<F>,
    pub value: F,
}

impl<F: Real> ValueNetwork<F> {
    pub fn zeros(arch: ValueArch) -> Result<Self, NnError> {
        arch.validate()?;
        Ok(Self {
            embed: Mlp::zeros(&arch.embed_full()),
            attn: Mlp::zeros(&arch.attn_full()),
            value: Mlp::zeros(&arch.value_full()),
            arch,
        })
    }

    pub fn init(arch: ValueArch, rng: &mut Rng) -> Result<Self, NnError> {
        arch.validate()?;
        Ok(Self {
            embed: Mlp::he_init(&arch.embed_full(), rng),
            attn: Mlp::he_init(&arch.attn_full(), rng),
            value: Mlp::he_init(&arch.value_full(), rng),
            arch,
        })
    }

    pub fn param_count(&self) -> usize {
        self.embed.param_count() + self.attn.param_count() + self.value.param_count()
    }

    /// Forward pass over `rows` (one per observed worker, sentinel row
    /// included for empty observations). Returns the full cache; the plain
    /// value and attention weights live on it.
    pub fn forward(&self, rows: &[impl AsRef<[F]>]) -> ValueCache<F> {
        assert!(!rows.is_empty(), "value network needs at least one row");
        let n = rows.len();
        let e_dim = self.arch.embed_out();

        let rows: Vec<Vec<F>> = rows.iter().map(|r| r.as_ref().to_vec()).collect();
        for r in &rows {
            assert_eq!(r.len(), self.arch.input_dim, "feature row width");
        }

        let embed_caches: Vec<MlpCache<F>> =
            rows.iter().map(|r| self.embed.forward_cached(r)).collect();

        let inv_n = F::one() / F::from_f64(n as f64);
        let mut mean_embed = vec![F::zero(); e_dim];
        let mut addends = Vec::with_capacity(n);
        for (k, m) in mean_embed.iter_mut().enumerate() {
            addends.clear();
            addends.extend(embed_caches.iter().map(|c| self.embed.output(c)[k]));
            *m = stable_sum(&mut addends) * inv_n;
        }

        let mut scores = Vec::with_capacity(n);
        let mut attn_caches = Vec::with_capacity(n);
        for c in &embed_caches {
            let mut input = Vec::with_capacity(2 * e_dim);
            input.extend_from_slice(self.embed.output(c));
            input.extend_from_slice(&mean_embed);
            let cache = self.attn.forward_cached(&input);
            scores.push(self.attn.output(&cache)[0]);
            attn_caches.push(cache);
        }

        // Stabilized softmax; max-subtraction keeps the weights exact under
        // permutation because the max is order independent.
        let max_s = scores.iter().cloned().fold(F::neg_infinity(), F::max);
        let exps: Vec<F> = scores.iter().map(|s| (*s - max_s).exp()).collect();
        let sum = stable_sum(&mut exps.clone());
        let attention: Vec<F> = exps.iter().map(|e| *e / sum).collect();

        let mut pooled = vec![F::zero(); e_dim];
        for (k, p) in pooled.iter_mut().enumerate() {
            addends.clear();
            addends.extend(
                attention
                    .iter()
                    .zip(&embed_caches)
                    .map(|(a, c)| *a * self.embed.output(c)[k]),
            );
            *p = stable_sum(&mut addends);
        }

        let mut value_in = Vec::with_capacity(self.arch.robot_dim + e_dim);
        value_in.extend_from_slice(&rows[0][..self.arch.robot_dim]);
        value_in.extend_from_slice(&pooled);
        let value_cache = self.value.forward_cached(&value_in);
        let value = self.value.output(&value_cache)[0];

        ValueCache {
            rows,
            embed_caches,
            attn_caches,
            mean_embed,
            attention,
            pooled,
            value_cache,
            value,
        }
    }

    /// Convenience forward returning `(value, attention weights)`.
    pub fn evaluate(&self, rows: &[impl AsRef<[F]>]) -> (F, Vec<F>) {
        let cache = self.forward(rows);
        (cache.value, cache.attention)
    }

    /// Exact reverse-mode gradients of `upstream * V` w.r.t. every
    /// parameter.
    pub fn backward(&self, cache: &ValueCache<F>, upstream: F) -> ValueGrads<F> {
        let mut grads = ValueGrads::zeros_like(self);
        self.backward_into(cache, upstream, &mut grads);
        grads
    }

    /// Like [`Self::backward`] but accumulating into existing buffers.
    pub fn backward_into(&self, cache: &ValueCache<F>, upstream: F, grads: &mut ValueGrads<F>) {
        let n = cache.rows.len();
        let e_dim = self.arch.embed_out();
        let r_dim = self.arch.robot_dim;

        // Value head.
        let d_value_in = self
            .value
            .backward(&cache.value_cache, &[upstream], &mut grads.value);
        let d_pooled = &d_value_in[r_dim..];

        // Pooling: c = sum_i alpha_i e_i.
        let mut d_alpha = vec![F::zero(); n];
        let mut d_embed: Vec<Vec<F>> = vec![vec![F::zero(); e_dim]; n];
        for i in 0..n {
            let e_i = self.embed.output(&cache.embed_caches[i]);
            let mut acc = F::zero();
            for k in 0..e_dim {
                acc = acc + d_pooled[k] * e_i[k];
                d_embed[i][k] = d_embed[i][k] + cache.attention[i] * d_pooled[k];
            }
            d_alpha[i] = acc;
        }

        // Softmax: ds_i = alpha_i (d_alpha_i - sum_j alpha_j d_alpha_j).
        let dot: F = cache
            .attention
            .iter()
            .zip(&d_alpha)
            .map(|(a, d)| *a * *d)
            .sum();
        let d_scores: Vec<F> = cache
            .attention
            .iter()
            .zip(&d_alpha)
            .map(|(a, d)| *a * (*d - dot))
            .collect();

        // Attention head input was [e_i, mean_embed].
        let mut d_mean = vec![F::zero(); e_dim];
        for i in 0..n {
            let d_in = self
                .attn
                .backward(&cache.attn_caches[i], &[d_scores[i]], &mut grads.attn);
            for k in 0..e_dim {
                d_embed[i][k] = d_embed[i][k] + d_in[k];
                d_mean[k] = d_mean[k] + d_in[e_dim + k];
            }
        }

        // Mean embedding feeds every attention input.
        let inv_n = F::one() / F::from_f64(n as f64);
        for row in d_embed.iter_mut() {
            for k in 0..e_dim {
                row[k] = row[k] + d_mean[k] * inv_n;
            }
        }

        for i in 0..n {
            self.embed
                .backward(&cache.embed_caches[i], &d_embed[i], &mut grads.embed);
        }
    }

    /// Deterministic traversal of parameter buffers (shared with grads and
    /// optimizer state). Order: embed, attn, value; per layer weights then
    /// bias.
    pub fn visit_params(&self, mut f: impl FnMut(String, &[F])) {
        for (name, mlp) in [("embed", &self.embed), ("attn", &self.attn), ("value", &self.value)] {
            for (k, layer) in mlp.layers.iter().enumerate() {
                f(format!("{name}.{k}.weight"), &layer.weights);
                f(format!("{name}.{k}.bias"), &layer.bias);
            }
        }
    }

    pub fn visit_params_mut(&mut self, mut f: impl FnMut(String, &mut Vec<F>)) {
        for (name, mlp) in [
            ("embed", &mut self.embed),
            ("attn", &mut self.attn),
            ("value", &mut self.value),
        ] {
            for (k, layer) in mlp.layers.iter_mut().enumerate() {
                f(format!("{name}.{k}.weight"), &mut layer.weights);
                f(format!("{name}.{k}.bias"), &mut layer.bias);
            }
        }
    }
}

impl<F: Real> ValueGrads<F> {
    /// Traversal matching [`ValueNetwork::visit_params`].
    pub fn visit(&self, mut f: impl FnMut(String, &[F])) {
        for (name, g) in [("embed", &self.embed), ("attn", &self.attn), ("value", &self.value)] {
            for k in 0..g.weights.len() {
                f(format!("{name}.{k}.weight"), &g.weights[k]);
                f(format!("{name}.{k}.bias"), &g.bias[k]);
            }
        }
    }

    pub fn visit_mut(&mut self, mut f: impl FnMut(String, &mut Vec<F>)) {
        for (name, g) in [
            ("embed", &mut self.embed),
            ("attn", &mut self.attn),
            ("value", &mut self.value),
        ] {
            for k in 0..g.weights.len() {
                f(format!("{name}.{k}.weight"), &mut g.weights[k]);
                f(format!("{name}.{k}.bias"), &mut g.bias[k]);
            }
        }
    }
}

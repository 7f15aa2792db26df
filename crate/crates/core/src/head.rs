//! Classical post-processing of circuit outputs: output reuse, the affine
//! scaling layer, softmax and exact backpropagation through them.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `y` concatenated `reuse` times. Copy `j` of qubit `q` sits at `j * n + q`.
pub fn reuse_expand<T: Copy>(y: &[T], reuse: usize) -> Result<Vec<T>> {
    if reuse == 0 {
        return Err(Error::config("reuse count must be at least 1"));
    }
    let mut out = Vec::with_capacity(y.len() * reuse);
    for _ in 0..reuse {
        out.extend_from_slice(y);
    }
    Ok(out)
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Weights `W` (`k x n*reuse`, row-major) and bias `b` (`k`) of the scaling
/// layer `y' = b + W expand(y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadParams<T> {
    n_inputs: usize,
    reuse: usize,
    n_outputs: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> HeadParams<T> {
    pub fn zeros(n_inputs: usize, reuse: usize, n_outputs: usize) -> Result<Self> {
        if reuse == 0 {
            return Err(Error::config("reuse count must be at least 1"));
        }
        if n_inputs == 0 || n_outputs == 0 {
            return Err(Error::config("head needs at least one input and one output"));
        }
        Ok(HeadParams {
            n_inputs,
            reuse,
            n_outputs,
            weights: vec![T::zero(); n_outputs * n_inputs * reuse],
            bias: vec![T::zero(); n_outputs],
        })
    }

    pub fn from_parts(n_inputs: usize, reuse: usize, weights: Vec<T>, bias: Vec<T>) -> Result<Self> {
        let mut head = HeadParams::zeros(n_inputs, reuse, bias.len())?;
        if weights.len() != head.weights.len() {
            return Err(Error::config(format!(
                "weight matrix has {} entries, expected {} x {}",
                weights.len(),
                bias.len(),
                n_inputs * reuse
            )));
        }
        head.weights = weights;
        head.bias = bias;
        Ok(head)
    }

    /// `W, b ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn random<R: Rng + ?Sized>(n_inputs: usize, reuse: usize, n_outputs: usize, rng: &mut R) -> Result<Self> {
        let mut head = HeadParams::zeros(n_inputs, reuse, n_outputs)?;
        let bound = 1.0 / ((n_inputs * reuse) as f64).sqrt();
        for w in head.weights.iter_mut().chain(head.bias.iter_mut()) {
            *w = T::of(rng.random_range(-bound..bound));
        }
        Ok(head)
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn reuse(&self) -> usize {
        self.reuse
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    /// Column count of `W`.
    pub fn width(&self) -> usize {
        self.n_inputs * self.reuse
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// `W#[p][q] = sum_j W[p][j*n + q]`: the single-layer weights that
    /// reproduce the duplicated-output forward pass.
    pub fn summed_weights(&self) -> Vec<T> {
        let (n, w) = (self.n_inputs, self.width());
        let mut out = vec![T::zero(); self.n_outputs * n];
        for p in 0..self.n_outputs {
            for j in 0..self.reuse {
                for q in 0..n {
                    out[p * n + q] += self.weights[p * w + j * n + q];
                }
            }
        }
        out
    }

    /// Per-copy weights reproducing `summed` (`k x n`), split as
    /// `summed * share[j]` where the shares sum to one.
    pub fn from_summed(n_inputs: usize, shares: &[T], summed: &[T], bias: Vec<T>) -> Result<Self> {
        let reuse = shares.len();
        let mut head = HeadParams::zeros(n_inputs, reuse, bias.len())?;
        if summed.len() != bias.len() * n_inputs {
            return Err(Error::config("summed weight matrix has the wrong shape"));
        }
        let w = head.width();
        for p in 0..head.n_outputs {
            for (j, &s) in shares.iter().enumerate() {
                for q in 0..n_inputs {
                    head.weights[p * w + j * n_inputs + q] = summed[p * n_inputs + q] * s;
                }
            }
        }
        head.bias = bias;
        Ok(head)
    }

    /// Weights then bias.
    pub fn flat(&self) -> Vec<T> {
        self.weights.iter().chain(&self.bias).copied().collect()
    }

    pub fn set_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::config("flat parameter vector has the wrong length"));
        }
        let (w, b) = flat.split_at(self.weights.len());
        self.weights.copy_from_slice(w);
        self.bias.copy_from_slice(b);
        Ok(())
    }
}

/// `y' = b + W y_expanded`.
pub fn scale_outputs<T: Scalar>(expanded: &[T], params: &HeadParams<T>) -> Result<Vec<T>> {
    let w = params.width();
    if expanded.len() != w {
        return Err(Error::config(format!(
            "scaling layer expects {w} inputs, got {}",
            expanded.len()
        )));
    }
    Ok(params
        .bias
        .iter()
        .enumerate()
        .map(|(p, &b)| {
            params.weights[p * w..(p + 1) * w]
                .iter()
                .zip(expanded)
                .fold(b, |acc, (&wi, &e)| acc + wi * e)
        })
        .collect())
}

/// Per-qubit outputs through reuse and the scaling layer.
pub fn head_forward<T: Scalar>(params: &HeadParams<T>, y: &[T]) -> Result<Vec<T>> {
    if y.len() != params.n_inputs {
        return Err(Error::config(format!(
            "head expects {} circuit outputs, got {}",
            params.n_inputs,
            y.len()
        )));
    }
    scale_outputs(&reuse_expand(y, params.reuse)?, params)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeadGrads<T> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    /// Gradient on the per-qubit outputs, summed over all copies.
    pub inputs: Vec<T>,
}

impl<T: Scalar> HeadGrads<T> {
    pub fn flat(&self) -> Vec<T> {
        self.weights.iter().chain(&self.bias).copied().collect()
    }
}

/// Gradients of `sum_p upstream[p] * y'_p` given the forward input `y`.
pub fn head_backward<T: Scalar>(params: &HeadParams<T>, y: &[T], upstream: &[T]) -> Result<HeadGrads<T>> {
    if upstream.len() != params.n_outputs || y.len() != params.n_inputs {
        return Err(Error::config("head backward: dimension mismatch"));
    }
    let (n, w) = (params.n_inputs, params.width());
    let mut weights = vec![T::zero(); params.weights.len()];
    let mut inputs = vec![T::zero(); n];
    for (p, &u) in upstream.iter().enumerate() {
        let row = &params.weights[p * w..(p + 1) * w];
        let grad_row = &mut weights[p * w..(p + 1) * w];
        for j in 0..params.reuse {
            for q in 0..n {
                grad_row[j * n + q] = u * y[q];
                inputs[q] += u * row[j * n + q];
            }
        }
    }
    Ok(HeadGrads {
        weights,
        bias: upstream.to_vec(),
        inputs,
    })
}

/// Scaling layer with a forward cache, for callers that run
/// forward/backward pairs.
#[derive(Clone, Debug)]
pub struct PolicyHead<T> {
    pub params: HeadParams<T>,
    cache: Option<Vec<T>>,
}

impl<T: Scalar> PolicyHead<T> {
    pub fn new(params: HeadParams<T>) -> Self {
        PolicyHead { params, cache: None }
    }

    pub fn forward(&mut self, y: &[T]) -> Result<Vec<T>> {
        let out = head_forward(&self.params, y)?;
        self.cache = Some(y.to_vec());
        Ok(out)
    }

    pub fn backward(&self, upstream: &[T]) -> Result<HeadGrads<T>> {
        let y = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::Usage("head backward called before forward".into()))?;
        head_backward(&self.params, y, upstream)
    }
}

/// Logits, action probabilities and critic value for one observation.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyOutput<T> {
    pub logits: Vec<T>,
    pub probs: Vec<T>,
    pub value: T,
}

impl<T: Scalar> PolicyOutput<T> {
    pub fn new(logits: Vec<T>, value: T) -> Self {
        let probs = softmax(&logits);
        PolicyOutput { logits, probs, value }
    }
}

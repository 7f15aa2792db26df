//! Fully-connected baseline network with hand-written backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Hidden sizes of the classical baseline.
pub const FCN_HIDDEN: [usize; 4] = [16, 32, 64, 32];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
    Linear,
}

impl Activation {
    fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(T::zero()),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn derivative<T: Scalar>(self, a: T) -> T {
        match self {
            Activation::Tanh => T::one() - a * a,
            Activation::Relu => {
                if a > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Linear => T::one(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer<T> {
    pub n_in: usize,
    pub n_out: usize,
    /// `n_out x n_in`, row-major.
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> DenseLayer<T> {
    fn affine(&self, x: &[T]) -> Vec<T> {
        (0..self.n_out)
            .map(|o| {
                self.weights[o * self.n_in..(o + 1) * self.n_in]
                    .iter()
                    .zip(x)
                    .fold(self.bias[o], |acc, (&w, &xi)| acc + w * xi)
            })
            .collect()
    }
}

/// Affine layers with a shared hidden activation and a linear output layer.
#[derive(Clone, Debug)]
pub struct DenseNet<T> {
    layers: Vec<DenseLayer<T>>,
    activation: Activation,
    cache: Option<Vec<Vec<T>>>,
}

impl<T: Scalar> DenseNet<T> {
    pub fn zeros(sizes: &[usize], activation: Activation) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::config(format!("invalid layer sizes {sizes:?}")));
        }
        let layers = sizes
            .windows(2)
            .map(|w| DenseLayer {
                n_in: w[0],
                n_out: w[1],
                weights: vec![T::zero(); w[0] * w[1]],
                bias: vec![T::zero(); w[1]],
            })
            .collect();
        Ok(DenseNet {
            layers,
            activation,
            cache: None,
        })
    }

    /// `W, b ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in))` per layer.
    pub fn random<R: Rng + ?Sized>(sizes: &[usize], activation: Activation, rng: &mut R) -> Result<Self> {
        let mut net = DenseNet::zeros(sizes, activation)?;
        for layer in &mut net.layers {
            let bound = 1.0 / (layer.n_in as f64).sqrt();
            for w in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *w = T::of(rng.random_range(-bound..bound));
            }
        }
        Ok(net)
    }

    /// Layer sizes `(d, 16, 32, 64, 32, k)`.
    pub fn fcn_sizes(d: usize, k: usize) -> Vec<usize> {
        std::iter::once(d).chain(FCN_HIDDEN).chain(std::iter::once(k)).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].n_in)
            .chain(self.layers.iter().map(|l| l.n_out))
            .collect()
    }

    pub fn layers(&self) -> &[DenseLayer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer<T>] {
        &mut self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().map_or(0, |l| l.n_out)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| (l.n_in + 1) * l.n_out).sum()
    }

    /// Activations of every layer, input first and output last.
    fn activations(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        if x.len() != self.n_inputs() {
            return Err(Error::config(format!(
                "network expects {} inputs, got {}",
                self.n_inputs(),
                x.len()
            )));
        }
        let last = self.layers.len() - 1;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.affine(acts.last().expect("input pushed"));
            if i != last {
                z.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
            acts.push(z);
        }
        Ok(acts)
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.activations(x)?.pop().expect("at least one layer"))
    }

    /// Forward pass that keeps activations for a later [`DenseNet::backward`].
    pub fn forward_cached(&mut self, x: &[T]) -> Result<Vec<T>> {
        let acts = self.activations(x)?;
        let out = acts.last().cloned().expect("at least one layer");
        self.cache = Some(acts);
        Ok(out)
    }

    /// Parameter gradients of `sum_o upstream[o] * out_o` at the cached input.
    pub fn backward(&self, upstream: &[T]) -> Result<Vec<T>> {
        let acts = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::Usage("network backward called before forward".into()))?;
        self.backprop(acts, upstream)
    }

    /// Output and parameter gradients at `x`, without touching the cache.
    pub fn gradient(&self, x: &[T], upstream: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let acts = self.activations(x)?;
        let grads = self.backprop(&acts, upstream)?;
        Ok((acts.last().cloned().expect("at least one layer"), grads))
    }

    fn backprop(&self, acts: &[Vec<T>], upstream: &[T]) -> Result<Vec<T>> {
        if upstream.len() != self.n_outputs() {
            return Err(Error::config("upstream gradient has the wrong length"));
        }
        let mut grads = vec![T::zero(); self.param_count()];
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += (l.n_in + 1) * l.n_out;
        }
        let mut delta = upstream.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &acts[i];
            let base = offsets[i];
            let (gw, gb) = grads[base..base + (layer.n_in + 1) * layer.n_out].split_at_mut(layer.n_in * layer.n_out);
            for o in 0..layer.n_out {
                gb[o] = delta[o];
                for j in 0..layer.n_in {
                    gw[o * layer.n_in + j] = delta[o] * input[j];
                }
            }
            if i > 0 {
                let mut next = vec![T::zero(); layer.n_in];
                for o in 0..layer.n_out {
                    let row = &layer.weights[o * layer.n_in..(o + 1) * layer.n_in];
                    for j in 0..layer.n_in {
                        next[j] += row[j] * delta[o];
                    }
                }
                for (d, &a) in next.iter_mut().zip(input) {
                    *d *= self.activation.derivative(a);
                }
                delta = next;
            }
        }
        Ok(grads)
    }

    /// Per layer: weights then bias.
    pub fn flat(&self) -> Vec<T> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::config("flat parameter vector has the wrong length"));
        }
        let mut rest = flat;
        for l in &mut self.layers {
            let (w, r) = rest.split_at(l.weights.len());
            let (b, r) = r.split_at(l.bias.len());
            l.weights.copy_from_slice(w);
            l.bias.copy_from_slice(b);
            rest = r;
        }
        self.cache = None;
        Ok(())
    }
}

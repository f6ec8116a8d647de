use rand::Rng;

use super::{Activation, Dense, ParamStore};

/// Multi-layer perceptron with a shared hidden activation, optional inverted
/// dropout after every hidden layer, and a linear output layer.
#[derive(Clone, Debug)]
pub struct FeedForwardNet {
    layers: Vec<Dense>,
    pub activation: Activation,
    pub dropout: f64,
}

/// Per-sample activations kept for the backward pass.
#[derive(Clone, Debug, Default)]
pub struct FfnCache {
    /// `inputs[l]` is what layer `l` consumed (after activation and dropout).
    inputs: Vec<Vec<f64>>,
    /// Post-activation outputs of hidden layers, before dropout.
    hidden: Vec<Vec<f64>>,
    /// Dropout scale factors (0 or `1/(1-p)`) per hidden layer; empty at inference.
    masks: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

impl FeedForwardNet {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        sizes: &[usize],
        activation: Activation,
        dropout: f64,
        rng: &mut R,
    ) -> Self {
        assert!(sizes.len() >= 2, "network needs an input and an output size");
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let lname = format!("{name}.{l}");
                if activation == Activation::Selu {
                    Dense::new_lecun(store, &lname, w[0], w[1], rng)
                } else {
                    Dense::new(store, &lname, w[0], w[1], true, rng)
                }
            })
            .collect();
        Self {
            layers,
            activation,
            dropout,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    /// Inference pass (dropout disabled).
    pub fn forward(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut y = layer.forward_vec(params, &h);
            if l < last {
                self.activation.apply_slice(&mut y);
            }
            h = y;
        }
        h
    }

    /// Forward pass that records activations. Dropout is applied iff `rng` is given.
    pub fn forward_cached<R: Rng + ?Sized>(
        &self,
        params: &[f64],
        x: &[f64],
        mut rng: Option<&mut R>,
    ) -> FfnCache {
        let mut cache = FfnCache::default();
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut y = layer.forward_vec(params, &h);
            cache.inputs.push(h);
            if l < last {
                self.activation.apply_slice(&mut y);
                cache.hidden.push(y.clone());
                if let (Some(rng), true) = (rng.as_deref_mut(), self.dropout > 0.0) {
                    let keep = 1.0 - self.dropout;
                    let mask: Vec<f64> = (0..y.len())
                        .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                        .collect();
                    y.iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
                    cache.masks.push(mask);
                }
            }
            h = y;
        }
        cache.output = h;
        cache
    }

    /// Accumulate parameter gradients for `d_out`; returns `dL/dx`.
    pub fn backward(
        &self,
        params: &[f64],
        cache: &FfnCache,
        d_out: &[f64],
        grads: &mut [f64],
    ) -> Vec<f64> {
        let mut d = d_out.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let mut dx = vec![0.0; layer.inputs];
            layer.backward(params, &cache.inputs[l], &d, grads, Some(&mut dx));
            if l > 0 {
                let hl = l - 1;
                if let Some(mask) = cache.masks.get(hl) {
                    dx.iter_mut().zip(mask).for_each(|(v, m)| *v *= m);
                }
                self.activation.backprop(&cache.hidden[hl], &mut dx);
            }
            d = dx;
        }
        d
    }
}

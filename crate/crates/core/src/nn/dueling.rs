use rand::Rng;

use super::{Activation, Dense, ParamStore};

/// Dueling Q-network: a shared ReLU trunk feeding a state-value head `V(s)` and
/// an advantage head `A(s, ·)`, combined as `Q = V + A - mean(A)`.
#[derive(Clone, Debug)]
pub struct DuelingQNet {
    trunk: Dense,
    value: Dense,
    advantage: Dense,
}

#[derive(Clone, Debug)]
pub struct DuelingCache {
    input: Vec<f64>,
    hidden: Vec<f64>,
    pub q: Vec<f64>,
}

/// Mean-centred combination of value and advantages.
pub fn combine(value: f64, advantages: &[f64]) -> Vec<f64> {
    let mean = advantages.iter().sum::<f64>() / advantages.len() as f64;
    advantages.iter().map(|a| value + a - mean).collect()
}

impl DuelingQNet {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        inputs: usize,
        hidden: usize,
        actions: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            trunk: Dense::new(store, "q.trunk", inputs, hidden, true, rng),
            value: Dense::new(store, "q.value", hidden, 1, true, rng),
            advantage: Dense::new(store, "q.advantage", hidden, actions, true, rng),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.trunk.inputs
    }

    pub fn actions(&self) -> usize {
        self.advantage.outputs
    }

    fn hidden(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        let mut h = self.trunk.forward_vec(params, x);
        Activation::Relu.apply_slice(&mut h);
        h
    }

    fn head(&self, params: &[f64], h: &[f64]) -> Vec<f64> {
        let v = self.value.forward_vec(params, h)[0];
        let a = self.advantage.forward_vec(params, h);
        combine(v, &a)
    }

    pub fn q_values(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        let h = self.hidden(params, x);
        self.head(params, &h)
    }

    /// Value and raw advantages, exposed for checking the dueling identity.
    pub fn streams(&self, params: &[f64], x: &[f64]) -> (f64, Vec<f64>) {
        let h = self.hidden(params, x);
        (
            self.value.forward_vec(params, &h)[0],
            self.advantage.forward_vec(params, &h),
        )
    }

    pub fn forward_cached(&self, params: &[f64], x: &[f64]) -> DuelingCache {
        let hidden = self.hidden(params, x);
        let q = self.head(params, &hidden);
        DuelingCache {
            input: x.to_vec(),
            hidden,
            q,
        }
    }

    /// Accumulate parameter gradients for upstream `dL/dQ`.
    pub fn backward(&self, params: &[f64], cache: &DuelingCache, dq: &[f64], grads: &mut [f64]) {
        if dq.iter().all(|&d| d == 0.0) {
            return;
        }
        let sum: f64 = dq.iter().sum();
        let mean = sum / dq.len() as f64;
        let da: Vec<f64> = dq.iter().map(|d| d - mean).collect();
        let hd = cache.hidden.len();
        let mut dh_v = vec![0.0; hd];
        let mut dh_a = vec![0.0; hd];
        self.value
            .backward(params, &cache.hidden, &[sum], grads, Some(&mut dh_v));
        self.advantage
            .backward(params, &cache.hidden, &da, grads, Some(&mut dh_a));
        let mut dh: Vec<f64> = dh_v.iter().zip(&dh_a).map(|(a, b)| a + b).collect();
        Activation::Relu.backprop(&cache.hidden, &mut dh);
        self.trunk.backward(params, &cache.input, &dh, grads, None);
    }
}

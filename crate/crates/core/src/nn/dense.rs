use rand::Rng;

use super::{dot, gemv_acc, Init, ParamStore, Slot};

/// Fully connected layer `y = x · W + b` with `W` stored `inputs × outputs`.
#[derive(Clone, Debug)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    w: Slot,
    b: Option<Slot>,
}

impl Dense {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        inputs: usize,
        outputs: usize,
        bias: bool,
        rng: &mut R,
    ) -> Self {
        let w = store.alloc(
            &format!("{name}.w"),
            &[inputs, outputs],
            Init::Glorot {
                fan_in: inputs,
                fan_out: outputs,
            },
            rng,
        );
        let b = bias.then(|| store.alloc(&format!("{name}.b"), &[outputs], Init::Zeros, rng));
        Self {
            inputs,
            outputs,
            w,
            b,
        }
    }

    /// Same as [`Dense::new`] but with LeCun-normal weights.
    pub fn new_lecun<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        inputs: usize,
        outputs: usize,
        rng: &mut R,
    ) -> Self {
        let w = store.alloc(
            &format!("{name}.w"),
            &[inputs, outputs],
            Init::LeCun { fan_in: inputs },
            rng,
        );
        let b = Some(store.alloc(&format!("{name}.b"), &[outputs], Init::Zeros, rng));
        Self {
            inputs,
            outputs,
            w,
            b,
        }
    }

    pub fn forward(&self, params: &[f64], x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.inputs);
        debug_assert_eq!(y.len(), self.outputs);
        match self.b {
            Some(b) => y.copy_from_slice(b.of(params)),
            None => y.iter_mut().for_each(|v| *v = 0.0),
        }
        gemv_acc(self.w.of(params), x, y);
    }

    pub fn forward_vec(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.outputs];
        self.forward(params, x, &mut y);
        y
    }

    /// Accumulate parameter gradients for upstream `dy`; optionally write `dL/dx`.
    pub fn backward(
        &self,
        params: &[f64],
        x: &[f64],
        dy: &[f64],
        grads: &mut [f64],
        dx: Option<&mut [f64]>,
    ) {
        let n = self.outputs;
        if let Some(b) = self.b {
            for (g, d) in b.of_mut(grads).iter_mut().zip(dy) {
                *g += d;
            }
        }
        let gw = self.w.of_mut(grads);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (g, &d) in gw[j * n..(j + 1) * n].iter_mut().zip(dy) {
                *g += xj * d;
            }
        }
        if let Some(dx) = dx {
            let w = self.w.of(params);
            for (j, out) in dx.iter_mut().enumerate() {
                *out = dot(&w[j * n..(j + 1) * n], dy);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{max_rel_error, numeric_grad};
    use crate::seed;
    use rand::Rng;

    #[test]
    fn zero_input_without_bias_gives_zero_output() {
        let mut rng = seed::rng(1, 0);
        let mut store = ParamStore::new();
        let layer = Dense::new(&mut store, "l", 5, 3, false, &mut rng);
        let mut y = layer.forward_vec(&store.values, &[0.0; 5]);
        crate::nn::Activation::Relu.apply_slice(&mut y);
        assert_eq!(y, vec![0.0; 3]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = seed::rng(2, 0);
        for trial in 0..5 {
            let (i, o) = (2 + trial, 1 + 2 * trial);
            let mut store = ParamStore::new();
            let layer = Dense::new(&mut store, "l", i, o, true, &mut rng);
            let x: Vec<f64> = (0..i).map(|_| rng.random_range(-1.0..1.0)).collect();
            let c: Vec<f64> = (0..o).map(|_| rng.random_range(-1.0..1.0)).collect();
            // L = sum_k c_k * tanh(y_k)
            let loss = |p: &[f64], x: &[f64]| -> f64 {
                let y = layer.forward_vec(p, x);
                y.iter().zip(&c).map(|(v, ck)| ck * v.tanh()).sum()
            };
            let y = layer.forward_vec(&store.values, &x);
            let dy: Vec<f64> = y.iter().zip(&c).map(|(v, ck)| ck * (1.0 - v.tanh().powi(2))).collect();
            let mut grads = store.zeros_like();
            let mut dx = vec![0.0; i];
            layer.backward(&store.values, &x, &dy, &mut grads, Some(&mut dx));

            let mut p = store.values.clone();
            let num_p = numeric_grad(&mut p, 1e-5, |p| loss(p, &x));
            assert!(max_rel_error(&grads, &num_p) < 1e-4);
            let mut xs = x.clone();
            let num_x = numeric_grad(&mut xs, 1e-5, |x| loss(&store.values, x));
            assert!(max_rel_error(&dx, &num_x) < 1e-4);
        }
    }
}

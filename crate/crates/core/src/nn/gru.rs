use rand::Rng;

use super::activation::sigmoid;
use super::{dot, gemv_acc, Embedding, Init, ParamStore, Slot, PAD};
use crate::{Error, Result};

/// Gated recurrent unit.
///
/// ```text
/// z  = σ(x·Wz + h·Uz + bz)
/// r  = σ(x·Wr + h·Ur + br)
/// n  = tanh(x·Wn + bn + r ⊙ (h·Un))
/// h' = (1 - z) ⊙ n + z ⊙ h
/// ```
/// Gate weights are packed `[z | r | n]` along the output axis.
#[derive(Clone, Debug)]
pub struct GruCell {
    pub input: usize,
    pub hidden: usize,
    wx: Slot,
    wh: Slot,
    b: Slot,
}

#[derive(Clone, Debug)]
struct GruStep {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    n: Vec<f64>,
    /// `h_prev · Un`, needed for the reset-gate gradient.
    hn: Vec<f64>,
}

impl GruCell {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let h3 = 3 * hidden;
        let wx = store.alloc(
            &format!("{name}.wx"),
            &[input, h3],
            Init::Glorot {
                fan_in: input,
                fan_out: hidden,
            },
            rng,
        );
        let wh = store.alloc(
            &format!("{name}.wh"),
            &[hidden, h3],
            Init::Glorot {
                fan_in: hidden,
                fan_out: hidden,
            },
            rng,
        );
        let b = store.alloc(&format!("{name}.b"), &[h3], Init::Zeros, rng);
        Self {
            input,
            hidden,
            wx,
            wh,
            b,
        }
    }

    fn step(&self, params: &[f64], x: &[f64], h: &[f64]) -> (Vec<f64>, GruStep) {
        let hd = self.hidden;
        let mut ax = self.b.of(params).to_vec();
        gemv_acc(self.wx.of(params), x, &mut ax);
        let mut ah = vec![0.0; 3 * hd];
        gemv_acc(self.wh.of(params), h, &mut ah);

        let mut z = vec![0.0; hd];
        let mut r = vec![0.0; hd];
        let mut n = vec![0.0; hd];
        let mut h_next = vec![0.0; hd];
        for k in 0..hd {
            z[k] = sigmoid(ax[k] + ah[k]);
            r[k] = sigmoid(ax[hd + k] + ah[hd + k]);
            n[k] = (ax[2 * hd + k] + r[k] * ah[2 * hd + k]).tanh();
            h_next[k] = (1.0 - z[k]) * n[k] + z[k] * h[k];
        }
        let rec = GruStep {
            x: x.to_vec(),
            h_prev: h.to_vec(),
            z,
            r,
            n,
            hn: ah[2 * hd..].to_vec(),
        };
        (h_next, rec)
    }

    /// Backprop one step; returns `(dL/dx, dL/dh_prev)`.
    fn step_backward(
        &self,
        params: &[f64],
        s: &GruStep,
        dh: &[f64],
        grads: &mut [f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let hd = self.hidden;
        let mut dax = vec![0.0; 3 * hd];
        let mut dah = vec![0.0; 3 * hd];
        let mut dh_prev = vec![0.0; hd];
        for k in 0..hd {
            let (z, r, n) = (s.z[k], s.r[k], s.n[k]);
            let dn = dh[k] * (1.0 - z);
            let dz = dh[k] * (s.h_prev[k] - n);
            dh_prev[k] = dh[k] * z;
            let dan = dn * (1.0 - n * n);
            let dr = dan * s.hn[k];
            let daz = dz * z * (1.0 - z);
            let dar = dr * r * (1.0 - r);
            dax[k] = daz;
            dax[hd + k] = dar;
            dax[2 * hd + k] = dan;
            dah[k] = daz;
            dah[hd + k] = dar;
            dah[2 * hd + k] = dan * r;
        }
        let h3 = 3 * hd;
        for (g, d) in self.b.of_mut(grads).iter_mut().zip(&dax) {
            *g += d;
        }
        {
            let gwx = self.wx.of_mut(grads);
            for (j, &xj) in s.x.iter().enumerate() {
                if xj != 0.0 {
                    for (g, d) in gwx[j * h3..(j + 1) * h3].iter_mut().zip(&dax) {
                        *g += xj * d;
                    }
                }
            }
        }
        {
            let gwh = self.wh.of_mut(grads);
            for (j, &hj) in s.h_prev.iter().enumerate() {
                if hj != 0.0 {
                    for (g, d) in gwh[j * h3..(j + 1) * h3].iter_mut().zip(&dah) {
                        *g += hj * d;
                    }
                }
            }
        }
        let wx = self.wx.of(params);
        let dx: Vec<f64> = (0..self.input)
            .map(|j| dot(&wx[j * h3..(j + 1) * h3], &dax))
            .collect();
        let wh = self.wh.of(params);
        for (j, dp) in dh_prev.iter_mut().enumerate() {
            *dp += dot(&wh[j * h3..(j + 1) * h3], &dah);
        }
        (dx, dh_prev)
    }
}

/// Token embeddings followed by a GRU; the encoding is the final hidden state.
#[derive(Clone, Debug)]
pub struct RecurrentEncoder {
    pub embedding: Embedding,
    pub gru: GruCell,
    pub input_dropout: f64,
}

#[derive(Clone, Debug, Default)]
pub struct GruCache {
    tokens: Vec<usize>,
    steps: Vec<GruStep>,
    masks: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

impl RecurrentEncoder {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        vocab: usize,
        embed_dim: usize,
        hidden: usize,
        input_dropout: f64,
        rng: &mut R,
    ) -> Self {
        let embedding = Embedding::new(store, &format!("{name}.emb"), vocab, embed_dim, rng);
        let gru = GruCell::new(store, &format!("{name}.gru"), embed_dim, hidden, rng);
        Self {
            embedding,
            gru,
            input_dropout,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.gru.hidden
    }

    pub fn encode(&self, params: &[f64], tokens: &[usize]) -> Result<Vec<f64>> {
        Ok(self
            .encode_cached::<crate::seed::Rng>(params, tokens, None)?
            .output)
    }

    /// Run the encoder over the non-padding tokens, recording the trajectory.
    pub fn encode_cached<R: Rng + ?Sized>(
        &self,
        params: &[f64],
        tokens: &[usize],
        mut rng: Option<&mut R>,
    ) -> Result<GruCache> {
        let tokens: Vec<usize> = tokens.iter().copied().filter(|&t| t != PAD).collect();
        if tokens.is_empty() {
            return Err(Error::usage("cannot encode an empty token sequence"));
        }
        if let Some(&bad) = tokens.iter().find(|&&t| t >= self.embedding.vocab) {
            return Err(Error::usage(format!(
                "token id {bad} outside vocabulary of {}",
                self.embedding.vocab
            )));
        }
        let mut h = vec![0.0; self.gru.hidden];
        let mut cache = GruCache {
            tokens: tokens.clone(),
            ..Default::default()
        };
        for &t in &tokens {
            let mut x = self.embedding.row(params, t).to_vec();
            if let (Some(rng), true) = (rng.as_deref_mut(), self.input_dropout > 0.0) {
                let keep = 1.0 - self.input_dropout;
                let mask: Vec<f64> = (0..x.len())
                    .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                    .collect();
                x.iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
                cache.masks.push(mask);
            }
            let (h_next, rec) = self.gru.step(params, &x, &h);
            cache.steps.push(rec);
            h = h_next;
        }
        cache.output = h;
        Ok(cache)
    }

    /// Backpropagation through time from `d_out = dL/dh_T`.
    pub fn backward(&self, params: &[f64], cache: &GruCache, d_out: &[f64], grads: &mut [f64]) {
        let mut dh = d_out.to_vec();
        for (i, step) in cache.steps.iter().enumerate().rev() {
            let (mut dx, dh_prev) = self.gru.step_backward(params, step, &dh, grads);
            if let Some(mask) = cache.masks.get(i) {
                dx.iter_mut().zip(mask).for_each(|(v, m)| *v *= m);
            }
            self.embedding.accumulate(grads, cache.tokens[i], &dx);
            dh = dh_prev;
        }
    }
}

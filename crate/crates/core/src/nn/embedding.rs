use rand::Rng;

use super::{Init, ParamStore, Slot};

/// Token id reserved for padding; it never contributes to any encoding.
pub const PAD: usize = 0;

/// Learned token embedding table.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub vocab: usize,
    pub dim: usize,
    table: Slot,
}

impl Embedding {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        vocab: usize,
        dim: usize,
        rng: &mut R,
    ) -> Self {
        let table = store.alloc(name, &[vocab, dim], Init::Normal { std: 0.3 }, rng);
        Self { vocab, dim, table }
    }

    pub fn row<'a>(&self, params: &'a [f64], token: usize) -> &'a [f64] {
        let t = self.table.of(params);
        &t[token * self.dim..(token + 1) * self.dim]
    }

    pub fn accumulate(&self, grads: &mut [f64], token: usize, d: &[f64]) {
        let dim = self.dim;
        let t = self.table.of_mut(grads);
        for (g, v) in t[token * dim..(token + 1) * dim].iter_mut().zip(d) {
            *g += v;
        }
    }
}

/// Sentence embedder that averages the embeddings of non-padding tokens.
#[derive(Clone, Debug)]
pub struct MeanEmbedder {
    pub embedding: Embedding,
}

impl MeanEmbedder {
    pub fn new(embedding: Embedding) -> Self {
        Self { embedding }
    }

    pub fn dim(&self) -> usize {
        self.embedding.dim
    }

    pub fn encode(&self, params: &[f64], tokens: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.embedding.dim];
        let mut n = 0usize;
        for &t in tokens.iter().filter(|&&t| t != PAD) {
            for (o, v) in out.iter_mut().zip(self.embedding.row(params, t)) {
                *o += v;
            }
            n += 1;
        }
        if n > 0 {
            out.iter_mut().for_each(|o| *o /= n as f64);
        }
        out
    }

    pub fn backward(&self, grads: &mut [f64], tokens: &[usize], d: &[f64]) {
        let n = tokens.iter().filter(|&&t| t != PAD).count();
        if n == 0 {
            return;
        }
        let scaled: Vec<f64> = d.iter().map(|v| v / n as f64).collect();
        for &t in tokens.iter().filter(|&&t| t != PAD) {
            self.embedding.accumulate(grads, t, &scaled);
        }
    }
}

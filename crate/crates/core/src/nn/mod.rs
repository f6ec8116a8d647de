//! Minimal differentiable building blocks with hand-written exact gradients.
//!
//! Networks keep every parameter in one flat [`ParamStore`]; layers only hold
//! [`Slot`]s into it. Forward passes read a `&[f64]` view of the store and
//! backward passes accumulate into a gradient buffer of the same length, so
//! optimizers, target-network copies, finite-difference checks and
//! checkpoints all work on plain slices.

mod activation;
pub mod checkpoint;
mod dense;
mod dueling;
mod embedding;
mod ffn;
mod gru;
pub mod loss;
mod params;
mod radam;

pub use activation::{sigmoid, softmax, Activation};
pub use dense::Dense;
pub use dueling::{DuelingCache, DuelingQNet};
pub use embedding::{Embedding, MeanEmbedder, PAD};
pub use ffn::{FeedForwardNet, FfnCache};
pub use gru::{GruCache, GruCell, RecurrentEncoder};
pub use params::{BlockInfo, Init, ParamStore, Slot};
pub use radam::Radam;

/// `y += x · W` for a row-major `inputs × outputs` matrix, skipping zero inputs.
///
/// Binary dialog states and post-ReLU activations are mostly zeros, so the
/// skip makes the common case several times cheaper without changing results.
#[inline]
pub(crate) fn gemv_acc(w: &[f64], x: &[f64], y: &mut [f64]) {
    let n = y.len();
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let row = &w[j * n..(j + 1) * n];
        for (yk, &wk) in y.iter_mut().zip(row) {
            *yk += xj * wk;
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// A contiguous block of parameters inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub offset: usize,
    pub len: usize,
}

impl Slot {
    #[inline]
    pub fn of<'a>(&self, values: &'a [f64]) -> &'a [f64] {
        &values[self.offset..self.offset + self.len]
    }

    #[inline]
    pub fn of_mut<'a>(&self, values: &'a mut [f64]) -> &'a mut [f64] {
        &mut values[self.offset..self.offset + self.len]
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Init {
    Zeros,
    /// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
    Glorot { fan_in: usize, fan_out: usize },
    /// Gaussian with standard deviation `sqrt(1 / fan_in)` (SELU-friendly).
    LeCun { fan_in: usize },
    Normal { std: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockInfo {
    pub name: String,
    pub shape: Vec<usize>,
    pub slot: Slot,
}

/// Flat storage for all parameters of one network.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    pub values: Vec<f64>,
    blocks: Vec<BlockInfo>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn alloc<R: Rng + ?Sized>(
        &mut self,
        name: &str,
        shape: &[usize],
        init: Init,
        rng: &mut R,
    ) -> Slot {
        let len: usize = shape.iter().product();
        let slot = Slot {
            offset: self.values.len(),
            len,
        };
        self.values.reserve(len);
        for _ in 0..len {
            let v = match init {
                Init::Zeros => 0.0,
                Init::Glorot { fan_in, fan_out } => {
                    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    rng.random_range(-a..a)
                }
                Init::LeCun { fan_in } => {
                    rng.sample::<f64, _>(StandardNormal) * (1.0 / fan_in as f64).sqrt()
                }
                Init::Normal { std } => rng.sample::<f64, _>(StandardNormal) * std,
            };
            self.values.push(v);
        }
        self.blocks.push(BlockInfo {
            name: name.to_string(),
            shape: shape.to_vec(),
            slot,
        });
        slot
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn blocks(&self) -> &[BlockInfo] {
        &self.blocks
    }

    pub fn zeros_like(&self) -> Vec<f64> {
        vec![0.0; self.values.len()]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn from_parts(values: Vec<f64>, blocks: Vec<BlockInfo>) -> Self {
        Self { values, blocks }
    }
}

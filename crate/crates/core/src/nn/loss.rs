//! Scalar losses returning `(value, d value / d input)`.

use super::activation::{sigmoid, softmax};

/// Cross-entropy of `softmax(logits)` against a class index.
pub fn softmax_cross_entropy(logits: &[f64], target: usize) -> (f64, Vec<f64>) {
    let mut p = softmax(logits);
    let loss = -p[target].max(1e-300).ln();
    p[target] -= 1.0;
    (loss, p)
}

/// Summed binary cross-entropy of `sigmoid(logits)` against targets in `[0, 1]`.
pub fn bce_with_logits(logits: &[f64], targets: &[f64]) -> (f64, Vec<f64>) {
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (&z, &t) in logits.iter().zip(targets) {
        // log(1 + e^z) - t z, evaluated stably
        loss += z.max(0.0) - t * z + (-z.abs()).exp().ln_1p();
        grad.push(sigmoid(z) - t);
    }
    (loss, grad)
}

/// `(target - pred)^2`.
pub fn squared_error(pred: f64, target: f64) -> (f64, f64) {
    let diff = pred - target;
    (diff * diff, 2.0 * diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{max_rel_error, numeric_grad};

    #[test]
    fn cross_entropy_gradient() {
        let mut z = vec![0.3, -1.2, 2.0, 0.1];
        let (_, g) = softmax_cross_entropy(&z, 2);
        let num = numeric_grad(&mut z, 1e-5, |z| softmax_cross_entropy(z, 2).0);
        assert!(max_rel_error(&g, &num) < 1e-4);
    }

    #[test]
    fn bce_gradient_and_value() {
        let mut z = vec![0.7, -2.5, 4.0];
        let t = [1.0, 0.0, 0.0];
        let (l, g) = bce_with_logits(&z, &t);
        let direct: f64 = z
            .iter()
            .zip(&t)
            .map(|(&zi, &ti)| {
                let s = sigmoid(zi);
                -(ti * s.ln() + (1.0 - ti) * (1.0 - s).ln())
            })
            .sum();
        assert!((l - direct).abs() < 1e-12);
        let num = numeric_grad(&mut z, 1e-5, |z| bce_with_logits(z, &t).0);
        assert!(max_rel_error(&g, &num) < 1e-4);
    }

    #[test]
    fn squared_error_value() {
        assert_eq!(squared_error(0.0, 2.0), (4.0, -4.0));
    }
}

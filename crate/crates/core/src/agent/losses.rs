//! Per-sample loss terms on a Q-vector. Each returns the loss value and, where
//! differentiable, `dL/dQ`.

/// Lowest-index argmax.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Squared TD error `w (y - Q)^2` and its derivative with respect to `Q`.
pub fn q_loss(q: f64, target: f64, weight: f64) -> (f64, f64) {
    let diff = q - target;
    (weight * diff * diff, 2.0 * weight * diff)
}

/// Large-margin imitation loss `max_a [Q(a) + l(a_E, a)] - Q(a_E)` with
/// `l = 0` for the expert action and `c` otherwise.
pub fn aux_loss_fle(q: &[f64], expert: usize, c: f64) -> (f64, Vec<f64>) {
    let mut best = expert;
    let mut best_value = q[expert];
    for (a, &v) in q.iter().enumerate() {
        if a != expert && v + c > best_value {
            best = a;
            best_value = v + c;
        }
    }
    let mut grad = vec![0.0; q.len()];
    if best != expert {
        grad[best] += 1.0;
        grad[expert] -= 1.0;
    }
    (best_value - q[expert], grad)
}

/// Penalty `c` unless the greedy action lies in the predicted reduced-label set.
pub fn aux_loss_rle(q: &[f64], allowed: &[usize], c: f64) -> f64 {
    if allowed.contains(&argmax(q)) {
        0.0
    } else {
        c
    }
}

/// Penalty `c` unless the greedy action is admissible; an empty set is always penalized.
pub fn aux_loss_nle(q: &[f64], admissible: &[usize], c: f64) -> f64 {
    aux_loss_rle(q, admissible, c)
}

/// Differentiable stand-in for the set penalties: the large-margin loss with
/// the expert action replaced by the best in-set action, i.e.
/// `max(0, max_{a∉S} Q(a) + c - max_{a∈S} Q(a))`. Zero for an empty set.
pub fn set_margin_loss(q: &[f64], set: &[usize], c: f64) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; q.len()];
    let Some(&inside) = set.iter().max_by(|&&a, &&b| q[a].total_cmp(&q[b]).then(b.cmp(&a))) else {
        return (0.0, grad);
    };
    let mut in_set = vec![false; q.len()];
    set.iter().for_each(|&a| in_set[a] = true);
    let outside = (0..q.len())
        .filter(|&a| !in_set[a])
        .fold(None, |best: Option<usize>, a| match best {
            Some(b) if q[b] >= q[a] => Some(b),
            _ => Some(a),
        });
    let Some(outside) = outside else {
        return (0.0, grad);
    };
    let margin = q[outside] + c - q[inside];
    if margin <= 0.0 {
        return (0.0, grad);
    }
    grad[outside] = 1.0;
    grad[inside] = -1.0;
    (margin, grad)
}

/// Binary tree over leaf weights keeping subtree sums and maxima.
///
/// Leaves grow on demand (capacity doubles), parents are always recomputed
/// from their children so sums do not drift under repeated updates.
#[derive(Clone, Debug)]
pub struct SumTree {
    leaves: usize,
    sum: Vec<f64>,
    max: Vec<f64>,
}

impl SumTree {
    pub fn new() -> Self {
        Self::with_leaves(1)
    }

    fn with_leaves(leaves: usize) -> Self {
        let leaves = leaves.next_power_of_two();
        Self { leaves, sum: vec![0.0; 2 * leaves], max: vec![0.0; 2 * leaves] }
    }

    pub fn capacity(&self) -> usize {
        self.leaves
    }

    fn grow(&mut self, min_leaves: usize) {
        let mut bigger = Self::with_leaves(min_leaves);
        for i in 0..self.leaves {
            bigger.sum[bigger.leaves + i] = self.sum[self.leaves + i];
            bigger.max[bigger.leaves + i] = self.max[self.leaves + i];
        }
        for node in (1..bigger.leaves).rev() {
            bigger.pull(node);
        }
        *self = bigger;
    }

    fn pull(&mut self, node: usize) {
        let (l, r) = (2 * node, 2 * node + 1);
        self.sum[node] = self.sum[l] + self.sum[r];
        self.max[node] = self.max[l].max(self.max[r]);
    }

    /// Sets the sampling weight and the tracked value of a leaf.
    pub fn set(&mut self, leaf: usize, weight: f64, tracked: f64) {
        if leaf >= self.leaves {
            self.grow(leaf + 1);
        }
        let mut node = self.leaves + leaf;
        self.sum[node] = weight;
        self.max[node] = tracked;
        while node > 1 {
            node /= 2;
            self.pull(node);
        }
    }

    pub fn weight(&self, leaf: usize) -> f64 {
        self.sum[self.leaves + leaf]
    }

    pub fn total(&self) -> f64 {
        self.sum[1]
    }

    /// Largest tracked value over all leaves.
    pub fn max(&self) -> f64 {
        self.max[1]
    }

    /// Leaf whose cumulative weight interval contains `mass` in `[0, total)`.
    /// Never returns a zero-weight leaf while the total is positive.
    pub fn find(&self, mut mass: f64) -> usize {
        let mut node = 1;
        while node < self.leaves {
            let (l, r) = (2 * node, 2 * node + 1);
            if mass < self.sum[l] || self.sum[r] <= 0.0 {
                node = l;
            } else {
                mass -= self.sum[l];
                node = r;
            }
        }
        node - self.leaves
    }
}

impl Default for SumTree {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn find_walks_cumulative_intervals() {
        let mut t = SumTree::new();
        for (i, w) in [1.0, 0.0, 3.0, 2.0].into_iter().enumerate() {
            t.set(i, w, w);
        }
        assert_eq!(t.total(), 6.0);
        assert_eq!(t.max(), 3.0);
        assert_eq!(t.find(0.5), 0);
        assert_eq!(t.find(1.0), 2);
        assert_eq!(t.find(3.99), 2);
        assert_eq!(t.find(4.0), 3);
        assert_eq!(t.find(6.0), 3);
    }

    proptest! {
        #[test]
        fn sums_and_maxima_match_leaves(ops in prop::collection::vec((0usize..40, 0.0f64..5.0), 1..120)) {
            let mut t = SumTree::new();
            let mut leaves = vec![0.0; 40];
            for (i, w) in ops {
                t.set(i, w, w);
                leaves[i] = w;
            }
            let total: f64 = leaves.iter().sum();
            prop_assert!((t.total() - total).abs() < 1e-9);
            prop_assert_eq!(t.max(), leaves.iter().cloned().fold(0.0, f64::max));
        }
    }
}

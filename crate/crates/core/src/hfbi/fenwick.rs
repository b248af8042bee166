/// Binary indexed tree over non-negative weights with weighted search.
#[derive(Debug, Clone)]
pub(crate) struct Fenwick {
    /// 1-based partial sums; `tree[0]` is unused.
    tree: Vec<f64>,
    weights: Vec<f64>,
}

impl Default for Fenwick {
    fn default() -> Self {
        Self::from_weights(Vec::new())
    }
}

impl Fenwick {
    pub fn from_weights(weights: Vec<f64>) -> Self {
        let mut tree = Vec::with_capacity(weights.len() + 1);
        tree.push(0.0);
        tree.extend_from_slice(&weights);
        let n = weights.len();
        for i in 1..=n {
            let parent = i + lowbit(i);
            if parent <= n {
                tree[parent] += tree[i];
            }
        }
        Self { tree, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn push(&mut self, w: f64) {
        let i = self.weights.len() + 1;
        let span_start = i - lowbit(i);
        let node = w + self.prefix(i - 1) - self.prefix(span_start);
        self.tree.push(node);
        self.weights.push(w);
    }

    pub fn set(&mut self, idx: usize, w: f64) {
        let delta = w - self.weights[idx];
        self.weights[idx] = w;
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += lowbit(i);
        }
    }

    /// Sum of the first `count` weights.
    pub fn prefix(&self, count: usize) -> f64 {
        let mut i = count;
        let mut acc = 0.0;
        while i > 0 {
            acc += self.tree[i];
            i -= lowbit(i);
        }
        acc
    }

    pub fn total(&self) -> f64 {
        self.prefix(self.len())
    }

    /// Index `i` with `prefix(i) <= target < prefix(i + 1)`, skipping
    /// zero-weight entries. Rounding residue can push the descent onto an
    /// empty slot or past the end; the nearest positive entry is returned then.
    pub fn find(&self, target: f64) -> Option<usize> {
        let n = self.len();
        if n == 0 {
            return None;
        }
        let mut pos = 0;
        let mut rem = target;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        let idx = pos.min(n - 1);
        if self.weights[idx] > 0.0 {
            return Some(idx);
        }
        (idx + 1..n)
            .find(|&i| self.weights[i] > 0.0)
            .or_else(|| (0..idx).rev().find(|&i| self.weights[i] > 0.0))
    }
}

#[inline]
fn lowbit(i: usize) -> usize {
    i & i.wrapping_neg()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_sums_and_push_agree_with_build() {
        let w: Vec<f64> = (0..37).map(|i| ((i * 7) % 5) as f64).collect();
        let built = Fenwick::from_weights(w.clone());
        let mut pushed = Fenwick::default();
        for &x in &w {
            pushed.push(x);
        }
        for k in 0..=w.len() {
            let want: f64 = w[..k].iter().sum();
            assert_eq!(built.prefix(k), want);
            assert_eq!(pushed.prefix(k), want);
        }
    }

    #[test]
    fn find_skips_zero_weights() {
        let mut f = Fenwick::from_weights(vec![0.0, 2.0, 0.0, 0.0, 1.0, 3.0]);
        assert_eq!(f.find(0.0), Some(1));
        assert_eq!(f.find(1.999), Some(1));
        assert_eq!(f.find(2.0), Some(4));
        assert_eq!(f.find(2.5), Some(4));
        assert_eq!(f.find(3.0), Some(5));
        assert_eq!(f.find(5.999), Some(5));
        f.set(5, 0.0);
        assert_eq!(f.find(3.5), Some(4));
        f.set(1, 0.0);
        f.set(4, 0.0);
        assert_eq!(f.find(0.0), None);
    }
}

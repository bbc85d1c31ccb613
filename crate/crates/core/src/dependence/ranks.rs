/// Ranks `1..=n`, ties receiving the average of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1..=end.
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Dense integer ranks starting at 0; equal values share a rank.
pub(crate) fn dense_ranks(values: &[f64]) -> (Vec<usize>, usize) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0; n];
    let mut r = 0;
    for w in 0..n {
        if w > 0 && values[order[w]] != values[order[w - 1]] {
            r += 1;
        }
        ranks[order[w]] = r;
    }
    (ranks, if n == 0 { 0 } else { r + 1 })
}

/// Fenwick tree over counts.
pub(crate) struct Fenwick {
    tree: Vec<u32>,
}

impl Fenwick {
    pub(crate) fn new(n: usize) -> Self {
        Fenwick { tree: vec![0; n + 1] }
    }

    pub(crate) fn add(&mut self, i: usize) {
        let mut i = i + 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Number of inserted positions strictly below `i`.
    pub(crate) fn count_below(&self, i: usize) -> u32 {
        let mut i = i;
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_get_average_rank() {
        assert_eq!(average_ranks(&[5.0, 5.0, 9.0]), vec![1.5, 1.5, 3.0]);
        assert_eq!(average_ranks(&[3.0, 1.0, 2.0]), vec![3.0, 1.0, 2.0]);
        assert_eq!(average_ranks(&[2.0, 2.0, 2.0, 1.0]), vec![3.0, 3.0, 3.0, 1.0]);
    }

    #[test]
    fn dense() {
        let (r, m) = dense_ranks(&[0.5, 0.1, 0.5, 0.9]);
        assert_eq!(r, vec![1, 0, 1, 2]);
        assert_eq!(m, 3);
    }

    #[test]
    fn fenwick_counts() {
        let mut f = Fenwick::new(5);
        f.add(1);
        f.add(3);
        f.add(3);
        assert_eq!(f.count_below(0), 0);
        assert_eq!(f.count_below(2), 1);
        assert_eq!(f.count_below(4), 3);
    }
}

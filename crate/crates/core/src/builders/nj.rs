use crate::error::{Error, Result};
use crate::tree::UnrootedTree;

/// Neighbor joining on a symmetric distance matrix. Leaves of the result are
/// `labels` in the given order. Among pairs with equal Q-criterion the one
/// with the smallest index pair joins first.
pub fn nj_tree(labels: &[String], dist: &[Vec<f64>]) -> Result<UnrootedTree> {
    let d = labels.len();
    if d < 3 {
        return Err(Error::TooFewLeaves { needed: 3, got: d });
    }
    if dist.len() != d || dist.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidData("distance matrix is not square".into()));
    }
    for i in 0..d {
        for j in 0..d {
            if !dist[i][j].is_finite() || (dist[i][j] - dist[j][i]).abs() > 1e-12 {
                return Err(Error::InvalidData(format!(
                    "distance ({i},{j}) is not finite or not symmetric"
                )));
            }
        }
    }

    let total = 2 * d - 2;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); total];
    let mut m: Vec<Vec<f64>> = vec![vec![0.0; total]; total];
    for i in 0..d {
        m[i][..d].copy_from_slice(&dist[i]);
    }
    // Active nodes, kept in increasing id order.
    let mut active: Vec<usize> = (0..d).collect();
    let mut next = d;
    while active.len() > 3 {
        let r = active.len() as f64;
        let sums: Vec<f64> = active
            .iter()
            .map(|&a| active.iter().map(|&b| m[a][b]).sum())
            .collect();
        let mut best = (f64::INFINITY, 0, 0);
        for x in 0..active.len() {
            for y in x + 1..active.len() {
                let q = (r - 2.0) * m[active[x]][active[y]] - sums[x] - sums[y];
                if q < best.0 {
                    best = (q, x, y);
                }
            }
        }
        let (_, x, y) = best;
        let (a, b) = (active[x], active[y]);
        let u = next;
        next += 1;
        for &k in &active {
            if k != a && k != b {
                let v = 0.5 * (m[a][k] + m[b][k] - m[a][b]);
                m[u][k] = v;
                m[k][u] = v;
            }
        }
        for c in [a, b] {
            adj[u].push(c);
            adj[c].push(u);
        }
        active.retain(|&k| k != a && k != b);
        active.push(u);
    }
    let center = next;
    for &c in &active {
        adj[center].push(c);
        adj[c].push(center);
    }
    UnrootedTree::from_parts(labels.to_vec(), adj)
}

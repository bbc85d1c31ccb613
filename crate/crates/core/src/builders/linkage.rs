use std::cmp::Ordering;

use crate::dependence::DependenceMatrix;
use crate::error::{Error, Result};
use crate::tree::{natural_cmp, Clade, RootedTree};

struct Cluster {
    clade: Clade,
    size: usize,
    /// Smallest label in the cluster, used to break ties.
    key: String,
}

/// UPGMA clustering. At every step the two clusters with the smallest
/// average inter-cluster distance merge; equal distances are resolved by
/// the smallest pair of cluster keys, each key being the cluster's smallest
/// label in natural order.
pub fn average_linkage(dist: &DependenceMatrix) -> Result<RootedTree> {
    dist.validate()?;
    let d = dist.dim();
    if d < 2 {
        return Err(Error::TooFewLeaves { needed: 2, got: d });
    }
    let mut clusters: Vec<Option<Cluster>> = dist
        .names()
        .iter()
        .map(|n| {
            Some(Cluster {
                clade: Clade::leaf(n.clone()),
                size: 1,
                key: n.clone(),
            })
        })
        .collect();
    let mut m: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| dist.get(i, j)).collect()).collect();

    for _ in 1..d {
        let mut best: Option<(usize, usize)> = None;
        let ordered_keys = |a: usize, b: usize, cl: &[Option<Cluster>]| {
            let (ka, kb) = (&cl[a].as_ref().unwrap().key, &cl[b].as_ref().unwrap().key);
            if natural_cmp(ka, kb) == Ordering::Greater {
                (kb.clone(), ka.clone())
            } else {
                (ka.clone(), kb.clone())
            }
        };
        for a in 0..d {
            if clusters[a].is_none() {
                continue;
            }
            for b in a + 1..d {
                if clusters[b].is_none() {
                    continue;
                }
                best = match best {
                    None => Some((a, b)),
                    Some((x, y)) => {
                        let ord = m[a][b].total_cmp(&m[x][y]).then_with(|| {
                            let (p, q) = ordered_keys(a, b, &clusters);
                            let (r, s) = ordered_keys(x, y, &clusters);
                            natural_cmp(&p, &r).then_with(|| natural_cmp(&q, &s))
                        });
                        if ord == Ordering::Less {
                            Some((a, b))
                        } else {
                            Some((x, y))
                        }
                    }
                };
            }
        }
        let (a, b) = best.unwrap();
        let ca = clusters[a].take().unwrap();
        let cb = clusters[b].take().unwrap();
        let (na, nb) = (ca.size as f64, cb.size as f64);
        for k in 0..d {
            if clusters[k].is_some() {
                let v = (na * m[a][k] + nb * m[b][k]) / (na + nb);
                m[a][k] = v;
                m[k][a] = v;
            }
        }
        let key = if natural_cmp(&ca.key, &cb.key) == Ordering::Greater {
            cb.key.clone()
        } else {
            ca.key.clone()
        };
        clusters[a] = Some(Cluster {
            clade: Clade::inner(vec![ca.clade, cb.clade]),
            size: ca.size + cb.size,
            key,
        });
    }
    let root = clusters.into_iter().flatten().next().unwrap();
    RootedTree::from_clade(&root.clade)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_newick;

    fn matrix(rows: Vec<Vec<f64>>) -> DependenceMatrix {
        let names = (1..=rows.len()).map(|i| format!("U{i}")).collect();
        DependenceMatrix::from_rows(names, rows).unwrap()
    }

    #[test]
    fn unique_closest_pair() {
        let m = matrix(vec![
            vec![0.0, 0.1, 0.9],
            vec![0.1, 0.0, 0.9],
            vec![0.9, 0.9, 0.0],
        ]);
        let t = average_linkage(&m).unwrap();
        assert!(t.is_isomorphic(&parse_newick("((U1,U2),U3);").unwrap()));
    }

    #[test]
    fn two_blocks() {
        let m = matrix(vec![
            vec![0.0, 0.2, 0.8, 0.9],
            vec![0.2, 0.0, 0.7, 0.8],
            vec![0.8, 0.7, 0.0, 0.3],
            vec![0.9, 0.8, 0.3, 0.0],
        ]);
        let t = average_linkage(&m).unwrap();
        assert!(t.is_isomorphic(&parse_newick("((U1,U2),(U3,U4));").unwrap()));
        assert_eq!(t.internal_count(), 3);
    }

    #[test]
    fn average_not_single_linkage() {
        // Single linkage would join U3 to {U1,U2} via the 0.3 entry; the
        // average distance 0.6 loses to the U3-U4 distance 0.5.
        let m = matrix(vec![
            vec![0.0, 0.1, 0.3, 0.9],
            vec![0.1, 0.0, 0.9, 0.9],
            vec![0.3, 0.9, 0.0, 0.5],
            vec![0.9, 0.9, 0.5, 0.0],
        ]);
        let t = average_linkage(&m).unwrap();
        assert!(t.is_isomorphic(&parse_newick("((U1,U2),(U3,U4));").unwrap()));
    }

    #[test]
    fn ties_are_deterministic() {
        let rows = (0..5)
            .map(|i| (0..5).map(|j| if i == j { 0.0 } else { 0.5 }).collect())
            .collect();
        let t = average_linkage(&matrix(rows)).unwrap();
        assert!(t.is_isomorphic(&parse_newick("((((U1,U2),U3),U4),U5);").unwrap()));
    }

    #[test]
    fn rejects_asymmetric() {
        let names = vec!["a".to_string(), "b".to_string()];
        assert!(DependenceMatrix::from_rows(names, vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
    }
}

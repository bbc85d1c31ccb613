//! Trivariate decomposition of a rooted tree and its inverse.
//!
//! Restricting a tree to three leaves yields one of four shapes: the 3-fan or
//! a cherry on one of the three pairs. The collection of all C(d,3) shapes
//! determines the tree, and [`reconstruct`] rebuilds it.

use std::fmt;

use super::{natural_cmp, Clade, RootedTree};
use crate::error::{Error, Result};

/// Shape of a leaf triple, with leaves referred to by index into a
/// [`TripleSet`]'s label list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Topology {
    Fan,
    /// Cherry on the two leaves other than `outlier`.
    Cherry { outlier: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TripleKind {
    Fan,
    Cherry { pair: [String; 2], outlier: String },
}

/// Label-level shape of one triple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripleShape {
    /// The three labels in natural order.
    pub leaves: [String; 3],
    pub kind: TripleKind,
}

impl fmt::Display for TripleShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            TripleKind::Fan => write!(f, "{},{},{} FAN", self.leaves[0], self.leaves[1], self.leaves[2]),
            TripleKind::Cherry { pair, outlier } => {
                write!(f, "{},{}|{} CHERRY", pair[0], pair[1], outlier)
            }
        }
    }
}

/// One shape per 3-subset of a label set.
#[derive(Clone, Debug, PartialEq)]
pub struct TripleSet {
    labels: Vec<String>,
    shapes: Vec<Option<Topology>>,
}

fn sort3(i: usize, j: usize, k: usize) -> (usize, usize, usize) {
    let mut v = [i, j, k];
    v.sort_unstable();
    (v[0], v[1], v[2])
}

impl TripleSet {
    /// Empty set over `labels`; labels are kept in the given order.
    pub fn new(labels: Vec<String>) -> Self {
        let d = labels.len();
        TripleSet {
            labels,
            shapes: vec![None; d * d * d],
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    fn slot(&self, i: usize, j: usize, k: usize) -> usize {
        let d = self.labels.len();
        let (a, b, c) = sort3(i, j, k);
        (a * d + b) * d + c
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, topology: Topology) {
        debug_assert!(i != j && j != k && i != k);
        let s = self.slot(i, j, k);
        self.shapes[s] = Some(topology);
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Option<Topology> {
        self.shapes[self.slot(i, j, k)]
    }

    /// Whether leaves `i` and `j` form the cherry of triple `(i, j, k)`.
    pub fn is_cherry(&self, i: usize, j: usize, k: usize) -> bool {
        self.get(i, j, k) == Some(Topology::Cherry { outlier: k })
    }

    pub fn len(&self) -> usize {
        self.shapes.iter().filter(|s| s.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_complete(&self) -> bool {
        self.iter_indices().all(|(i, j, k)| self.get(i, j, k).is_some())
    }

    /// All index triples `i < j < k`.
    pub fn iter_indices(&self) -> impl Iterator<Item = (usize, usize, usize)> {
        let d = self.labels.len();
        (0..d).flat_map(move |i| {
            (i + 1..d).flat_map(move |j| (j + 1..d).map(move |k| (i, j, k)))
        })
    }

    pub fn shape(&self, i: usize, j: usize, k: usize) -> Option<TripleShape> {
        let topo = self.get(i, j, k)?;
        let mut idx = [i, j, k];
        idx.sort_by(|&a, &b| natural_cmp(&self.labels[a], &self.labels[b]));
        let leaves = idx.map(|x| self.labels[x].clone());
        let kind = match topo {
            Topology::Fan => TripleKind::Fan,
            Topology::Cherry { outlier } => {
                let pair: Vec<String> = idx
                    .iter()
                    .filter(|&&x| x != outlier)
                    .map(|&x| self.labels[x].clone())
                    .collect();
                TripleKind::Cherry {
                    pair: [pair[0].clone(), pair[1].clone()],
                    outlier: self.labels[outlier].clone(),
                }
            }
        };
        Some(TripleShape { leaves, kind })
    }

    /// Shapes of every triple, in index order.
    pub fn shapes(&self) -> Vec<TripleShape> {
        self.iter_indices()
            .filter_map(|(i, j, k)| self.shape(i, j, k))
            .collect()
    }
}

struct LcaTable {
    lca_depth: Vec<usize>,
    d: usize,
}

impl LcaTable {
    fn new(tree: &RootedTree, leaves: &[usize]) -> Self {
        let d = leaves.len();
        let depths = tree.depths();
        let mut lca_depth = vec![0; d * d];
        for a in 0..d {
            for b in a + 1..d {
                let l = tree.lca(leaves[a], leaves[b]);
                lca_depth[a * d + b] = depths[l];
                lca_depth[b * d + a] = depths[l];
            }
        }
        LcaTable { lca_depth, d }
    }

    fn topology(&self, i: usize, j: usize, k: usize) -> Topology {
        let ij = self.lca_depth[i * self.d + j];
        let ik = self.lca_depth[i * self.d + k];
        let jk = self.lca_depth[j * self.d + k];
        if ij > ik && ij > jk {
            Topology::Cherry { outlier: k }
        } else if ik > ij && ik > jk {
            Topology::Cherry { outlier: j }
        } else if jk > ij && jk > ik {
            Topology::Cherry { outlier: i }
        } else {
            Topology::Fan
        }
    }
}

/// Shape of the subtree spanned by three distinct leaves.
pub fn triple_shape(tree: &RootedTree, a: &str, b: &str, c: &str) -> Result<TripleShape> {
    if a == b || b == c || a == c {
        return Err(Error::InvalidParameter("triple labels must be distinct".into()));
    }
    let ids = [tree.leaf(a)?, tree.leaf(b)?, tree.leaf(c)?];
    let table = LcaTable::new(tree, &ids);
    let mut set = TripleSet::new(vec![a.to_string(), b.to_string(), c.to_string()]);
    set.set(0, 1, 2, table.topology(0, 1, 2));
    Ok(set.shape(0, 1, 2).unwrap())
}

/// Decomposes a tree with at least three leaves into all its triple shapes.
/// Labels of the result are in natural order.
pub fn decompose(tree: &RootedTree) -> Result<TripleSet> {
    let labels = tree.leaf_labels();
    decompose_with_labels(tree, labels)
}

pub(crate) fn decompose_with_labels(tree: &RootedTree, labels: Vec<String>) -> Result<TripleSet> {
    if labels.len() < 3 {
        return Err(Error::TooFewLeaves {
            needed: 3,
            got: labels.len(),
        });
    }
    let ids: Vec<usize> = labels
        .iter()
        .map(|l| tree.leaf(l))
        .collect::<Result<_>>()?;
    let table = LcaTable::new(tree, &ids);
    let mut set = TripleSet::new(labels);
    let all: Vec<_> = set.iter_indices().collect();
    for (i, j, k) in all {
        set.set(i, j, k, table.topology(i, j, k));
    }
    Ok(set)
}

struct Cluster {
    members: Vec<usize>,
    children: Option<(usize, usize)>,
}

/// Rebuilds a rooted tree from a complete triple set.
///
/// Clusters are merged agglomeratively, always choosing the pair whose union
/// is contradicted by the fewest triples (a triple `(i, j, k)` with `i` and
/// `j` on different sides and `k` outside contradicts the merge when `k`
/// pairs with `i` or `j`). Ties prefer the merge most supported by cherries
/// `{i, j}`. The resulting binary hierarchy is then pruned: a cluster with
/// parts `A`, `B` and hierarchy sibling `S` survives only if a strict
/// majority of triples `(a, b, s)` are the cherry `{a, b}`. On a consistent
/// triple set this returns the generating tree exactly.
pub fn reconstruct(triples: &TripleSet) -> Result<RootedTree> {
    let d = triples.dim();
    if d < 3 {
        return Err(Error::TooFewLeaves { needed: 3, got: d });
    }
    if let Some((i, j, k)) = triples.iter_indices().find(|&(i, j, k)| triples.get(i, j, k).is_none()) {
        return Err(Error::IncompleteTriples(format!(
            "missing ({}, {}, {})",
            triples.labels[i], triples.labels[j], triples.labels[k]
        )));
    }

    let mut clusters: Vec<Cluster> = (0..d)
        .map(|i| Cluster {
            members: vec![i],
            children: None,
        })
        .collect();
    let mut owner: Vec<usize> = (0..d).collect();
    let mut active: Vec<usize> = (0..d).collect();

    while active.len() > 1 {
        let mut best: Option<(usize, usize, u64, u64, u64)> = None;
        for x in 0..active.len() {
            for y in x + 1..active.len() {
                let (a, b) = (active[x], active[y]);
                let (mut support, mut violation, mut total) = (0u64, 0u64, 0u64);
                for &i in &clusters[a].members {
                    for &j in &clusters[b].members {
                        for k in 0..d {
                            if owner[k] == a || owner[k] == b {
                                continue;
                            }
                            total += 1;
                            match triples.get(i, j, k).unwrap() {
                                Topology::Cherry { outlier } if outlier == k => support += 1,
                                Topology::Cherry { .. } => violation += 1,
                                Topology::Fan => {}
                            }
                        }
                    }
                }
                let better = match best {
                    None => true,
                    Some((_, _, bs, bv, bt)) => {
                        if total == 0 || bt == 0 {
                            // Final merge of the last two clusters.
                            false
                        } else {
                            let lhs = violation * bt;
                            let rhs = bv * total;
                            lhs < rhs || (lhs == rhs && support * bt > bs * total)
                        }
                    }
                };
                if better {
                    best = Some((x, y, support, violation, total));
                }
            }
        }
        let (x, y, ..) = best.unwrap();
        let (a, b) = (active[x], active[y]);
        let id = clusters.len();
        let mut members = clusters[a].members.clone();
        members.extend(&clusters[b].members);
        for &m in &members {
            owner[m] = id;
        }
        clusters.push(Cluster {
            members,
            children: Some((a, b)),
        });
        active.remove(y);
        active[x] = id;
    }
    let root = active[0];

    // Decide which hierarchy nodes are genuine.
    let mut keep = vec![true; clusters.len()];
    for parent in 0..clusters.len() {
        let Some((a, b)) = clusters[parent].children else {
            continue;
        };
        for (node, sibling) in [(a, b), (b, a)] {
            let Some((p, q)) = clusters[node].children else {
                continue;
            };
            let (mut support, mut total) = (0u64, 0u64);
            for &i in &clusters[p].members {
                for &j in &clusters[q].members {
                    for &k in &clusters[sibling].members {
                        total += 1;
                        if triples.is_cherry(i, j, k) {
                            support += 1;
                        }
                    }
                }
            }
            keep[node] = 2 * support > total;
        }
    }

    fn emit(clusters: &[Cluster], keep: &[bool], labels: &[String], id: usize, out: &mut Vec<Clade>) {
        match clusters[id].children {
            None => out.push(Clade::Leaf(labels[clusters[id].members[0]].clone())),
            Some((a, b)) => {
                if keep[id] {
                    let mut children = Vec::new();
                    emit(clusters, keep, labels, a, &mut children);
                    emit(clusters, keep, labels, b, &mut children);
                    out.push(Clade::inner(children));
                } else {
                    emit(clusters, keep, labels, a, out);
                    emit(clusters, keep, labels, b, out);
                }
            }
        }
    }
    let mut out = Vec::new();
    emit(&clusters, &keep, &triples.labels, root, &mut out);
    RootedTree::from_clade(&out[0])
}

/// 0 when the trees have the same labeled rooted topology, 1 otherwise.
pub fn tree_distance_01(a: &RootedTree, b: &RootedTree) -> u8 {
    u8::from(!a.is_isomorphic(b))
}

/// Number of leaf triples whose shape differs between the two trees.
pub fn tree_distance_tri(a: &RootedTree, b: &RootedTree) -> Result<u64> {
    let labels = a.leaf_labels();
    if labels != b.leaf_labels() {
        return Err(Error::LeafSetMismatch);
    }
    if labels.len() < 3 {
        return Ok(0);
    }
    let ta = decompose_with_labels(a, labels.clone())?;
    let tb = decompose_with_labels(b, labels)?;
    Ok(ta
        .iter_indices()
        .filter(|&(i, j, k)| ta.get(i, j, k) != tb.get(i, j, k))
        .count() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_newick;

    fn t(s: &str) -> RootedTree {
        parse_newick(s).unwrap()
    }

    fn cherry(a: &str, b: &str, out: &str) -> TripleKind {
        TripleKind::Cherry {
            pair: [a.into(), b.into()],
            outlier: out.into(),
        }
    }

    #[test]
    fn triple_shapes_of_small_trees() {
        let left = t("((U2,U3),U1);");
        assert_eq!(triple_shape(&left, "U1", "U2", "U3").unwrap().kind, cherry("U2", "U3", "U1"));
        let right = t("(U1,U2,U3);");
        assert_eq!(triple_shape(&right, "U1", "U2", "U3").unwrap().kind, TripleKind::Fan);
        let chain = t("(U1,(U2,(U3,U4)));");
        let chain_fan = t("(U1,(U2,U3,U4));");
        assert_eq!(triple_shape(&chain, "U2", "U3", "U4").unwrap().kind, cherry("U3", "U4", "U2"));
        assert_eq!(triple_shape(&chain_fan, "U2", "U3", "U4").unwrap().kind, TripleKind::Fan);
        assert!(triple_shape(&left, "U1", "U2", "U9").is_err());
        assert!(triple_shape(&left, "U1", "U1", "U2").is_err());
    }

    #[test]
    fn triple_shape_is_permutation_invariant() {
        let tree = t("((a,(b,c)),(d,e,f));");
        let labels = ["a", "b", "c", "d", "e", "f"];
        for x in labels {
            for y in labels {
                for z in labels {
                    if x == y || y == z || x == z {
                        continue;
                    }
                    let s1 = triple_shape(&tree, x, y, z).unwrap();
                    let s2 = triple_shape(&tree, z, x, y).unwrap();
                    let s3 = triple_shape(&tree, y, x, z).unwrap();
                    assert_eq!(s1, s2);
                    assert_eq!(s1, s3);
                }
            }
        }
    }

    #[test]
    fn decompose_two_cherries() {
        let set = decompose(&t("((U1,U2),(U3,U4));")).unwrap();
        let lines: Vec<String> = set.shapes().iter().map(|s| s.to_string()).collect();
        assert_eq!(
            lines,
            vec![
                "U1,U2|U3 CHERRY",
                "U1,U2|U4 CHERRY",
                "U3,U4|U1 CHERRY",
                "U3,U4|U2 CHERRY"
            ]
        );
    }

    #[test]
    fn decompose_fan_and_caterpillar() {
        let fan = decompose(&t("(a,b,c,d,e);")).unwrap();
        assert_eq!(fan.len(), 10);
        assert!(fan.shapes().iter().all(|s| s.kind == TripleKind::Fan));
        let cat = decompose(&t("((((U1,U2),U3),U4),U5);")).unwrap();
        assert_eq!(cat.len(), 10);
        let i = |l: &str| cat.index_of(l).unwrap();
        assert_eq!(cat.get(i("U3"), i("U4"), i("U5")), Some(Topology::Cherry { outlier: i("U5") }));
        assert_eq!(cat.get(i("U1"), i("U4"), i("U5")), Some(Topology::Cherry { outlier: i("U5") }));
        assert_eq!(cat.get(i("U1"), i("U2"), i("U3")), Some(Topology::Cherry { outlier: i("U3") }));
        assert!(decompose(&t("(a,b);")).is_err());
    }

    #[test]
    fn reconstruct_round_trips() {
        for s in [
            "((U1,U2),(U3,U4));",
            "(a,b,c,d,e);",
            "((x,(y,z)),o);",
            "(U1,(U2,(U3,U4)));",
            "((1,2,3),(4,5),(6,(7,8,9)),10);",
            "(((a,b),(c,d)),((e,f),(g,h)),(i,j,k));",
        ] {
            let tree = t(s);
            let back = reconstruct(&decompose(&tree).unwrap()).unwrap();
            assert!(back.is_isomorphic(&tree), "{s} -> {}", back.canonical());
        }
    }

    #[test]
    fn reconstruct_rejects_incomplete() {
        let mut set = TripleSet::new(vec!["a".into(), "b".into(), "c".into(), "d".into()]);
        set.set(0, 1, 2, Topology::Fan);
        assert!(matches!(reconstruct(&set), Err(Error::IncompleteTriples(_))));
    }

    #[test]
    fn reconstruct_majority_on_noise() {
        // ((a,b),(c,d),e) with one corrupted triple still resolves.
        let tree = t("((a,b),(c,d),e);");
        let mut set = decompose(&tree).unwrap();
        let i = |l: &str| set.index_of(l).unwrap();
        let (a, c, e) = (i("a"), i("c"), i("e"));
        set.set(a, c, e, Topology::Cherry { outlier: e });
        let back = reconstruct(&set).unwrap();
        assert!(back.is_isomorphic(&tree), "{}", back.canonical());
    }

    #[test]
    fn distances() {
        let a = t("((1,2),(3,4));");
        let b = t("(1,2,(3,4));");
        assert_eq!(tree_distance_01(&a, &a), 0);
        assert_eq!(tree_distance_01(&a, &t("((4,3),(2,1));")), 0);
        assert_eq!(tree_distance_01(&a, &b), 1);
        assert_eq!(tree_distance_tri(&a, &b).unwrap(), 2);
        assert_eq!(tree_distance_tri(&b, &a).unwrap(), 2);
        let bin = t("(((1,2),3),(4,(5,6)));");
        let fan = RootedTree::fan(&["1", "2", "3", "4", "5", "6"]).unwrap();
        let non_fan = decompose(&bin)
            .unwrap()
            .shapes()
            .iter()
            .filter(|s| s.kind != TripleKind::Fan)
            .count() as u64;
        assert_eq!(tree_distance_tri(&bin, &fan).unwrap(), non_fan);
        assert!(tree_distance_tri(&a, &t("((1,2),(3,5));")).is_err());
    }
}

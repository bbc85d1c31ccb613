//! Unrooted trees, used by the supertree search.

use super::{Clade, RootedTree};
use crate::error::{Error, Result};

/// Unrooted tree stored as an adjacency list. Nodes `0..labels.len()` are the
/// leaves, in label order; the remaining nodes are internal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnrootedTree {
    labels: Vec<String>,
    adj: Vec<Vec<usize>>,
}

impl UnrootedTree {
    pub fn from_parts(labels: Vec<String>, adj: Vec<Vec<usize>>) -> Result<Self> {
        let tree = UnrootedTree { labels, adj };
        let n = tree.labels.len();
        for (id, nbrs) in tree.adj.iter().enumerate() {
            if id < n && n > 1 && nbrs.len() != 1 {
                return Err(Error::InvalidTree(format!("leaf {id} must have degree 1")));
            }
            if id >= n && nbrs.len() < 2 {
                return Err(Error::InvalidTree(format!("internal node {id} has degree < 2")));
            }
            for &x in nbrs {
                if x >= tree.adj.len() || !tree.adj[x].contains(&id) {
                    return Err(Error::InvalidTree(format!("asymmetric edge {id}-{x}")));
                }
            }
        }
        Ok(tree)
    }

    /// Unroots a rooted tree. A root of degree two is suppressed.
    pub fn from_rooted(tree: &RootedTree) -> Self {
        let leaves = tree.leaves();
        let labels: Vec<String> = leaves
            .iter()
            .map(|&id| tree.label(id).unwrap().to_string())
            .collect();
        let mut map = vec![usize::MAX; tree.node_count()];
        for (i, &id) in leaves.iter().enumerate() {
            map[id] = i;
        }
        let mut next = leaves.len();
        let skip_root = tree.children(tree.root()).len() == 2;
        for id in tree.preorder() {
            if !tree.is_leaf(id) && !(skip_root && id == tree.root()) {
                map[id] = next;
                next += 1;
            }
        }
        let mut adj = vec![Vec::new(); next];
        let mut link = |a: usize, b: usize| {
            adj[a].push(b);
            adj[b].push(a);
        };
        for id in tree.preorder() {
            if let Some(p) = tree.parent(id) {
                if !(skip_root && p == tree.root()) {
                    link(map[p], map[id]);
                }
            }
        }
        if skip_root {
            let ch = tree.children(tree.root());
            link(map[ch[0]], map[ch[1]]);
        }
        UnrootedTree { labels, adj }
    }

    /// Attaches a new leaf `outgroup` to the root, then unroots.
    pub fn with_outgroup(tree: &RootedTree, outgroup: &str) -> Result<Self> {
        if tree.leaf(outgroup).is_ok() {
            return Err(Error::InvalidParameter(format!(
                "outgroup `{outgroup}` already present"
            )));
        }
        let clade = Clade::inner(vec![tree.to_clade(), Clade::leaf(outgroup)]);
        // The extra root level has degree two and disappears on unrooting.
        let rooted = RootedTree::from_clade(&clade)?;
        Ok(Self::from_rooted(&rooted))
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn leaf_count(&self) -> usize {
        self.labels.len()
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, id: usize) -> &[usize] {
        &self.adj[id]
    }

    pub fn is_leaf(&self, id: usize) -> bool {
        id < self.labels.len()
    }

    pub fn leaf_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Edges joining two internal nodes, as `(u, v)` with `u < v`.
    pub fn internal_edges(&self) -> Vec<(usize, usize)> {
        let n = self.labels.len();
        let mut out = Vec::new();
        for u in n..self.adj.len() {
            for &v in &self.adj[u] {
                if v > u {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Leaves on the `v` side of edge `(u, v)`.
    pub fn side(&self, u: usize, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![(v, u)];
        while let Some((node, from)) = stack.pop() {
            if self.is_leaf(node) {
                out.push(node);
            }
            for &x in &self.adj[node] {
                if x != from {
                    stack.push((x, node));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Canonical split set; two trees with equal split sets and labels are
    /// the same unrooted topology.
    pub fn splits(&self) -> Vec<Vec<usize>> {
        let n = self.labels.len();
        let mut splits: Vec<Vec<usize>> = self
            .internal_edges()
            .into_iter()
            .map(|(u, v)| {
                let s = self.side(u, v);
                if s.contains(&0) {
                    (0..n).filter(|x| !s.contains(x)).collect()
                } else {
                    s
                }
            })
            .collect();
        splits.sort();
        splits
    }

    pub(crate) fn adj_mut(&mut self) -> &mut Vec<Vec<usize>> {
        &mut self.adj
    }

    pub(crate) fn adj(&self) -> &[Vec<usize>] {
        &self.adj
    }
}

/// Roots an unrooted tree on the edge leading to `outgroup`, then removes the
/// outgroup. Nodes left with a single child are suppressed.
pub fn root_with_outgroup(unrooted: &UnrootedTree, outgroup: &str) -> Result<RootedTree> {
    let o = unrooted.leaf_index(outgroup)?;
    if unrooted.node_count() < 2 {
        return Err(Error::TooFewLeaves { needed: 2, got: 1 });
    }
    fn build(t: &UnrootedTree, node: usize, from: usize) -> Clade {
        if t.is_leaf(node) {
            return Clade::Leaf(t.labels[node].clone());
        }
        let mut children: Vec<Clade> = t.adj[node]
            .iter()
            .filter(|&&x| x != from)
            .map(|&x| build(t, x, node))
            .collect();
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            Clade::inner(children)
        }
    }
    let anchor = unrooted.adj[o][0];
    RootedTree::from_clade(&build(unrooted, anchor, o))
}

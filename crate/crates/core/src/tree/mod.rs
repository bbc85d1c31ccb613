//! Rooted phylogenetic trees over labeled leaves.
//!
//! A [`RootedTree`] is an arena of nodes. Internal nodes always have at least
//! two children and leaves carry unique, nonempty labels. Two trees are
//! considered equal when they have the same rooted topology over the same
//! labels; child order and internal node identities are irrelevant.

mod json;
mod newick;
mod triples;
mod unrooted;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};

pub use json::TreeJson;
pub use newick::{parse_newick, write_newick};
pub use triples::{
    decompose, reconstruct, tree_distance_01, tree_distance_tri, triple_shape, Topology,
    TripleKind, TripleSet, TripleShape,
};
pub use unrooted::{root_with_outgroup, UnrootedTree};

pub type NodeId = usize;

/// Recursive description of a tree, used to build and rewrite trees.
#[derive(Clone, Debug, PartialEq)]
pub enum Clade {
    Leaf(String),
    Inner {
        children: Vec<Clade>,
        annotation: Option<f64>,
    },
}

impl Clade {
    pub fn leaf(label: impl Into<String>) -> Self {
        Clade::Leaf(label.into())
    }

    pub fn inner(children: Vec<Clade>) -> Self {
        Clade::Inner {
            children,
            annotation: None,
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    label: Option<String>,
    annotation: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RootedTree {
    nodes: Vec<Node>,
    root: NodeId,
}

impl RootedTree {
    /// Builds a tree from a clade, checking all structural invariants.
    pub fn from_clade(clade: &Clade) -> Result<Self> {
        let mut nodes = Vec::new();
        let root = push_clade(&mut nodes, clade, None);
        let tree = RootedTree { nodes, root };
        tree.validate()?;
        Ok(tree)
    }

    pub fn to_clade(&self) -> Clade {
        self.clade_at(self.root)
    }

    pub fn clade_at(&self, id: NodeId) -> Clade {
        let node = &self.nodes[id];
        if node.children.is_empty() {
            Clade::Leaf(node.label.clone().unwrap_or_default())
        } else {
            Clade::Inner {
                children: node.children.iter().map(|&c| self.clade_at(c)).collect(),
                annotation: node.annotation,
            }
        }
    }

    /// The trivial tree where every leaf hangs from the root.
    pub fn fan<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        if labels.len() == 1 {
            return Self::from_clade(&Clade::leaf(labels[0].as_ref()));
        }
        Self::from_clade(&Clade::inner(
            labels.iter().map(|l| Clade::leaf(l.as_ref())).collect(),
        ))
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (id, node) in self.nodes.iter().enumerate() {
            if node.children.is_empty() {
                let label = node.label.as_deref().unwrap_or("");
                if label.is_empty() {
                    return Err(Error::InvalidTree(format!("leaf {id} has no label")));
                }
                if !seen.insert(label) {
                    return Err(Error::InvalidTree(format!("duplicate leaf label `{label}`")));
                }
            } else if node.children.len() < 2 {
                return Err(Error::InvalidTree(format!(
                    "internal node {id} has a single child"
                )));
            }
        }
        Ok(())
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id].children.is_empty()
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    pub fn label(&self, id: NodeId) -> Option<&str> {
        self.nodes[id].label.as_deref()
    }

    pub fn annotation(&self, id: NodeId) -> Option<f64> {
        self.nodes[id].annotation
    }

    /// Sets the display annotation of an internal node. Topology is untouched.
    pub fn set_annotation(&mut self, id: NodeId, value: Option<f64>) {
        self.nodes[id].annotation = value;
    }

    /// Node ids in preorder.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        out
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.preorder()
            .into_iter()
            .filter(|&id| self.is_leaf(id))
            .collect()
    }

    pub fn internal_nodes(&self) -> Vec<NodeId> {
        self.preorder()
            .into_iter()
            .filter(|&id| !self.is_leaf(id))
            .collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.children.is_empty()).count()
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.len() - self.leaf_count()
    }

    /// Leaf labels in natural order (`U2` before `U10`).
    pub fn leaf_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self
            .nodes
            .iter()
            .filter(|n| n.children.is_empty())
            .filter_map(|n| n.label.clone())
            .collect();
        labels.sort_by(|a, b| natural_cmp(a, b));
        labels
    }

    pub fn leaf(&self, label: &str) -> Result<NodeId> {
        self.nodes
            .iter()
            .position(|n| n.children.is_empty() && n.label.as_deref() == Some(label))
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn leaf_map(&self) -> BTreeMap<String, NodeId> {
        self.leaves()
            .into_iter()
            .map(|id| (self.nodes[id].label.clone().unwrap_or_default(), id))
            .collect()
    }

    pub fn depth(&self, mut id: NodeId) -> usize {
        let mut depth = 0;
        while let Some(p) = self.nodes[id].parent {
            depth += 1;
            id = p;
        }
        depth
    }

    pub fn depths(&self) -> Vec<usize> {
        let mut depths = vec![0; self.nodes.len()];
        for id in self.preorder() {
            if let Some(p) = self.nodes[id].parent {
                depths[id] = depths[p] + 1;
            }
        }
        depths
    }

    /// Leaves in the subtree rooted at `id`.
    pub fn leaves_under(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            if self.is_leaf(n) {
                out.push(n);
            } else {
                stack.extend(self.nodes[n].children.iter().rev());
            }
        }
        out
    }

    pub fn lca(&self, a: NodeId, b: NodeId) -> NodeId {
        let (mut a, mut b) = (a, b);
        let (mut da, mut db) = (self.depth(a), self.depth(b));
        while da > db {
            a = self.nodes[a].parent.unwrap();
            da -= 1;
        }
        while db > da {
            b = self.nodes[b].parent.unwrap();
            db -= 1;
        }
        while a != b {
            a = self.nodes[a].parent.unwrap();
            b = self.nodes[b].parent.unwrap();
        }
        a
    }

    /// Most recent common ancestor of a set of leaf labels.
    pub fn mrca<S: AsRef<str>>(&self, labels: &[S]) -> Result<NodeId> {
        let mut iter = labels.iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::InvalidParameter("empty label set".into()))?;
        let mut node = self.leaf(first.as_ref())?;
        for label in iter {
            node = self.lca(node, self.leaf(label.as_ref())?);
        }
        Ok(node)
    }

    /// Dot-separated child indices from the root; the root itself is `""`.
    pub fn node_path(&self, mut id: NodeId) -> String {
        let mut steps = Vec::new();
        while let Some(p) = self.nodes[id].parent {
            let pos = self.nodes[p].children.iter().position(|&c| c == id).unwrap();
            steps.push(pos.to_string());
            id = p;
        }
        steps.reverse();
        steps.join(".")
    }

    pub fn node_at_path(&self, path: &str) -> Result<NodeId> {
        let mut id = self.root;
        for step in path.split('.').filter(|s| !s.is_empty()) {
            let idx: usize = step
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad node path `{path}`")))?;
            id = *self.nodes[id]
                .children
                .get(idx)
                .ok_or_else(|| Error::InvalidParameter(format!("node path `{path}` out of range")))?;
        }
        Ok(id)
    }

    pub fn is_binary(&self) -> bool {
        self.nodes
            .iter()
            .all(|n| n.children.is_empty() || n.children.len() == 2)
    }

    /// Canonical string of the topology: children sorted recursively.
    pub fn canonical(&self) -> String {
        self.canonical_at(self.root)
    }

    fn canonical_at(&self, id: NodeId) -> String {
        let node = &self.nodes[id];
        if node.children.is_empty() {
            return newick::quote_label(node.label.as_deref().unwrap_or(""));
        }
        let mut parts: Vec<String> = node.children.iter().map(|&c| self.canonical_at(c)).collect();
        parts.sort();
        format!("({})", parts.join(","))
    }

    pub fn is_isomorphic(&self, other: &RootedTree) -> bool {
        self.canonical() == other.canonical()
    }

    /// Removes internal node `child`, re-attaching its children to its parent.
    pub fn collapse_edge(&self, child: NodeId) -> Result<RootedTree> {
        if child >= self.nodes.len() {
            return Err(Error::InvalidNode(child, "no such node".into()));
        }
        if self.is_leaf(child) {
            return Err(Error::InvalidNode(child, "cannot collapse a leaf".into()));
        }
        if child == self.root {
            return Err(Error::InvalidNode(child, "cannot collapse the root".into()));
        }
        Ok(self.rebuild_without(&[child]))
    }

    /// Rebuilds the arena skipping the given internal non-root nodes.
    pub(crate) fn rebuild_without(&self, removed: &[NodeId]) -> RootedTree {
        fn emit(tree: &RootedTree, id: NodeId, removed: &[NodeId], out: &mut Vec<Clade>) {
            let node = &tree.nodes[id];
            if node.children.is_empty() {
                out.push(Clade::Leaf(node.label.clone().unwrap_or_default()));
            } else if removed.contains(&id) {
                for &c in &node.children {
                    emit(tree, c, removed, out);
                }
            } else {
                let mut children = Vec::new();
                for &c in &node.children {
                    emit(tree, c, removed, &mut children);
                }
                out.push(Clade::Inner {
                    children,
                    annotation: node.annotation,
                });
            }
        }
        let mut out = Vec::new();
        emit(self, self.root, removed, &mut out);
        let mut nodes = Vec::new();
        let root = push_clade(&mut nodes, &out[0], None);
        RootedTree { nodes, root }
    }

    /// Copy of the tree with leaf labels renamed through `f`.
    pub fn relabel(&self, f: impl Fn(&str) -> String) -> Result<RootedTree> {
        let mut tree = self.clone();
        for node in tree.nodes.iter_mut() {
            if let Some(l) = node.label.as_mut() {
                *l = f(l);
            }
        }
        tree.validate()?;
        Ok(tree)
    }
}

fn push_clade(nodes: &mut Vec<Node>, clade: &Clade, parent: Option<NodeId>) -> NodeId {
    let id = nodes.len();
    match clade {
        Clade::Leaf(label) => {
            nodes.push(Node {
                parent,
                children: Vec::new(),
                label: Some(label.clone()),
                annotation: None,
            });
        }
        Clade::Inner {
            children,
            annotation,
        } => {
            nodes.push(Node {
                parent,
                children: Vec::new(),
                label: None,
                annotation: *annotation,
            });
            for c in children {
                let cid = push_clade(nodes, c, Some(id));
                nodes[id].children.push(cid);
            }
        }
    }
    id
}

/// Orders strings so that embedded integers compare numerically.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut ia, mut ib) = (a.char_indices().peekable(), b.char_indices().peekable());
    loop {
        match (ia.peek().copied(), ib.peek().copied()) {
            (None, None) => return a.cmp(b),
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some((sa, ca)), Some((sb, cb))) => {
                if ca.is_ascii_digit() && cb.is_ascii_digit() {
                    let ea = digits_end(a, sa);
                    let eb = digits_end(b, sb);
                    let (na, nb) = (a[sa..ea].trim_start_matches('0'), b[sb..eb].trim_start_matches('0'));
                    let ord = na.len().cmp(&nb.len()).then_with(|| na.cmp(nb));
                    if ord != Ordering::Equal {
                        return ord;
                    }
                    while ia.peek().is_some_and(|&(i, _)| i < ea) {
                        ia.next();
                    }
                    while ib.peek().is_some_and(|&(i, _)| i < eb) {
                        ib.next();
                    }
                } else {
                    if ca != cb {
                        return ca.cmp(&cb);
                    }
                    ia.next();
                    ib.next();
                }
            }
        }
    }
}

fn digits_end(s: &str, start: usize) -> usize {
    s[start..]
        .find(|c: char| !c.is_ascii_digit())
        .map_or(s.len(), |off| start + off)
}

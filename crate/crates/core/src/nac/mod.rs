//! Nested Archimedean copulas: generator families, parameter maps, nesting
//! checks and sampling.

mod families;
mod frailty;
mod quad;

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dependence::Dataset;
use crate::error::{Error, Result};
use crate::seed;
use crate::tree::{parse_newick, write_newick, NodeId, RootedTree};

pub use families::{tau_to_theta, theta_to_tau, Family};

/// One generator: family with both its parameter and Kendall's tau.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorSpec {
    family: Family,
    theta: f64,
    tau: f64,
}

impl GeneratorSpec {
    pub fn from_tau(family: Family, tau: f64) -> Result<Self> {
        let theta = tau_to_theta(family, tau)?;
        Ok(GeneratorSpec { family, theta, tau })
    }

    pub fn from_theta(family: Family, theta: f64) -> Result<Self> {
        let tau = theta_to_tau(family, theta)?;
        Ok(GeneratorSpec { family, theta, tau })
    }

    pub fn independence() -> Self {
        GeneratorSpec {
            family: Family::Independence,
            theta: 0.0,
            tau: 0.0,
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn psi(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("ψ needs t >= 0, got {t}")));
        }
        Ok(families::psi_raw(self.family, self.theta, t))
    }

    pub fn psi_inv(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= 1.0) {
            return Err(Error::InvalidParameter(format!("ψ⁻¹ needs u in (0, 1], got {u}")));
        }
        Ok(families::psi_inv_raw(self.family, self.theta, u))
    }
}

/// A tree with one generator per internal node.
#[derive(Clone, Debug)]
pub struct NacSpec {
    tree: RootedTree,
    generators: BTreeMap<NodeId, GeneratorSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NacSpecJson {
    pub newick: String,
    pub generators: Vec<GeneratorJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorJson {
    /// Dot-separated child indices from the root; empty for the root.
    pub node_path: String,
    pub family: Family,
    pub tau: f64,
}

impl NacSpec {
    pub fn new(tree: RootedTree, generators: BTreeMap<NodeId, GeneratorSpec>) -> Result<Self> {
        for id in tree.internal_nodes() {
            if !generators.contains_key(&id) {
                return Err(Error::InvalidNode(id, "internal node has no generator".into()));
            }
        }
        if let Some(&id) = generators.keys().find(|&&id| id >= tree.node_count() || tree.is_leaf(id)) {
            return Err(Error::InvalidNode(id, "generator attached to a leaf".into()));
        }
        Ok(NacSpec { tree, generators })
    }

    /// Same generator at every internal node.
    pub fn uniform(tree: RootedTree, g: GeneratorSpec) -> Result<Self> {
        let generators = tree.internal_nodes().into_iter().map(|id| (id, g)).collect();
        Self::new(tree, generators)
    }

    /// Builds a spec from Newick text and `(leaf set, family, tau)` entries;
    /// each entry's generator goes to the most recent common ancestor of its
    /// leaves.
    pub fn from_mrca<S: AsRef<str>>(newick: &str, entries: &[(&[S], Family, f64)]) -> Result<Self> {
        let tree = parse_newick(newick)?;
        let mut generators = BTreeMap::new();
        for (leaves, family, tau) in entries {
            let id = tree.mrca(leaves)?;
            generators.insert(id, GeneratorSpec::from_tau(*family, *tau)?);
        }
        Self::new(tree, generators)
    }

    pub fn tree(&self) -> &RootedTree {
        &self.tree
    }

    pub fn generator(&self, id: NodeId) -> Option<&GeneratorSpec> {
        self.generators.get(&id)
    }

    pub fn generators(&self) -> &BTreeMap<NodeId, GeneratorSpec> {
        &self.generators
    }

    pub fn from_json(json: &NacSpecJson) -> Result<Self> {
        let tree = parse_newick(&json.newick)?;
        let mut generators = BTreeMap::new();
        for g in &json.generators {
            let id = tree.node_at_path(&g.node_path)?;
            let spec = if g.family == Family::Independence {
                GeneratorSpec::independence()
            } else {
                GeneratorSpec::from_tau(g.family, g.tau)?
            };
            if generators.insert(id, spec).is_some() {
                return Err(Error::InvalidNode(id, format!("duplicate generator at `{}`", g.node_path)));
            }
        }
        Self::new(tree, generators)
    }

    pub fn to_json(&self) -> NacSpecJson {
        NacSpecJson {
            newick: write_newick(&self.tree, false),
            generators: self
                .tree
                .preorder()
                .into_iter()
                .filter_map(|id| {
                    self.generators.get(&id).map(|g| GeneratorJson {
                        node_path: self.tree.node_path(id),
                        family: g.family,
                        tau: g.tau,
                    })
                })
                .collect(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_json(&serde_json::from_str(text)?)
    }

    /// Smallest `τ(child) - τ(parent)` over parent-child internal pairs;
    /// `None` when there is no such pair.
    pub fn min_tau_gap(&self) -> Option<f64> {
        self.internal_edges()
            .map(|(p, c)| self.generators[&c].tau - self.generators[&p].tau)
            .reduce(f64::min)
    }

    fn internal_edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.tree.internal_nodes().into_iter().filter_map(|c| {
            let p = self.tree.parent(c)?;
            Some((p, c))
        })
    }
}

/// Outcome of [`check_nesting`].
#[derive(Clone, Debug, PartialEq)]
pub enum NestingReport {
    Ok,
    Warn(Vec<String>),
    Fail(Vec<String>),
}

impl fmt::Display for NestingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NestingReport::Ok => f.write_str("OK"),
            NestingReport::Warn(v) => write!(f, "WARN: {}", v.join("; ")),
            NestingReport::Fail(v) => write!(f, "FAIL: {}", v.join("; ")),
        }
    }
}

/// Checks the sufficient nesting condition `θ(parent) <= θ(child)` for
/// same-family pairs (failure), and flags decreasing τ or mixed families
/// (warnings).
pub fn check_nesting(spec: &NacSpec) -> NestingReport {
    let mut fails = Vec::new();
    let mut warns = Vec::new();
    for (p, c) in spec.internal_edges() {
        let (gp, gc) = (&spec.generators[&p], &spec.generators[&c]);
        let where_ = format!("`{}` -> `{}`", spec.tree.node_path(p), spec.tree.node_path(c));
        if gp.family == gc.family {
            if gp.family != Family::Independence && gp.theta > gc.theta {
                fails.push(format!("θ decreases along {where_} ({} > {})", gp.theta, gc.theta));
            }
        } else if gp.family != Family::Independence {
            warns.push(format!("mixed families {} and {} along {where_}", gp.family, gc.family));
        }
        if gc.tau < gp.tau && !(gp.family == gc.family && gp.theta > gc.theta) {
            warns.push(format!("τ decreases along {where_}"));
        }
    }
    if !fails.is_empty() {
        NestingReport::Fail(fails)
    } else if !warns.is_empty() {
        NestingReport::Warn(warns)
    } else {
        NestingReport::Ok
    }
}

/// Rows per independently seeded block.
const BLOCK: usize = 256;

fn sample_row<R: Rng>(spec: &NacSpec, order: &[NodeId], col: &[usize], out: &mut [f64], rng: &mut R) {
    let tree = &spec.tree;
    let mut frailty = vec![0.0; tree.node_count()];
    for &id in order {
        let g = &spec.generators[&id];
        frailty[id] = match tree.parent(id) {
            Some(p) if spec.generators[&p].family != Family::Independence => {
                let gp = &spec.generators[&p];
                frailty::inner(g.family, gp.theta, g.theta, frailty[p], rng)
            }
            _ => frailty::outer(g.family, g.theta, rng),
        };
        for &c in tree.children(id) {
            if tree.is_leaf(c) {
                let e: f64 = Exp1.sample(rng);
                let u = families::psi_raw(g.family, g.theta, e / frailty[id]);
                out[col[c]] = u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
            }
        }
    }
}

/// Draws `n` observations from `spec`. Columns are the leaves in natural
/// label order. Parent-child pairs must share a family unless the parent is
/// the independence generator.
pub fn sample(spec: &NacSpec, n: usize, seed: u64) -> Result<Dataset> {
    if let NestingReport::Fail(v) = check_nesting(spec) {
        return Err(Error::Unsupported(format!("nesting condition violated: {}", v.join("; "))));
    }
    for (p, c) in spec.internal_edges() {
        let (fp, fc) = (spec.generators[&p].family, spec.generators[&c].family);
        if fp != fc && fp != Family::Independence {
            return Err(Error::Unsupported(format!("sampling {fc} nested in {fp}")));
        }
    }
    let tree = &spec.tree;
    if tree.leaf_count() < 2 {
        return Err(Error::TooFewLeaves { needed: 2, got: tree.leaf_count() });
    }
    let names = tree.leaf_labels();
    let map = tree.leaf_map();
    let mut col = vec![usize::MAX; tree.node_count()];
    for (j, name) in names.iter().enumerate() {
        col[map[name]] = j;
    }
    let order: Vec<NodeId> = tree.preorder().into_iter().filter(|&id| !tree.is_leaf(id)).collect();
    let d = names.len();
    let blocks: Vec<Vec<f64>> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let rows = BLOCK.min(n - b * BLOCK);
            let mut rng = seed::rng_for(seed, &[b as u64]);
            let mut buf = vec![0.0; rows * d];
            for r in 0..rows {
                sample_row(spec, &order, &col, &mut buf[r * d..(r + 1) * d], &mut rng);
            }
            buf
        })
        .collect();
    let mut columns = vec![Vec::with_capacity(n); d];
    for buf in &blocks {
        for row in buf.chunks(d) {
            for (j, &v) in row.iter().enumerate() {
                columns[j].push(v);
            }
        }
    }
    Dataset::from_columns(names, columns)
}

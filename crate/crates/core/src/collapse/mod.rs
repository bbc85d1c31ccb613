//! Step two: collapsing edges of a binary tree that do not separate distinct
//! dependence levels.
//!
//! Two rules are provided. `kagg` merges a node into its parent when their
//! average Kendall's tau values are close. `kb` tests every trivariate piece
//! that a collapse would turn into a fan and collapses when the average
//! bootstrap p-value is large.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::builders::{build_binary, BinaryMethod, SearchConfig};
use crate::dependence::{integrate_squared_combination, kendall_scores, kendall_tau, Dataset, PseudoObservations};
use crate::error::{Error, Result};
use crate::seed;
use crate::tree::{NodeId, RootedTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CollapseRule {
    Kagg,
    Kb,
}

impl CollapseRule {
    pub fn name(self) -> &'static str {
        match self {
            CollapseRule::Kagg => "kagg",
            CollapseRule::Kb => "kb",
        }
    }
}

impl fmt::Display for CollapseRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CollapseRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [CollapseRule::Kagg, CollapseRule::Kb]
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown collapse rule `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollapseConfig {
    pub rule: CollapseRule,
    /// Threshold of the `kagg` rule.
    pub tau_c: f64,
    /// Level of the `kb` rule.
    pub alpha: f64,
    pub bootstrap_b: usize,
    pub seed: u64,
}

impl Default for CollapseConfig {
    fn default() -> Self {
        CollapseConfig {
            rule: CollapseRule::Kagg,
            tau_c: 0.075,
            alpha: 0.05,
            bootstrap_b: 200,
            seed: 0,
        }
    }
}

impl CollapseConfig {
    pub fn kagg(tau_c: f64) -> Self {
        CollapseConfig {
            rule: CollapseRule::Kagg,
            tau_c,
            ..Default::default()
        }
    }

    pub fn kb(alpha: f64, bootstrap_b: usize, seed: u64) -> Self {
        CollapseConfig {
            rule: CollapseRule::Kb,
            alpha,
            bootstrap_b,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_c >= 0.0) || !self.tau_c.is_finite() {
            return Err(Error::InvalidParameter(format!("τ_c = {} must be >= 0", self.tau_c)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("α = {} must lie in [0, 1]", self.alpha)));
        }
        if self.bootstrap_b == 0 {
            return Err(Error::InvalidParameter("bootstrap size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Average Kendall's tau of the leaf pairs joined at `node`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeSummary {
    pub node: NodeId,
    pub mean_tau: f64,
}

/// Column of `u` for each leaf of `tree`, indexed by node id.
fn leaf_columns(tree: &RootedTree, u: &PseudoObservations) -> Result<Vec<usize>> {
    let mut cols = vec![usize::MAX; tree.node_count()];
    for id in tree.leaves() {
        cols[id] = u.index_of(tree.label(id).unwrap_or_default())?;
    }
    Ok(cols)
}

/// Pairwise Kendall's tau between all columns.
pub(crate) fn tau_matrix(u: &PseudoObservations) -> Result<Vec<Vec<f64>>> {
    let d = u.dim();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
    let taus: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| kendall_tau(u.column(i), u.column(j)))
        .collect::<Result<_>>()?;
    let mut m = vec![vec![1.0; d]; d];
    for (&(i, j), &t) in pairs.iter().zip(&taus) {
        m[i][j] = t;
        m[j][i] = t;
    }
    Ok(m)
}

fn mean_tau_at(tree: &RootedTree, node: NodeId, cols: &[usize], tau: &[Vec<f64>]) -> f64 {
    let groups: Vec<Vec<usize>> = tree
        .children(node)
        .iter()
        .map(|&c| tree.leaves_under(c).into_iter().map(|l| cols[l]).collect())
        .collect();
    let mut sum = 0.0;
    let mut count = 0usize;
    for (x, gx) in groups.iter().enumerate() {
        for gy in &groups[x + 1..] {
            for &a in gx {
                for &b in gy {
                    sum += tau[a][b];
                    count += 1;
                }
            }
        }
    }
    sum / count as f64
}

pub fn node_tau_summary(tree: &RootedTree, node: NodeId, u: &PseudoObservations) -> Result<NodeSummary> {
    if node >= tree.node_count() {
        return Err(Error::InvalidNode(node, "no such node".into()));
    }
    if tree.is_leaf(node) {
        return Err(Error::InvalidNode(node, "summaries are defined for internal nodes".into()));
    }
    let cols = leaf_columns(tree, u)?;
    let mut tau = vec![vec![0.0; u.dim()]; u.dim()];
    let leaves = tree.leaves_under(node);
    for (x, &a) in leaves.iter().enumerate() {
        for &b in &leaves[x + 1..] {
            let t = kendall_tau(u.column(cols[a]), u.column(cols[b]))?;
            tau[cols[a]][cols[b]] = t;
            tau[cols[b]][cols[a]] = t;
        }
    }
    Ok(NodeSummary {
        node,
        mean_tau: mean_tau_at(tree, node, &cols, &tau),
    })
}

/// Copy of `tree` whose internal nodes carry their average Kendall's tau,
/// rounded to two decimals.
pub fn annotate_tau(tree: &RootedTree, u: &PseudoObservations) -> Result<RootedTree> {
    let cols = leaf_columns(tree, u)?;
    let tau = tau_matrix(u)?;
    let mut out = tree.clone();
    for id in tree.internal_nodes() {
        let m = mean_tau_at(tree, id, &cols, &tau);
        out.set_annotation(id, Some((m * 100.0).round() / 100.0));
    }
    Ok(out)
}

/// Greedy `kagg` collapse: repeatedly merges the parent-child pair with the
/// smallest difference of average tau while that difference is below
/// `tau_c`, recomputing the averages after each merge.
pub fn collapse_kagg(tree: &RootedTree, u: &PseudoObservations, tau_c: f64) -> Result<RootedTree> {
    let tau = tau_matrix(u)?;
    collapse_kagg_with(tree, u, tau_c, &tau)
}

pub(crate) fn collapse_kagg_with(tree: &RootedTree, u: &PseudoObservations, tau_c: f64, tau: &[Vec<f64>]) -> Result<RootedTree> {
    let mut tree = tree.clone();
    loop {
        let cols = leaf_columns(&tree, u)?;
        let mut means = vec![0.0; tree.node_count()];
        for id in tree.internal_nodes() {
            means[id] = mean_tau_at(&tree, id, &cols, tau);
        }
        let best = tree
            .internal_nodes()
            .into_iter()
            .filter_map(|c| tree.parent(c).map(|p| ((means[c] - means[p]).abs(), c)))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        match best {
            Some((diff, c)) if diff < tau_c => tree = tree.collapse_edge(c)?,
            _ => return Ok(tree),
        }
    }
}

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

fn sorted_scores(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let mut w = kendall_scores(x, y)?;
    w.sort_by(f64::total_cmp);
    Ok(w)
}

/// Index of the Kendall distribution left out by the closest pair, given
/// the three pairwise distances in the order (01, 02, 12).
fn third_of_closest(d: [f64; 3]) -> usize {
    let mut best = 0;
    for m in 1..3 {
        if d[m] < d[best] {
            best = m;
        }
    }
    [2, 1, 0][best]
}

/// Bootstrap p-value of the fan hypothesis on the sorted columns `cols`.
fn triple_p_value(u: &PseudoObservations, cols: [usize; 3], b: usize, seed: u64) -> Result<f64> {
    let n = u.n();
    let x = [u.column(cols[0]), u.column(cols[1]), u.column(cols[2])];
    // Kendall distributions of pairs (01, 02, 12).
    let k: Vec<Vec<f64>> = PAIRS
        .iter()
        .map(|&(a, c)| sorted_scores(x[a], x[c]))
        .collect::<Result<_>>()?;
    let dist = |p: usize, q: usize| integrate_squared_combination(&[(&k[p], 1.0), (&k[q], -1.0)]);
    let r = third_of_closest([dist(0, 1), dist(0, 2), dist(1, 2)]);
    let (p, q) = PAIRS[2 - r];
    let t = integrate_squared_combination(&[(&k[p], 0.5), (&k[q], 0.5), (&k[r], -1.0)]);
    let seed = seed::derive(seed, &[cols[0] as u64, cols[1] as u64, cols[2] as u64]);
    let exceed: usize = (0..b)
        .into_par_iter()
        .map(|rep| -> Result<usize> {
            let mut rng = seed::rng_for(seed, &[rep as u64]);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let xs: Vec<Vec<f64>> = x.iter().map(|c| idx.iter().map(|&i| c[i]).collect()).collect();
            let ks: Vec<Vec<f64>> = PAIRS
                .iter()
                .map(|&(a, c)| sorted_scores(&xs[a], &xs[c]))
                .collect::<Result<_>>()?;
            // Each resampled distribution is centered at its sample estimate.
            let centered = |m: usize, c: f64| [(ks[m].as_slice(), c), (k[m].as_slice(), -c)];
            let gdist = |p: usize, q: usize| {
                let [a, b] = centered(p, 1.0);
                let [c, d] = centered(q, -1.0);
                integrate_squared_combination(&[a, b, c, d])
            };
            let r = third_of_closest([gdist(0, 1), gdist(0, 2), gdist(1, 2)]);
            let (p, q) = PAIRS[2 - r];
            let [a, b] = centered(p, 0.5);
            let [c, d] = centered(q, 0.5);
            let [e, f] = centered(r, -1.0);
            let t_star = integrate_squared_combination(&[a, b, c, d, e, f]);
            Ok(usize::from(t_star >= t))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok((1 + exceed) as f64 / (b + 1) as f64)
}

/// Bootstrap test of the 3-fan hypothesis for columns `i`, `j`, `k`.
///
/// The statistic is the squared L2 distance between the average of the two
/// closest empirical Kendall distributions and the third. Rows are
/// resampled jointly; each resampled distribution is centered at the
/// original estimate before the statistic is recomputed, so the bootstrap
/// mimics the fan hypothesis. Small values reject the fan.
pub fn su_triple_test(u: &PseudoObservations, i: &str, j: &str, k: &str, b: usize, seed: u64) -> Result<f64> {
    if b == 0 {
        return Err(Error::InvalidParameter("bootstrap size must be at least 1".into()));
    }
    let mut cols = [u.index_of(i)?, u.index_of(j)?, u.index_of(k)?];
    cols.sort_unstable();
    if cols[0] == cols[1] || cols[1] == cols[2] {
        return Err(Error::InvalidParameter("triple labels must be distinct".into()));
    }
    triple_p_value(u, cols, b, seed)
}

/// Bootstrap p-values of column triples, computed once per triple.
pub(crate) struct TripleTests<'a> {
    u: &'a PseudoObservations,
    b: usize,
    seed: u64,
    cache: HashMap<[usize; 3], f64>,
}

impl<'a> TripleTests<'a> {
    pub(crate) fn new(u: &'a PseudoObservations, b: usize, seed: u64) -> Self {
        TripleTests {
            u,
            b,
            seed,
            cache: HashMap::new(),
        }
    }

    /// P-values for `triples`, each given as sorted column indices.
    pub(crate) fn p_values(&mut self, triples: &[[usize; 3]]) -> Result<Vec<f64>> {
        let mut missing: Vec<[usize; 3]> = triples.iter().filter(|t| !self.cache.contains_key(*t)).copied().collect();
        missing.sort_unstable();
        missing.dedup();
        let fresh: Vec<f64> = missing
            .par_iter()
            .map(|&t| triple_p_value(self.u, t, self.b, self.seed))
            .collect::<Result<_>>()?;
        self.cache.extend(missing.into_iter().zip(fresh));
        Ok(triples.iter().map(|t| self.cache[t]).collect())
    }
}

/// Triples whose shape turns from a cherry into a fan when `child` is merged
/// into its parent, as sorted column indices.
fn changing_triples(tree: &RootedTree, child: NodeId, cols: &[usize]) -> Vec<[usize; 3]> {
    let parent = tree.parent(child).expect("non-root node");
    let inside: Vec<Vec<usize>> = tree
        .children(child)
        .iter()
        .map(|&c| tree.leaves_under(c).into_iter().map(|l| cols[l]).collect())
        .collect();
    let outside: Vec<usize> = tree
        .children(parent)
        .iter()
        .filter(|&&c| c != child)
        .flat_map(|&c| tree.leaves_under(c))
        .map(|l| cols[l])
        .collect();
    let mut out = Vec::new();
    for (x, gx) in inside.iter().enumerate() {
        for gy in &inside[x + 1..] {
            for &a in gx {
                for &b in gy {
                    for &c in &outside {
                        let mut t = [a, b, c];
                        t.sort_unstable();
                        out.push(t);
                    }
                }
            }
        }
    }
    out
}

/// Bootstrap `kb` collapse. Candidate edges are visited from the deepest
/// child up; an edge is collapsed when the average p-value of the triples
/// it would turn into fans exceeds `alpha`. After each collapse the
/// candidates are re-derived.
pub fn collapse_kb(tree: &RootedTree, u: &PseudoObservations, alpha: f64, b: usize, seed: u64) -> Result<RootedTree> {
    if b == 0 {
        return Err(Error::InvalidParameter("bootstrap size must be at least 1".into()));
    }
    let mut tests = TripleTests::new(u, b, seed);
    collapse_kb_with(tree, u, alpha, &mut tests)
}

pub(crate) fn collapse_kb_with(tree: &RootedTree, u: &PseudoObservations, alpha: f64, tests: &mut TripleTests) -> Result<RootedTree> {
    let mut tree = tree.clone();
    'outer: loop {
        let cols = leaf_columns(&tree, u)?;
        let depths = tree.depths();
        let mut candidates: Vec<NodeId> = tree
            .internal_nodes()
            .into_iter()
            .filter(|&c| tree.parent(c).is_some())
            .collect();
        candidates.sort_by(|&a, &b| depths[b].cmp(&depths[a]).then(a.cmp(&b)));
        for c in candidates {
            let triples = changing_triples(&tree, c, &cols);
            let p = tests.p_values(&triples)?;
            let mean = p.iter().sum::<f64>() / p.len() as f64;
            if mean > alpha {
                tree = tree.collapse_edge(c)?;
                continue 'outer;
            }
        }
        return Ok(tree);
    }
}

/// Applies the rule selected in `config`.
pub fn collapse(tree: &RootedTree, u: &PseudoObservations, config: &CollapseConfig) -> Result<RootedTree> {
    config.validate()?;
    match config.rule {
        CollapseRule::Kagg => collapse_kagg(tree, u, config.tau_c),
        CollapseRule::Kb => collapse_kb(tree, u, config.alpha, config.bootstrap_b, config.seed),
    }
}

/// Two-step estimate on pseudo-observations: a binary tree from `method`,
/// then the collapse rule of `config`.
pub fn estimate_from_pseudo(u: &PseudoObservations, method: BinaryMethod, config: &CollapseConfig) -> Result<RootedTree> {
    config.validate()?;
    let search = SearchConfig {
        seed: config.seed,
        ..SearchConfig::default()
    };
    let binary = build_binary(u, method, &search)?;
    collapse(&binary, u, config)
}

/// Two-step estimate on raw data; columns are rank-transformed first.
pub fn estimate_structure(data: &Dataset, method: BinaryMethod, config: &CollapseConfig) -> Result<RootedTree> {
    estimate_from_pseudo(&data.pseudo_observations(), method, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nac::{sample, Family, NacSpec};
    use crate::tree::{parse_newick, write_newick};

    fn data(newick: &str, entries: &[(&[&str], f64)], family: Family, n: usize, seed: u64) -> PseudoObservations {
        let entries: Vec<(&[&str], Family, f64)> = entries.iter().map(|&(l, t)| (l, family, t)).collect();
        let spec = NacSpec::from_mrca(newick, &entries).unwrap();
        sample(&spec, n, seed).unwrap().pseudo_observations()
    }

    fn chain_data(seed: u64) -> PseudoObservations {
        data(
            "(U1,(U2,(U3,U4)));",
            &[(&["U1", "U2"], 0.2), (&["U2", "U3"], 0.5), (&["U3", "U4"], 0.8)],
            Family::Clayton,
            400,
            seed,
        )
    }

    #[test]
    fn summaries_average_cross_pairs() {
        let u = chain_data(1);
        let tree = parse_newick("(U1,(U2,(U3,U4)));").unwrap();
        let tau = |a: usize, b: usize| kendall_tau(u.column(a), u.column(b)).unwrap();
        let n34 = tree.mrca(&["U3", "U4"]).unwrap();
        let n234 = tree.mrca(&["U2", "U4"]).unwrap();
        assert_eq!(node_tau_summary(&tree, n34, &u).unwrap().mean_tau, tau(2, 3));
        let s = node_tau_summary(&tree, n234, &u).unwrap().mean_tau;
        assert!((s - (tau(1, 2) + tau(1, 3)) / 2.0).abs() < 1e-15);
        let fan = RootedTree::fan(&["U1", "U2", "U3", "U4"]).unwrap();
        let all: f64 = PAIRS.iter().chain(&[(0, 3), (1, 3), (2, 3)]).map(|&(a, b)| tau(a, b)).sum();
        assert!((node_tau_summary(&fan, fan.root(), &u).unwrap().mean_tau - all / 6.0).abs() < 1e-15);
        assert!(node_tau_summary(&tree, tree.leaf("U1").unwrap(), &u).is_err());
    }

    #[test]
    fn kagg_thresholds() {
        let u = chain_data(2);
        let tree = parse_newick("(U1,(U2,(U3,U4)));").unwrap();
        assert!(collapse_kagg(&tree, &u, 0.0).unwrap().is_isomorphic(&tree));
        let fan = collapse_kagg(&tree, &u, 2.0).unwrap();
        assert_eq!(fan.internal_count(), 1);
        // Only the gap between the 234 and 34 nodes falls below 0.35.
        let n234 = tree.mrca(&["U2", "U4"]).unwrap();
        let n34 = tree.mrca(&["U3", "U4"]).unwrap();
        let s = |n| node_tau_summary(&tree, n, &u).unwrap().mean_tau;
        let gap = (s(n234) - s(n34)).abs();
        let once = collapse_kagg(&tree, &u, gap + 1e-9).unwrap();
        let expected = if gap < (s(tree.root()) - s(n234)).abs() {
            "(U1,(U2,U3,U4));"
        } else {
            "(U1,U2,(U3,U4));"
        };
        assert!(once.is_isomorphic(&parse_newick(expected).unwrap()), "{}", write_newick(&once, false));
    }

    #[test]
    fn kagg_is_idempotent() {
        let u = chain_data(3);
        let tree = parse_newick("(U1,(U2,(U3,U4)));").unwrap();
        for tau_c in [0.05, 0.2, 0.35, 0.5] {
            let once = collapse_kagg(&tree, &u, tau_c).unwrap();
            assert!(collapse_kagg(&once, &u, tau_c).unwrap().is_isomorphic(&once));
        }
    }

    #[test]
    fn triple_test_is_symmetric_and_bounded() {
        let u = chain_data(4);
        let p = su_triple_test(&u, "U1", "U2", "U3", 49, 9).unwrap();
        assert!(p > 0.0 && p <= 1.0);
        for perm in [["U2", "U1", "U3"], ["U3", "U2", "U1"], ["U2", "U3", "U1"]] {
            assert_eq!(su_triple_test(&u, perm[0], perm[1], perm[2], 49, 9).unwrap(), p);
        }
        assert!(su_triple_test(&u, "U1", "U1", "U3", 49, 9).is_err());
        assert!(su_triple_test(&u, "U1", "U2", "U3", 0, 9).is_err());
        assert!(su_triple_test(&u, "U1", "U2", "X", 10, 9).is_err());
    }

    #[test]
    fn triple_test_rejects_clear_cherry() {
        let u = data(
            "(U1,(U2,U3));",
            &[(&["U1", "U2"], 0.2), (&["U2", "U3"], 0.8)],
            Family::Clayton,
            500,
            5,
        );
        assert!(su_triple_test(&u, "U1", "U2", "U3", 99, 1).unwrap() <= 0.05);
    }

    #[test]
    fn changing_triples_of_chain() {
        let tree = parse_newick("(U1,(U2,(U3,U4)));").unwrap();
        let cols = {
            let mut c = vec![usize::MAX; tree.node_count()];
            for l in tree.leaves() {
                c[l] = tree.label(l).unwrap()[1..].parse::<usize>().unwrap() - 1;
            }
            c
        };
        let n34 = tree.mrca(&["U3", "U4"]).unwrap();
        assert_eq!(changing_triples(&tree, n34, &cols), vec![[1, 2, 3]]);
        let n234 = tree.mrca(&["U2", "U4"]).unwrap();
        let mut got = changing_triples(&tree, n234, &cols);
        got.sort();
        assert_eq!(got, vec![[0, 1, 2], [0, 1, 3]]);
    }

    #[test]
    fn kb_boundaries() {
        let u = chain_data(6);
        let tree = parse_newick("(U1,(U2,(U3,U4)));").unwrap();
        assert!(collapse_kb(&tree, &u, 1.0, 19, 0).unwrap().is_isomorphic(&tree));
        assert_eq!(collapse_kb(&tree, &u, 0.0, 19, 0).unwrap().internal_count(), 1);
        let kept = collapse_kb(&tree, &u, 0.05, 99, 0).unwrap();
        assert!(kept.is_isomorphic(&tree), "{}", write_newick(&kept, false));
    }

    #[test]
    fn estimate_structure_recovers_non_binary_tree() {
        let spec = NacSpec::from_mrca(
            "(U1,U2,(U3,U4));",
            &[(&["U1", "U3"][..], Family::Clayton, 0.2), (&["U3", "U4"][..], Family::Clayton, 0.8)],
        )
        .unwrap();
        let d = sample(&spec, 500, 8).unwrap();
        let binary = estimate_structure(&d, BinaryMethod::Kt, &CollapseConfig::kagg(0.0)).unwrap();
        assert!(binary.is_binary());
        for config in [CollapseConfig::kagg(0.075), CollapseConfig::kb(0.05, 99, 3)] {
            let t = estimate_structure(&d, BinaryMethod::Kt, &config).unwrap();
            assert!(t.is_isomorphic(spec.tree()), "{}: {}", config.rule, write_newick(&t, false));
        }
    }

    #[test]
    fn annotations_are_rounded_means() {
        let u = chain_data(7);
        let tree = parse_newick("(U1,(U2,(U3,U4)));").unwrap();
        let a = annotate_tau(&tree, &u).unwrap();
        for id in tree.internal_nodes() {
            let m = node_tau_summary(&tree, id, &u).unwrap().mean_tau;
            assert!((a.annotation(id).unwrap() - m).abs() <= 0.005 + 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        assert!(CollapseConfig::default().validate().is_ok());
        assert!(CollapseConfig::kagg(-0.1).validate().is_err());
        assert!(CollapseConfig::kb(1.5, 10, 0).validate().is_err());
        assert!(CollapseConfig::kb(0.5, 0, 0).validate().is_err());
        assert_eq!("KB".parse::<CollapseRule>().unwrap(), CollapseRule::Kb);
    }
}

//! Step one: binary tree estimation by average linkage or by parsimony
//! supertrees over estimated trivariate trees.

mod linkage;
mod nj;
mod parsimony;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dependence::{
    dependence_matrix, kendall_dist_distance, KendallDistribution, DependenceKind, PseudoObservations,
    empirical_kendall_distribution,
};
use crate::error::{Error, Result};
use crate::seed;
use crate::tree::{root_with_outgroup, Clade, RootedTree, Topology, TripleSet, TripleShape};

pub use linkage::average_linkage;
pub use nj::nj_tree;
pub use parsimony::{
    build_character_matrix, fitch_score, matrix_from_triples, nni_neighbors, outgroup_label, random_tree, Cell,
    CharacterMatrix, PackedMatrix,
};

/// Controls for the parsimony searches.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub max_rounds: usize,
    pub ratchet_iterations: usize,
    pub ratchet_reweight_fraction: f64,
    pub ratchet_weight_factor: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_rounds: 1000,
            ratchet_iterations: 50,
            ratchet_reweight_fraction: 0.25,
            ratchet_weight_factor: 2.0,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_rounds == 0 || self.ratchet_iterations == 0 {
            return Err(Error::InvalidParameter("search budgets must be positive".into()));
        }
        if !(self.ratchet_reweight_fraction > 0.0 && self.ratchet_reweight_fraction < 1.0) {
            return Err(Error::InvalidParameter("ratchet reweight fraction must lie in (0, 1)".into()));
        }
        if !(self.ratchet_weight_factor > 1.0) || !self.ratchet_weight_factor.is_finite() {
            return Err(Error::InvalidParameter("ratchet weight factor must exceed 1".into()));
        }
        Ok(())
    }
}

/// Binary tree builders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryMethod {
    Kt,
    HD,
    Kind,
    Njnni,
    Rnix,
}

impl BinaryMethod {
    pub const ALL: [BinaryMethod; 5] = [
        BinaryMethod::Kt,
        BinaryMethod::HD,
        BinaryMethod::Kind,
        BinaryMethod::Njnni,
        BinaryMethod::Rnix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BinaryMethod::Kt => "kt",
            BinaryMethod::HD => "hD",
            BinaryMethod::Kind => "kind",
            BinaryMethod::Njnni => "NJNNI",
            BinaryMethod::Rnix => "RNix",
        }
    }

    /// Dependence measure behind a linkage method.
    pub fn dependence_kind(self) -> Option<DependenceKind> {
        match self {
            BinaryMethod::Kt => Some(DependenceKind::KendallTau),
            BinaryMethod::HD => Some(DependenceKind::HoeffdingD),
            BinaryMethod::Kind => Some(DependenceKind::KendallIndependence),
            _ => None,
        }
    }
}

impl fmt::Display for BinaryMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BinaryMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BinaryMethod::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown binary method `{s}`")))
    }
}

/// Outlier of the triple `(a, b, c)` given the three pairwise Kendall
/// distributions: the variable shared by the two closest distributions.
fn closest_outlier(ab: &KendallDistribution, ac: &KendallDistribution, bc: &KendallDistribution) -> Result<usize> {
    let d_a = kendall_dist_distance(ab, ac)?;
    let d_b = kendall_dist_distance(ab, bc)?;
    let d_c = kendall_dist_distance(ac, bc)?;
    let mut best = (d_a, 0);
    for (d, idx) in [(d_b, 1), (d_c, 2)] {
        if d < best.0 {
            best = (d, idx);
        }
    }
    Ok(best.1)
}

fn sorted_triple(i: usize, j: usize, k: usize) -> Result<[usize; 3]> {
    if i == j || j == k || i == k {
        return Err(Error::InvalidParameter("triple labels must be distinct".into()));
    }
    let mut v = [i, j, k];
    v.sort_unstable();
    Ok(v)
}

/// Binary shape of the triple `(i, j, k)` from the closest pair of Kendall
/// distributions. Never a fan.
pub fn trivariate_binary_estimate(u: &PseudoObservations, i: &str, j: &str, k: &str) -> Result<TripleShape> {
    let [a, b, c] = sorted_triple(u.index_of(i)?, u.index_of(j)?, u.index_of(k)?)?;
    let kd = |x: usize, y: usize| empirical_kendall_distribution(u.column(x), u.column(y));
    let outlier = [a, b, c][closest_outlier(&kd(a, b)?, &kd(a, c)?, &kd(b, c)?)?];
    let mut set = TripleSet::new(vec![u.names()[a].clone(), u.names()[b].clone(), u.names()[c].clone()]);
    set.set(0, 1, 2, Topology::Cherry { outlier: [a, b, c].iter().position(|&x| x == outlier).unwrap() });
    Ok(set.shape(0, 1, 2).unwrap())
}

/// Estimates every triple of `u` with [`trivariate_binary_estimate`]'s rule.
/// Labels follow the column order of `u`.
pub fn estimate_triples(u: &PseudoObservations) -> Result<TripleSet> {
    let d = u.dim();
    if d < 3 {
        return Err(Error::TooFewLeaves { needed: 3, got: d });
    }
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
    let dists: Vec<KendallDistribution> = pairs
        .par_iter()
        .map(|&(i, j)| empirical_kendall_distribution(u.column(i), u.column(j)))
        .collect::<Result<_>>()?;
    let pair_index = |i: usize, j: usize| i * d - i * (i + 1) / 2 + (j - i - 1);
    let mut set = TripleSet::new(u.names().to_vec());
    let triples: Vec<(usize, usize, usize)> = set.iter_indices().collect();
    let outliers: Vec<usize> = triples
        .par_iter()
        .map(|&(a, b, c)| {
            closest_outlier(&dists[pair_index(a, b)], &dists[pair_index(a, c)], &dists[pair_index(b, c)])
                .map(|o| [a, b, c][o])
        })
        .collect::<Result<_>>()?;
    for (&(a, b, c), &outlier) in triples.iter().zip(&outliers) {
        set.set(a, b, c, Topology::Cherry { outlier });
    }
    Ok(set)
}

/// Starting point of a parsimony search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchStart {
    /// Neighbor joining on row-normalized Hamming distances, then NNI hill
    /// climbing.
    NeighborJoining,
    /// Uniformly random topology, then the parsimony ratchet.
    Random,
}

/// Matrix representation with parsimony on the cherries of `triples`,
/// rooted with the outgroup. The result is binary on the labels of
/// `triples`.
pub fn supertree_from_triples(triples: &TripleSet, start: SearchStart, config: &SearchConfig) -> Result<RootedTree> {
    config.validate()?;
    let d = triples.dim();
    if d < 3 {
        return Err(Error::TooFewLeaves { needed: 3, got: d });
    }
    if d == 3 {
        let labels = triples.labels();
        let clade = match triples.get(0, 1, 2) {
            Some(Topology::Cherry { outlier }) => {
                let pair: Vec<Clade> = (0..3).filter(|&x| x != outlier).map(|x| Clade::leaf(labels[x].clone())).collect();
                Clade::inner(vec![Clade::inner(pair), Clade::leaf(labels[outlier].clone())])
            }
            _ => return Err(Error::IncompleteTriples("no binary shape for the triple".into())),
        };
        return RootedTree::from_clade(&clade);
    }
    let matrix = matrix_from_triples(triples);
    let packed = PackedMatrix::new(&matrix);
    let (tree, _) = match start {
        SearchStart::NeighborJoining => {
            let init = nj_tree(matrix.rows(), &matrix.hamming_distances())?;
            parsimony::hill_climb(init, &packed, None, config.max_rounds)?
        }
        SearchStart::Random => {
            let mut rng = seed::rng_for(config.seed, &[0x52_4e_69_78]);
            let init = random_tree(matrix.rows(), &mut rng)?;
            parsimony::ratchet(
                init,
                &packed,
                config.ratchet_iterations,
                config.ratchet_reweight_fraction,
                config.ratchet_weight_factor,
                config.max_rounds,
                &mut rng,
            )?
        }
    };
    root_with_outgroup(&tree, matrix.outgroup())
}

pub fn supertree_njnni(u: &PseudoObservations, config: &SearchConfig) -> Result<RootedTree> {
    supertree_from_triples(&estimate_triples(u)?, SearchStart::NeighborJoining, config)
}

pub fn supertree_rnix(u: &PseudoObservations, config: &SearchConfig) -> Result<RootedTree> {
    supertree_from_triples(&estimate_triples(u)?, SearchStart::Random, config)
}

/// Binary tree from pseudo-observations with the chosen method.
pub fn build_binary(u: &PseudoObservations, method: BinaryMethod, config: &SearchConfig) -> Result<RootedTree> {
    match method {
        BinaryMethod::Njnni => supertree_njnni(u, config),
        BinaryMethod::Rnix => supertree_rnix(u, config),
        _ => {
            if u.dim() < 2 {
                return Err(Error::TooFewLeaves { needed: 2, got: u.dim() });
            }
            average_linkage(&dependence_matrix(u, method.dependence_kind().unwrap())?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependence::{pseudo_observations, Dataset};
    use crate::tree::{decompose, parse_newick, TripleKind};
    use rand::Rng;

    fn block_data(n: usize, seed: u64) -> PseudoObservations {
        // U1,U2 share a strong factor, U3,U4 another; a weak common factor
        // ties the blocks together.
        let mut rng = crate::seed::rng(seed);
        let mut cols = vec![Vec::with_capacity(n); 4];
        for _ in 0..n {
            let g: f64 = rng.random();
            let a: f64 = rng.random();
            let b: f64 = rng.random();
            for (c, col) in cols.iter_mut().enumerate() {
                let block = if c < 2 { a } else { b };
                col.push(0.3 * g + 2.0 * block + 0.2 * rng.random::<f64>());
            }
        }
        let names = (1..=4).map(|i| format!("U{i}")).collect();
        pseudo_observations(&Dataset::from_columns(names, cols).unwrap())
    }

    #[test]
    fn method_names_round_trip() {
        for m in BinaryMethod::ALL {
            assert_eq!(m.name().parse::<BinaryMethod>().unwrap(), m);
            assert_eq!(m.name().to_uppercase().parse::<BinaryMethod>().unwrap(), m);
        }
        assert!("upgma".parse::<BinaryMethod>().is_err());
    }

    #[test]
    fn comonotone_pair_is_cherry() {
        let mut rng = crate::seed::rng(2);
        let x: Vec<f64> = (0..300).map(|_| rng.random()).collect();
        let z: Vec<f64> = (0..300).map(|_| rng.random()).collect();
        let names = vec!["U1".to_string(), "U2".to_string(), "U3".to_string()];
        let u = pseudo_observations(&Dataset::from_columns(names, vec![z, x.clone(), x]).unwrap());
        let shape = trivariate_binary_estimate(&u, "U1", "U2", "U3").unwrap();
        assert_eq!(
            shape.kind,
            TripleKind::Cherry {
                pair: ["U2".into(), "U3".into()],
                outlier: "U1".into()
            }
        );
        for perm in [["U3", "U1", "U2"], ["U2", "U3", "U1"], ["U3", "U2", "U1"]] {
            assert_eq!(trivariate_binary_estimate(&u, perm[0], perm[1], perm[2]).unwrap(), shape);
        }
        assert!(trivariate_binary_estimate(&u, "U1", "U1", "U2").is_err());
        let t = build_binary(&u, BinaryMethod::Kt, &SearchConfig::default()).unwrap();
        assert!(t.is_isomorphic(&parse_newick("((U2,U3),U1);").unwrap()));
    }

    #[test]
    fn estimate_triples_agrees_with_single_estimates() {
        let u = block_data(200, 4);
        let set = estimate_triples(&u).unwrap();
        for shape in set.shapes() {
            let [a, b, c] = &shape.leaves;
            assert_eq!(trivariate_binary_estimate(&u, a, b, c).unwrap(), shape);
        }
    }

    #[test]
    fn all_methods_agree_on_block_data() {
        let u = block_data(400, 7);
        let truth = parse_newick("((U1,U2),(U3,U4));").unwrap();
        for m in BinaryMethod::ALL {
            let t = build_binary(&u, m, &SearchConfig::default()).unwrap();
            assert!(t.is_binary());
            assert!(t.is_isomorphic(&truth), "{m}: {}", crate::tree::write_newick(&t, false));
        }
    }

    #[test]
    fn supertree_recovers_noise_free_trees() {
        let mut rng = crate::seed::rng(21);
        for d in 3..=8 {
            for _ in 0..4 {
                let mut labels: Vec<String> = (1..=d).map(|i| format!("U{i}")).collect();
                labels.push("R".into());
                let u = random_tree(&labels, &mut rng).unwrap();
                let tree = root_with_outgroup(&u, "R").unwrap();
                let set = decompose(&tree).unwrap();
                for start in [SearchStart::NeighborJoining, SearchStart::Random] {
                    let cfg = SearchConfig { ratchet_iterations: 10, ..SearchConfig::default() };
                    let got = supertree_from_triples(&set, start, &cfg).unwrap();
                    assert!(got.is_isomorphic(&tree), "{start:?} {}", crate::tree::write_newick(&tree, false));
                }
            }
        }
    }

    #[test]
    fn rnix_is_reproducible() {
        let u = block_data(150, 1);
        let cfg = SearchConfig { seed: 17, ..SearchConfig::default() };
        let a = supertree_rnix(&u, &cfg).unwrap();
        let b = supertree_rnix(&u, &cfg).unwrap();
        assert_eq!(crate::tree::write_newick(&a, false), crate::tree::write_newick(&b, false));
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        assert!(SearchConfig { ratchet_reweight_fraction: 1.0, ..SearchConfig::default() }.validate().is_err());
        assert!(SearchConfig { ratchet_weight_factor: 1.0, ..SearchConfig::default() }.validate().is_err());
        assert!(SearchConfig { max_rounds: 0, ..SearchConfig::default() }.validate().is_err());
    }
}

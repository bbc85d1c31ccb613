//! Simulation harness: replicated estimation against a known structure,
//! distance summaries and optimal thresholds.

mod configs;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builders::{build_binary, estimate_triples, BinaryMethod, SearchConfig};
use crate::collapse::{
    collapse_kagg_with, collapse_kb_with, estimate_from_pseudo, tau_matrix, CollapseConfig, CollapseRule, TripleTests,
};
use crate::dependence::PseudoObservations;
use crate::error::{Error, Result};
use crate::nac::{sample, NacSpec, NacSpecJson};
use crate::seed;
use crate::tree::{reconstruct, tree_distance_01, tree_distance_tri, RootedTree, Topology, TripleSet};

pub use configs::{paper_config, paper_configs, PAPER_CONFIG_NAMES};

/// A complete structure estimator: a binary builder followed by a collapse
/// rule, or the triple-test baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Estimator {
    TwoStep { method: BinaryMethod, rule: CollapseRule },
    SuBaseline,
}

impl Estimator {
    pub const fn two_step(method: BinaryMethod, rule: CollapseRule) -> Self {
        Estimator::TwoStep { method, rule }
    }

    /// The estimators compared by default.
    pub fn standard() -> Vec<Estimator> {
        use BinaryMethod::*;
        use CollapseRule::*;
        vec![
            Estimator::two_step(Kt, Kagg),
            Estimator::two_step(HD, Kagg),
            Estimator::two_step(Kind, Kagg),
            Estimator::two_step(Kt, Kb),
            Estimator::two_step(Njnni, Kb),
            Estimator::two_step(Rnix, Kb),
            Estimator::SuBaseline,
        ]
    }

    /// Whether the threshold is a test level rather than a tau gap.
    pub fn uses_alpha(&self) -> bool {
        !matches!(self, Estimator::TwoStep { rule: CollapseRule::Kagg, .. })
    }

    pub fn default_thresholds(&self) -> Vec<f64> {
        if self.uses_alpha() {
            vec![0.01, 0.05, 0.1, 0.25, 0.5, 1.0]
        } else {
            vec![0.0, 0.025, 0.05, 0.075, 0.1, 0.15, 0.2]
        }
    }

    fn check_threshold(&self, t: f64) -> Result<()> {
        let ok = if self.uses_alpha() { (0.0..=1.0).contains(&t) } else { t >= 0.0 && t.is_finite() };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("threshold {t} is out of range for {self}")))
        }
    }

    fn stream_id(&self) -> u64 {
        // FNV-1a of the name keeps seeds stable when the estimator list changes.
        self.to_string()
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimator::TwoStep { method, rule } => write!(f, "{method}_{rule}"),
            Estimator::SuBaseline => f.write_str("SU_baseline"),
        }
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("SU") || s.eq_ignore_ascii_case("SU_baseline") {
            return Ok(Estimator::SuBaseline);
        }
        let (method, rule) = s
            .rsplit_once('_')
            .ok_or_else(|| Error::InvalidParameter(format!("unknown estimator `{s}`")))?;
        Ok(Estimator::TwoStep {
            method: method.parse()?,
            rule: rule.parse()?,
        })
    }
}

impl TryFrom<String> for Estimator {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Estimator> for String {
    fn from(e: Estimator) -> String {
        e.to_string()
    }
}

/// Runs `estimator` on `u` at one threshold (`τ_c` or `α`).
pub fn estimate(u: &PseudoObservations, estimator: Estimator, threshold: f64, bootstrap_b: usize, seed: u64) -> Result<RootedTree> {
    estimator.check_threshold(threshold)?;
    match estimator {
        Estimator::TwoStep { method, rule } => {
            let config = CollapseConfig {
                rule,
                tau_c: if rule == CollapseRule::Kagg { threshold } else { 0.0 },
                alpha: if rule == CollapseRule::Kb { threshold } else { 0.0 },
                bootstrap_b,
                seed,
            };
            estimate_from_pseudo(u, method, &config)
        }
        Estimator::SuBaseline => su_baseline_estimate(u, threshold, bootstrap_b, seed),
    }
}

/// Baseline estimator: every triple is tested for a fan; rejected triples
/// take the cherry of the closest pair of Kendall distributions, the others
/// become fans, and the tree is rebuilt from the resulting triples.
pub fn su_baseline_estimate(u: &PseudoObservations, alpha: f64, bootstrap_b: usize, seed: u64) -> Result<RootedTree> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("α = {alpha} must lie in [0, 1]")));
    }
    if bootstrap_b == 0 {
        return Err(Error::InvalidParameter("bootstrap size must be at least 1".into()));
    }
    let (cherries, p) = su_inputs(u, bootstrap_b, seed)?;
    su_tree(&cherries, &p, alpha)
}

fn su_inputs(u: &PseudoObservations, bootstrap_b: usize, seed: u64) -> Result<(TripleSet, Vec<f64>)> {
    let cherries = estimate_triples(u)?;
    let triples: Vec<[usize; 3]> = cherries.iter_indices().map(|(i, j, k)| [i, j, k]).collect();
    let p = TripleTests::new(u, bootstrap_b, seed).p_values(&triples)?;
    Ok((cherries, p))
}

fn su_tree(cherries: &TripleSet, p: &[f64], alpha: f64) -> Result<RootedTree> {
    let mut set = TripleSet::new(cherries.labels().to_vec());
    for ((i, j, k), &pv) in cherries.iter_indices().zip(p) {
        let shape = if pv <= alpha { cherries.get(i, j, k).unwrap() } else { Topology::Fan };
        set.set(i, j, k, shape);
    }
    reconstruct(&set)
}

fn default_replicates() -> usize {
    100
}

fn default_bootstrap() -> usize {
    200
}

fn default_true() -> bool {
    true
}

/// Serialized form of [`StudyConfig`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfigJson {
    pub nac: NacSpecJson,
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub estimators: Vec<Estimator>,
    /// Threshold grids keyed by estimator name; missing entries use the
    /// estimator's default grid.
    #[serde(default)]
    pub thresholds: BTreeMap<String, Vec<f64>>,
    #[serde(default = "default_bootstrap")]
    pub bootstrap_b: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub timing: bool,
}

#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub nac: NacSpec,
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    pub estimators: Vec<Estimator>,
    pub thresholds: HashMap<Estimator, Vec<f64>>,
    pub bootstrap_b: usize,
    pub seed: u64,
    /// When set, every (estimator, threshold) pair is computed from scratch
    /// and timed. Otherwise work is shared across thresholds and `millis`
    /// is reported as 0; the estimates are the same either way.
    pub timing: bool,
}

impl StudyConfig {
    pub fn new(nac: NacSpec, sample_sizes: Vec<usize>, estimators: Vec<Estimator>) -> Self {
        StudyConfig {
            nac,
            sample_sizes,
            replicates: default_replicates(),
            estimators,
            thresholds: HashMap::new(),
            bootstrap_b: default_bootstrap(),
            seed: 0,
            timing: true,
        }
    }

    /// Threshold grid of `estimator`.
    pub fn grid(&self, estimator: &Estimator) -> Vec<f64> {
        self.thresholds
            .get(estimator)
            .cloned()
            .unwrap_or_else(|| estimator.default_thresholds())
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidParameter("no estimators given".into()));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.iter().any(|&n| n < 5) {
            return Err(Error::InvalidParameter("sample sizes must be given and at least 5".into()));
        }
        if self.bootstrap_b == 0 {
            return Err(Error::InvalidParameter("bootstrap size must be at least 1".into()));
        }
        for (i, n) in self.sample_sizes.iter().enumerate() {
            if self.sample_sizes[..i].contains(n) {
                return Err(Error::InvalidParameter(format!("sample size {n} listed twice")));
            }
        }
        for (i, e) in self.estimators.iter().enumerate() {
            if self.estimators[..i].contains(e) {
                return Err(Error::InvalidParameter(format!("estimator {e} listed twice")));
            }
        }
        if self.nac.tree().leaf_count() < 3 {
            return Err(Error::TooFewLeaves { needed: 3, got: self.nac.tree().leaf_count() });
        }
        for e in self.thresholds.keys() {
            if !self.estimators.contains(e) {
                return Err(Error::InvalidParameter(format!("thresholds given for unused estimator {e}")));
            }
        }
        for e in &self.estimators {
            let grid = self.grid(e);
            if grid.is_empty() {
                return Err(Error::InvalidParameter(format!("empty threshold grid for {e}")));
            }
            for &t in &grid {
                e.check_threshold(t)?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> StudyConfigJson {
        StudyConfigJson {
            nac: self.nac.to_json(),
            sample_sizes: self.sample_sizes.clone(),
            replicates: self.replicates,
            estimators: self.estimators.clone(),
            thresholds: self.thresholds.iter().map(|(e, g)| (e.to_string(), g.clone())).collect(),
            bootstrap_b: self.bootstrap_b,
            seed: self.seed,
            timing: self.timing,
        }
    }

    pub fn from_json(json: &StudyConfigJson) -> Result<Self> {
        let thresholds = json
            .thresholds
            .iter()
            .map(|(name, g)| Ok((name.parse()?, g.clone())))
            .collect::<Result<_>>()?;
        let config = StudyConfig {
            nac: NacSpec::from_json(&json.nac)?,
            sample_sizes: json.sample_sizes.clone(),
            replicates: json.replicates,
            estimators: json.estimators.clone(),
            thresholds,
            bootstrap_b: json.bootstrap_b,
            seed: json.seed,
            timing: json.timing,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_json(&serde_json::from_str(text)?)
    }
}

/// One estimate of one replicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub estimator: String,
    pub n: usize,
    pub threshold: f64,
    pub replicate: usize,
    pub dist01: u8,
    #[serde(rename = "distTri")]
    pub dist_tri: u64,
    pub millis: f64,
    /// The estimator returned an error; distances are set to their maxima.
    #[serde(skip)]
    pub failed: bool,
}

/// Mean, population variance and `mean² + variance` of a list of distances.
pub fn distance_summary(values: &[f64]) -> (f64, f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var, mean * mean + var)
}

/// Aggregates over the replicates of one (estimator, n, threshold) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub estimator: String,
    pub n: usize,
    pub threshold: f64,
    pub replicates: usize,
    pub mean_01: f64,
    pub var_01: f64,
    pub summary_01: f64,
    pub mean_tri: f64,
    pub var_tri: f64,
    pub summary_tri: f64,
    pub mean_millis: f64,
    pub failures: usize,
}

impl CellSummary {
    fn from_records(records: &[&EstimateRecord]) -> Self {
        let d01: Vec<f64> = records.iter().map(|r| r.dist01 as f64).collect();
        let tri: Vec<f64> = records.iter().map(|r| r.dist_tri as f64).collect();
        let (mean_01, var_01, summary_01) = distance_summary(&d01);
        let (mean_tri, var_tri, summary_tri) = distance_summary(&tri);
        let first = records[0];
        CellSummary {
            estimator: first.estimator.clone(),
            n: first.n,
            threshold: first.threshold,
            replicates: records.len(),
            mean_01,
            var_01,
            summary_01,
            mean_tri,
            var_tri,
            summary_tri,
            mean_millis: records.iter().map(|r| r.millis).sum::<f64>() / records.len() as f64,
            failures: records.iter().filter(|r| r.failed).count(),
        }
    }
}

/// Threshold with the smallest mean 01-distance for one estimator and size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalThreshold {
    pub estimator: String,
    pub n: usize,
    pub threshold: f64,
    pub mean_01: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub dim: usize,
    pub max_tri: u64,
    pub seed: u64,
    pub cells: Vec<CellSummary>,
    pub optimal: Vec<OptimalThreshold>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyResult {
    pub dim: usize,
    pub seed: u64,
    /// Ordered by estimator (config order), n, threshold (grid order) and
    /// replicate.
    pub records: Vec<EstimateRecord>,
}

impl StudyResult {
    /// Records grouped by cell, in record order.
    fn cells(&self) -> Vec<Vec<&EstimateRecord>> {
        let mut out: Vec<Vec<&EstimateRecord>> = Vec::new();
        for r in &self.records {
            match out.last_mut() {
                Some(cell)
                    if cell[0].estimator == r.estimator && cell[0].n == r.n && cell[0].threshold == r.threshold =>
                {
                    cell.push(r)
                }
                _ => out.push(vec![r]),
            }
        }
        out
    }

    pub fn cell_summaries(&self) -> Vec<CellSummary> {
        self.cells().iter().map(|c| CellSummary::from_records(c)).collect()
    }

    pub fn summary(&self) -> StudySummary {
        let cells = self.cell_summaries();
        let mut optimal: Vec<OptimalThreshold> = Vec::new();
        for c in &cells {
            match optimal.iter_mut().find(|o| o.estimator == c.estimator && o.n == c.n) {
                Some(o) => {
                    let better = c.mean_01 < o.mean_01 || (c.mean_01 == o.mean_01 && c.threshold < o.threshold);
                    if better {
                        o.threshold = c.threshold;
                        o.mean_01 = c.mean_01;
                    }
                }
                None => optimal.push(OptimalThreshold {
                    estimator: c.estimator.clone(),
                    n: c.n,
                    threshold: c.threshold,
                    mean_01: c.mean_01,
                }),
            }
        }
        StudySummary {
            dim: self.dim,
            max_tri: max_tri(self.dim),
            seed: self.seed,
            cells,
            optimal,
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, &self.summary())?;
        Ok(())
    }
}

/// Reads records written by [`StudyResult::write_csv`].
pub fn read_records<R: Read>(reader: R) -> Result<Vec<EstimateRecord>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Grid value with the smallest mean 01-distance for `estimator` at size
/// `n`; ties go to the smaller threshold.
pub fn optimal_threshold(result: &StudyResult, estimator: Estimator, n: usize) -> Result<f64> {
    let name = estimator.to_string();
    result
        .summary()
        .optimal
        .into_iter()
        .find(|o| o.estimator == name && o.n == n)
        .map(|o| o.threshold)
        .ok_or_else(|| Error::InvalidParameter(format!("no results for {name} at n = {n}")))
}

fn max_tri(d: usize) -> u64 {
    let d = d as u64;
    if d < 3 {
        0
    } else {
        d * (d - 1) * (d - 2) / 6
    }
}

struct Outcome {
    tree: Result<RootedTree>,
    millis: f64,
}

/// Estimates for every threshold of `grid`, in grid order.
fn run_grid(u: &PseudoObservations, e: Estimator, grid: &[f64], b: usize, seed: u64, timing: bool) -> Vec<Outcome> {
    if timing {
        return grid
            .iter()
            .map(|&t| {
                let start = Instant::now();
                let tree = estimate(u, e, t, b, seed);
                Outcome {
                    tree,
                    millis: start.elapsed().as_secs_f64() * 1e3,
                }
            })
            .collect();
    }
    let trees: Result<Vec<Result<RootedTree>>> = (|| match e {
        Estimator::TwoStep { method, rule } => {
            let search = SearchConfig { seed, ..SearchConfig::default() };
            let binary = build_binary(u, method, &search)?;
            Ok(match rule {
                CollapseRule::Kagg => {
                    let tau = tau_matrix(u)?;
                    grid.iter().map(|&t| collapse_kagg_with(&binary, u, t, &tau)).collect()
                }
                CollapseRule::Kb => {
                    let mut tests = TripleTests::new(u, b, seed);
                    grid.iter().map(|&t| collapse_kb_with(&binary, u, t, &mut tests)).collect()
                }
            })
        }
        Estimator::SuBaseline => {
            let (cherries, p) = su_inputs(u, b, seed)?;
            Ok(grid.iter().map(|&t| su_tree(&cherries, &p, t)).collect())
        }
    })();
    match trees {
        Ok(trees) => trees.into_iter().map(|tree| Outcome { tree, millis: 0.0 }).collect(),
        Err(err) => grid
            .iter()
            .map(|_| Outcome {
                tree: Err(Error::InvalidData(err.to_string())),
                millis: 0.0,
            })
            .collect(),
    }
}

/// Runs every estimator at every threshold on `replicates` samples of each
/// size. Reproducible from `config.seed`.
pub fn run_study(config: &StudyConfig) -> Result<StudyResult> {
    config.validate()?;
    let truth = config.nac.tree();
    let dim = truth.leaf_count();
    let jobs: Vec<(usize, usize)> = config
        .sample_sizes
        .iter()
        .flat_map(|&n| (0..config.replicates).map(move |r| (n, r)))
        .collect();
    let per_job: Vec<Vec<(usize, usize, EstimateRecord)>> = jobs
        .par_iter()
        .map(|&(n, r)| -> Result<Vec<(usize, usize, EstimateRecord)>> {
            let data = sample(&config.nac, n, seed::derive(config.seed, &[n as u64, r as u64]))?;
            let u = data.pseudo_observations();
            let mut out = Vec::new();
            for (ei, e) in config.estimators.iter().enumerate() {
                let grid = config.grid(e);
                let seed = seed::derive(config.seed, &[n as u64, r as u64, e.stream_id()]);
                let outcomes = run_grid(&u, *e, &grid, config.bootstrap_b, seed, config.timing);
                for (ti, (t, o)) in grid.iter().zip(outcomes).enumerate() {
                    let dists = o.tree.and_then(|tree| {
                        Ok((tree_distance_01(&tree, truth), tree_distance_tri(&tree, truth)?))
                    });
                    let (dist01, dist_tri, failed) = match dists {
                        Ok((a, b)) => (a, b, false),
                        Err(err) => {
                            log::warn!("{e} failed at n = {n}, threshold {t}, replicate {r}: {err}");
                            (1, max_tri(dim), true)
                        }
                    };
                    out.push((
                        ei,
                        ti,
                        EstimateRecord {
                            estimator: e.to_string(),
                            n,
                            threshold: *t,
                            replicate: r,
                            dist01,
                            dist_tri,
                            millis: o.millis,
                            failed,
                        },
                    ));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let n_index = |n: usize| config.sample_sizes.iter().position(|&m| m == n).unwrap();
    let mut all: Vec<(usize, usize, EstimateRecord)> = per_job.into_iter().flatten().collect();
    all.sort_by_key(|(ei, ti, r)| (*ei, n_index(r.n), *ti, r.replicate));
    Ok(StudyResult {
        dim,
        seed: config.seed,
        records: all.into_iter().map(|(_, _, r)| r).collect(),
    })
}

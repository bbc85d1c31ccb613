//! Matrix representation with parsimony: character matrices, Fitch scoring
//! and NNI searches over unrooted trees.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::tree::{natural_cmp, RootedTree, Topology, TripleSet, UnrootedTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cell {
    Zero,
    One,
    Unknown,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cell::Zero => "0",
            Cell::One => "1",
            Cell::Unknown => "?",
        })
    }
}

/// Binary characters over a set of rows. The last row is the outgroup and
/// holds only zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct CharacterMatrix {
    rows: Vec<String>,
    /// Column-major cells.
    columns: Vec<Vec<Cell>>,
}

/// Picks an outgroup name not clashing with `labels`.
pub fn outgroup_label<S: AsRef<str>>(labels: &[S]) -> String {
    let mut name = "O".to_string();
    while labels.iter().any(|l| l.as_ref() == name) {
        name.push('_');
    }
    name
}

impl CharacterMatrix {
    /// Rows, outgroup last.
    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    pub fn outgroup(&self) -> &str {
        self.rows.last().unwrap()
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.columns[col][row]
    }

    pub fn column(&self, col: usize) -> &[Cell] {
        &self.columns[col]
    }

    /// Row-wise Hamming distance over the columns where both rows are known,
    /// divided by the number of such columns; 1 when no column is shared.
    pub fn hamming_distances(&self) -> Vec<Vec<f64>> {
        let r = self.rows.len();
        let mut out = vec![vec![0.0; r]; r];
        for a in 0..r {
            for b in a + 1..r {
                let (mut diff, mut shared) = (0usize, 0usize);
                for col in &self.columns {
                    if col[a] != Cell::Unknown && col[b] != Cell::Unknown {
                        shared += 1;
                        diff += usize::from(col[a] != col[b]);
                    }
                }
                let v = if shared == 0 { 1.0 } else { diff as f64 / shared as f64 };
                out[a][b] = v;
                out[b][a] = v;
            }
        }
        out
    }

    /// CSV with a `taxon` column then one column per character.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["taxon".to_string()];
        header.extend((1..=self.columns.len()).map(|c| format!("c{c}")));
        w.write_record(&header)?;
        for (r, name) in self.rows.iter().enumerate() {
            let mut rec = vec![name.clone()];
            rec.extend(self.columns.iter().map(|c| c[r].to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One column per internal edge of each input tree after attaching the
/// outgroup to its root and unrooting. Leaves on the outgroup side are 0,
/// leaves on the far side 1, leaves absent from the tree `?`.
pub fn build_character_matrix(trees: &[RootedTree], all_leaves: &[String]) -> Result<CharacterMatrix> {
    if trees.is_empty() {
        return Err(Error::InvalidParameter("no input trees".into()));
    }
    let mut rows: Vec<String> = all_leaves.to_vec();
    rows.sort_by(|a, b| natural_cmp(a, b));
    rows.dedup();
    let out = outgroup_label(&rows);
    rows.push(out.clone());
    let index: HashMap<&str, usize> = rows.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
    let mut columns = Vec::new();
    for tree in trees {
        for label in tree.leaf_labels() {
            if label == out || !index.contains_key(label.as_str()) {
                return Err(Error::UnknownLabel(label));
            }
        }
        let u = UnrootedTree::with_outgroup(tree, &out)?;
        let o = u.leaf_index(&out)?;
        for (a, b) in u.internal_edges() {
            let side_b = u.side(a, b);
            let far = if side_b.contains(&o) { u.side(b, a) } else { side_b };
            let mut col = vec![Cell::Unknown; rows.len()];
            for leaf in 0..u.leaf_count() {
                col[index[u.labels()[leaf].as_str()]] = Cell::Zero;
            }
            for leaf in far {
                col[index[u.labels()[leaf].as_str()]] = Cell::One;
            }
            columns.push(col);
        }
    }
    Ok(CharacterMatrix { rows, columns })
}

/// Character matrix of the cherries of a triple set; the same matrix that
/// [`build_character_matrix`] gives on the corresponding three-leaf trees.
/// Rows follow the triple set's label order.
pub fn matrix_from_triples(triples: &TripleSet) -> CharacterMatrix {
    let mut rows = triples.labels().to_vec();
    let out = outgroup_label(&rows);
    rows.push(out);
    let r = rows.len();
    let mut columns = Vec::new();
    for (i, j, k) in triples.iter_indices() {
        if let Some(Topology::Cherry { outlier }) = triples.get(i, j, k) {
            let mut col = vec![Cell::Unknown; r];
            for x in [i, j, k] {
                col[x] = if x == outlier { Cell::Zero } else { Cell::One };
            }
            col[r - 1] = Cell::Zero;
            columns.push(col);
        }
    }
    CharacterMatrix { rows, columns }
}

/// Character matrix packed into bit masks for fast Fitch passes.
#[derive(Clone, Debug)]
pub struct PackedMatrix {
    words: usize,
    columns: usize,
    /// Per row: can-be-0 then can-be-1 masks.
    rows: Vec<(Vec<u64>, Vec<u64>)>,
    labels: Vec<String>,
}

impl PackedMatrix {
    pub fn new(m: &CharacterMatrix) -> Self {
        let columns = m.column_count();
        let words = columns.div_ceil(64).max(1);
        let rows = (0..m.row_count())
            .map(|r| {
                let mut zero = vec![0u64; words];
                let mut one = vec![0u64; words];
                for c in 0..columns {
                    let bit = 1u64 << (c % 64);
                    match m.cell(r, c) {
                        Cell::Zero => zero[c / 64] |= bit,
                        Cell::One => one[c / 64] |= bit,
                        Cell::Unknown => {
                            zero[c / 64] |= bit;
                            one[c / 64] |= bit;
                        }
                    }
                }
                (zero, one)
            })
            .collect();
        PackedMatrix {
            words,
            columns,
            rows,
            labels: m.rows().to_vec(),
        }
    }

    pub fn column_count(&self) -> usize {
        self.columns
    }

    /// Maps each leaf of `tree` to a matrix row.
    fn leaf_rows(&self, tree: &UnrootedTree) -> Result<Vec<usize>> {
        if tree.leaf_count() != self.labels.len() {
            return Err(Error::InvalidData(format!(
                "tree has {} leaves, matrix has {} rows",
                tree.leaf_count(),
                self.labels.len()
            )));
        }
        if tree.labels() == self.labels.as_slice() {
            return Ok((0..self.labels.len()).collect());
        }
        let index: HashMap<&str, usize> =
            self.labels.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
        tree.labels()
            .iter()
            .map(|l| {
                index
                    .get(l.as_str())
                    .copied()
                    .ok_or_else(|| Error::InvalidData(format!("`{l}` is not a matrix row")))
            })
            .collect()
    }

    /// Weighted Fitch length: every change on an ordinary column costs 1, on
    /// a column set in `heavy` it costs `factor`.
    fn score_with(&self, tree: &UnrootedTree, rows: &[usize], heavy: Option<(&[u64], f64)>) -> f64 {
        let (changes, heavy_changes) = self.changes(tree, rows, heavy.map(|h| h.0));
        match heavy {
            Some((_, factor)) => changes as f64 + factor * heavy_changes as f64,
            None => changes as f64,
        }
    }

    /// Counts (ordinary, heavy) state changes of a most parsimonious
    /// reconstruction. The pass is rooted on the pendant edge of leaf 0.
    fn changes(&self, tree: &UnrootedTree, rows: &[usize], heavy: Option<&[u64]>) -> (u64, u64) {
        let w = self.words;
        let nodes = tree.node_count();
        let (mut plain, mut weighted) = (0u64, 0u64);
        let (z0, o0) = &self.rows[rows[0]];
        if nodes < 2 {
            return (0, 0);
        }
        let top = tree.neighbors(0)[0];
        let mut order = Vec::with_capacity(nodes);
        let mut parent = vec![usize::MAX; nodes];
        parent[0] = 0;
        parent[top] = 0;
        let mut stack = vec![top];
        while let Some(v) = stack.pop() {
            order.push(v);
            for &x in tree.neighbors(v) {
                if parent[x] == usize::MAX {
                    parent[x] = v;
                    stack.push(x);
                }
            }
        }
        let mut zero = vec![0u64; w * nodes];
        let mut one = vec![0u64; w * nodes];
        let mut children = Vec::new();
        for &v in order.iter().rev() {
            children.clear();
            children.extend(tree.neighbors(v).iter().copied().filter(|&x| x != 0 && parent[x] == v));
            if children.is_empty() {
                let (z, o) = &self.rows[rows[v]];
                zero[v * w..(v + 1) * w].copy_from_slice(z);
                one[v * w..(v + 1) * w].copy_from_slice(o);
            } else if children.len() == 2 {
                let (a, b) = (children[0], children[1]);
                for k in 0..w {
                    let (za, zb) = (zero[a * w + k], zero[b * w + k]);
                    let (oa, ob) = (one[a * w + k], one[b * w + k]);
                    let (iz, io) = (za & zb, oa & ob);
                    let conflict = !(iz | io) & self.valid(k);
                    let h = heavy.map_or(0, |h| h[k]);
                    plain += u64::from((conflict & !h).count_ones());
                    weighted += u64::from((conflict & h).count_ones());
                    zero[v * w + k] = iz | (conflict & (za | zb));
                    one[v * w + k] = io | (conflict & (oa | ob));
                }
            } else {
                // Polytomy: keep the states present in most children and pay
                // one change per other child.
                for k in 0..w {
                    let (mut z, mut o) = (0u64, 0u64);
                    let h = heavy.map_or(0, |h| h[k]);
                    for bit in 0..64 {
                        if k * 64 + bit >= self.columns {
                            break;
                        }
                        let c0 = children.iter().filter(|&&c| (zero[c * w + k] >> bit) & 1 == 1).count();
                        let c1 = children.iter().filter(|&&c| (one[c * w + k] >> bit) & 1 == 1).count();
                        let best = c0.max(c1);
                        let cost = (children.len() - best) as u64;
                        if (h >> bit) & 1 == 1 {
                            weighted += cost;
                        } else {
                            plain += cost;
                        }
                        z |= u64::from(c0 == best) << bit;
                        o |= u64::from(c1 == best) << bit;
                    }
                    zero[v * w + k] = z;
                    one[v * w + k] = o;
                }
            }
        }
        for k in 0..w {
            let conflict = !((z0[k] & zero[top * w + k]) | (o0[k] & one[top * w + k])) & self.valid(k);
            let h = heavy.map_or(0, |h| h[k]);
            plain += u64::from((conflict & !h).count_ones());
            weighted += u64::from((conflict & h).count_ones());
        }
        (plain, weighted)
    }

    fn valid(&self, k: usize) -> u64 {
        let end = (k + 1) * 64;
        if end <= self.columns {
            u64::MAX
        } else if k * 64 >= self.columns {
            0
        } else {
            (1u64 << (self.columns - k * 64)) - 1
        }
    }
}

/// Fitch parsimony length of `matrix` on `tree`, whose leaves must be the
/// matrix rows.
pub fn fitch_score(tree: &UnrootedTree, matrix: &CharacterMatrix) -> Result<u64> {
    let packed = PackedMatrix::new(matrix);
    let rows = packed.leaf_rows(tree)?;
    Ok(packed.changes(tree, &rows, None).0)
}

fn swap_subtrees(tree: &UnrootedTree, u: usize, x: usize, v: usize, y: usize) -> UnrootedTree {
    let mut t = tree.clone();
    let adj = t.adj_mut();
    for e in adj[u].iter_mut() {
        if *e == x {
            *e = y;
        }
    }
    for e in adj[v].iter_mut() {
        if *e == y {
            *e = x;
        }
    }
    for e in adj[x].iter_mut() {
        if *e == u {
            *e = v;
        }
    }
    for e in adj[y].iter_mut() {
        if *e == v {
            *e = u;
        }
    }
    t
}

/// NNI rearrangements around every internal edge `(u, v)`: one subtree
/// hanging from `u` is exchanged with each subtree hanging from `v`. A
/// binary tree has two neighbors per internal edge.
pub fn nni_neighbors(tree: &UnrootedTree) -> Result<Vec<UnrootedTree>> {
    if tree.leaf_count() < 4 {
        return Err(Error::TooFewLeaves {
            needed: 4,
            got: tree.leaf_count(),
        });
    }
    let mut out = Vec::new();
    for (u, v) in tree.internal_edges() {
        let x = *tree.adj()[u].iter().find(|&&n| n != v).unwrap();
        for &y in tree.adj()[v].iter().filter(|&&n| n != u) {
            out.push(swap_subtrees(tree, u, x, v, y));
        }
    }
    Ok(out)
}

/// Best-improvement NNI hill climbing. Returns the final tree and its score.
pub(crate) fn hill_climb(
    start: UnrootedTree,
    packed: &PackedMatrix,
    heavy: Option<(&[u64], f64)>,
    max_rounds: usize,
) -> Result<(UnrootedTree, f64)> {
    let rows = packed.leaf_rows(&start)?;
    let mut current = start;
    let mut score = packed.score_with(&current, &rows, heavy);
    if current.leaf_count() < 4 {
        return Ok((current, score));
    }
    for _ in 0..max_rounds {
        let mut best: Option<(UnrootedTree, f64)> = None;
        for n in nni_neighbors(&current)? {
            let s = packed.score_with(&n, &rows, heavy);
            if s < best.as_ref().map_or(score, |b| b.1) {
                best = Some((n, s));
            }
        }
        match best {
            Some((t, s)) => {
                current = t;
                score = s;
            }
            None => break,
        }
    }
    Ok((current, score))
}

/// Uniform random binary unrooted topology on `labels`, by inserting leaves
/// one at a time on a uniformly chosen edge.
pub fn random_tree<R: Rng>(labels: &[String], rng: &mut R) -> Result<UnrootedTree> {
    let n = labels.len();
    if n < 3 {
        return Err(Error::TooFewLeaves { needed: 3, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); 2 * n - 2];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let center = n;
    for &leaf in &order[..3] {
        adj[center].push(leaf);
        adj[leaf].push(center);
        edges.push((center, leaf));
    }
    let mut next = n + 1;
    for &leaf in &order[3..] {
        let e = rng.random_range(0..edges.len());
        let (a, b) = edges[e];
        let m = next;
        next += 1;
        for x in adj[a].iter_mut() {
            if *x == b {
                *x = m;
            }
        }
        for x in adj[b].iter_mut() {
            if *x == a {
                *x = m;
            }
        }
        adj[m] = vec![a, b, leaf];
        adj[leaf].push(m);
        edges[e] = (a, m);
        edges.push((m, b));
        edges.push((m, leaf));
    }
    UnrootedTree::from_parts(labels.to_vec(), adj)
}

/// Parsimony ratchet: alternates hill climbing under random column
/// reweighting with hill climbing under the original weights, keeping the
/// best tree seen.
pub(crate) fn ratchet<R: Rng>(
    start: UnrootedTree,
    packed: &PackedMatrix,
    iterations: usize,
    fraction: f64,
    factor: f64,
    max_rounds: usize,
    rng: &mut R,
) -> Result<(UnrootedTree, f64)> {
    let (mut current, mut current_score) = hill_climb(start, packed, None, max_rounds)?;
    let mut best = (current.clone(), current_score);
    let m = packed.column_count();
    let k = ((fraction * m as f64).round() as usize).min(m);
    if m == 0 || k == 0 || current.leaf_count() < 4 {
        return Ok(best);
    }
    let mut cols: Vec<usize> = (0..m).collect();
    for _ in 0..iterations {
        let (chosen, _) = cols.partial_shuffle(rng, k);
        let mut heavy = vec![0u64; packed.words];
        for &c in chosen.iter() {
            heavy[c / 64] |= 1 << (c % 64);
        }
        // Columns reweighted by `factor` count `factor` times in total.
        let (perturbed, _) = hill_climb(current.clone(), packed, Some((&heavy, factor - 1.0)), max_rounds)?;
        let (t, s) = hill_climb(perturbed, packed, None, max_rounds)?;
        current = t;
        current_score = s;
        if current_score < best.1 {
            best = (current.clone(), current_score);
        }
    }
    Ok(best)
}

//! Sparse directed random graphs: the directed Erdős–Rényi model `G(n, λ/n)`
//! and digraphs with i.i.d. out-degrees and uniform destinations.
//!
//! Graphs are stored in compressed sparse row form. Every out-neighbor list
//! is sorted by destination id, so two graphs with the same edge set have
//! identical representations.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{invalid, Error, Result};

/// Immutable directed graph on vertices `0..n` without self-loops or
/// parallel edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiGraph {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

/// In-adjacency lists, derived on demand from a [`DiGraph`].
#[derive(Clone, Debug)]
pub struct InAdjacency {
    offsets: Vec<usize>,
    sources: Vec<usize>,
}

impl InAdjacency {
    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.sources[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }
}

impl DiGraph {
    /// Graph on `n` vertices with no edges.
    pub fn empty(n: usize) -> Self {
        DiGraph {
            n,
            offsets: vec![0; n + 1],
            targets: Vec::new(),
        }
    }

    /// Builds a graph from per-vertex out-neighbor lists. Lists may be in any
    /// order; self-loops, duplicates and out-of-range ids are rejected.
    pub fn from_adjacency(adj: Vec<Vec<usize>>) -> Result<Self> {
        let n = adj.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(adj.iter().map(Vec::len).sum());
        offsets.push(0);
        for (u, mut list) in adj.into_iter().enumerate() {
            list.sort_unstable();
            for (i, &v) in list.iter().enumerate() {
                if v >= n {
                    return Err(invalid(format!("edge {u}->{v} leaves the vertex range 0..{n}")));
                }
                if v == u {
                    return Err(invalid(format!("self-loop at vertex {u}")));
                }
                if i > 0 && list[i - 1] == v {
                    return Err(invalid(format!("parallel edge {u}->{v}")));
                }
            }
            targets.extend_from_slice(&list);
            offsets.push(targets.len());
        }
        Ok(DiGraph { n, offsets, targets })
    }

    /// Builds a graph from an edge list on `n` vertices.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n {
                return Err(invalid(format!("edge {u}->{v} leaves the vertex range 0..{n}")));
            }
            adj[u].push(v);
        }
        Self::from_adjacency(adj)
    }

    /// Assembles a graph from already sorted, validated per-vertex lists.
    pub(crate) fn from_sorted_lists<I>(n: usize, lists: I) -> Self
    where
        I: IntoIterator,
        I::Item: AsRef<[usize]>,
    {
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for list in lists {
            targets.extend_from_slice(list.as_ref());
            offsets.push(targets.len());
        }
        debug_assert_eq!(offsets.len(), n + 1);
        DiGraph { n, offsets, targets }
    }

    /// Complete digraph on `n` vertices (every ordered pair `u != v`).
    pub fn complete(n: usize) -> Self {
        Self::from_sorted_lists(n, (0..n).map(|u| (0..n).filter(|&v| v != u).collect::<Vec<_>>()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn out_neighbors(&self, u: usize) -> &[usize] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn max_out_degree(&self) -> usize {
        (0..self.n).map(|u| self.out_degree(u)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.out_neighbors(u).binary_search(&v).is_ok()
    }

    /// All edges in `(src, dst)` lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| self.out_neighbors(u).iter().map(move |&v| (u, v)))
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        (0..self.n).map(|u| self.out_degree(u)).collect()
    }

    /// One linear pass over the edges; in-neighbor lists come out sorted.
    pub fn in_adjacency(&self) -> InAdjacency {
        let mut offsets = vec![0usize; self.n + 1];
        for &v in &self.targets {
            offsets[v + 1] += 1;
        }
        for v in 0..self.n {
            offsets[v + 1] += offsets[v];
        }
        let mut cursor = offsets.clone();
        let mut sources = vec![0usize; self.targets.len()];
        for (u, v) in self.edges() {
            sources[cursor[v]] = u;
            cursor[v] += 1;
        }
        InAdjacency { offsets, sources }
    }

    /// Copy of this graph with the edge `u -> v` added.
    pub fn with_edge(&self, u: usize, v: usize) -> Result<Self> {
        if u >= self.n || v >= self.n {
            return Err(invalid(format!("edge {u}->{v} leaves the vertex range 0..{}", self.n)));
        }
        if u == v {
            return Err(invalid(format!("self-loop at vertex {u}")));
        }
        let pos = match self.out_neighbors(u).binary_search(&v) {
            Ok(_) => return Err(invalid(format!("edge {u}->{v} already present"))),
            Err(pos) => self.offsets[u] + pos,
        };
        let mut targets = self.targets.clone();
        targets.insert(pos, v);
        let mut offsets = self.offsets.clone();
        for off in &mut offsets[u + 1..] {
            *off += 1;
        }
        Ok(DiGraph { n: self.n, offsets, targets })
    }

    /// Writes the `src,dst` edge-list CSV, rows sorted by `(src, dst)`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["src", "dst"])?;
        for (u, v) in self.edges() {
            w.write_record([u.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a `src,dst` edge-list CSV. The vertex count is `n` when given,
    /// otherwise one more than the largest id in the file.
    pub fn read_csv<R: Read>(reader: R, n: Option<usize>) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = r.headers()?;
        if headers.len() != 2 || &headers[0] != "src" || &headers[1] != "dst" {
            return Err(Error::EdgeList(format!("expected header `src,dst`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut edges = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            let parse = |i: usize| -> Result<usize> {
                record
                    .get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::EdgeList(format!("row {}: expected two non-negative integer ids", line + 2)))
            };
            edges.push((parse(0)?, parse(1)?));
        }
        let inferred = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        let n = match n {
            Some(n) if n < inferred => {
                return Err(Error::EdgeList(format!("vertex id {} does not fit in {n} vertices", inferred - 1)));
            }
            Some(n) => n,
            None => inferred,
        };
        Self::from_edges(n, edges)
    }
}

/// A law on non-negative integers used for out-degrees and offspring counts.
pub trait DegreeLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize;
}

/// Point mass at a fixed value.
#[derive(Clone, Copy, Debug)]
pub struct FixedDegree(pub usize);

impl DegreeLaw for FixedDegree {
    fn sample<R: Rng + ?Sized>(&self, _rng: &mut R) -> usize {
        self.0
    }
}

/// `Binomial(trials, p)`; `trials = 1` gives a Bernoulli law.
#[derive(Clone, Copy, Debug)]
pub struct BinomialDegree {
    dist: Binomial,
}

impl BinomialDegree {
    pub fn new(trials: u64, p: f64) -> Result<Self> {
        let dist = Binomial::new(trials, p).map_err(|e| invalid(format!("binomial law: {e}")))?;
        Ok(BinomialDegree { dist })
    }
}

impl DegreeLaw for BinomialDegree {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng) as usize
    }
}

/// Samples `G(n, λ/n)`: each ordered pair `(u, v)`, `u != v`, is an edge
/// independently with probability `λ/n`.
///
/// Runs in time proportional to the number of edges by jumping over the
/// `n(n-1)` ordered-pair index space with geometric gaps.
pub fn gen_gnp_digraph<R: Rng + ?Sized>(n: usize, lambda: f64, rng: &mut R) -> Result<DiGraph> {
    if n < 2 {
        return Err(invalid(format!("G(n, λ/n) needs n >= 2, got n = {n}")));
    }
    if !(lambda > 0.0 && lambda < n as f64) {
        return Err(invalid(format!("G(n, λ/n) needs 0 < λ < n, got λ = {lambda}, n = {n}")));
    }
    let p = lambda / n as f64;
    let row = (n - 1) as u64;
    let total = n as u64 * row;
    let log_q = (-p).ln_1p();

    let mut offsets = Vec::with_capacity(n + 1);
    let mut targets = Vec::with_capacity((lambda * n as f64 * 1.1) as usize + 16);
    offsets.push(0);
    let mut current_row = 0u64;
    // Index of the next candidate pair.
    let mut next = 0u64;
    loop {
        let u01: f64 = rng.random();
        let gap = ((1.0 - u01).ln() / log_q).floor();
        if !(gap < (total - next) as f64) {
            break;
        }
        let idx = next + gap as u64;
        if idx >= total {
            break;
        }
        let src = idx / row;
        while current_row < src {
            offsets.push(targets.len());
            current_row += 1;
        }
        let j = (idx % row) as usize;
        let dst = if j >= src as usize { j + 1 } else { j };
        targets.push(dst);
        next = idx + 1;
    }
    while offsets.len() < n + 1 {
        offsets.push(targets.len());
    }
    Ok(DiGraph { n, offsets, targets })
}

/// Samples a digraph whose out-degrees are i.i.d. draws from `law` and whose
/// out-neighbor sets are uniform subsets of the other `n - 1` vertices.
pub fn gen_iid_outdegree_digraph<L, R>(n: usize, law: &L, rng: &mut R) -> Result<DiGraph>
where
    L: DegreeLaw + ?Sized,
    R: Rng + ?Sized,
{
    let mut offsets = Vec::with_capacity(n + 1);
    let mut targets = Vec::new();
    offsets.push(0);
    for u in 0..n {
        let k = law.sample(rng);
        if k > n.saturating_sub(1) {
            return Err(Error::InvalidSample { degree: k, n });
        }
        let start = targets.len();
        targets.extend(
            rand::seq::index::sample(rng, n - 1, k)
                .into_iter()
                .map(|j| if j >= u { j + 1 } else { j }),
        );
        targets[start..].sort_unstable();
        offsets.push(targets.len());
    }
    Ok(DiGraph { n, offsets, targets })
}

/// Fraction of vertices with no out-edges.
pub fn zero_outdegree_fraction(g: &DiGraph) -> f64 {
    if g.n() == 0 {
        return 0.0;
    }
    let zeros = (0..g.n()).filter(|&u| g.out_degree(u) == 0).count();
    zeros as f64 / g.n() as f64
}

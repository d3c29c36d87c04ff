//! Strongly connected components and the bow-tie around the largest one.

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::randgraph::DiGraph;

/// Component label per vertex. Components are numbered in reverse
/// topological order of the condensation: component 0 has no edges into
/// any other component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SccLabels {
    pub labels: Vec<usize>,
    pub count: usize,
}

impl SccLabels {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count];
        for &c in &self.labels {
            sizes[c] += 1;
        }
        sizes
    }

    /// Members of every component, each sorted.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut comps = vec![Vec::new(); self.count];
        for (v, &c) in self.labels.iter().enumerate() {
            comps[c].push(v);
        }
        comps
    }
}

/// Tarjan's lowlink algorithm with an explicit call stack.
pub fn scc_decompose(g: &DiGraph) -> SccLabels {
    const UNSEEN: usize = usize::MAX;
    let n = g.n();
    let mut index = vec![UNSEEN; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = FixedBitSet::with_capacity(n);
    let mut stack: Vec<usize> = Vec::new();
    let mut labels = vec![UNSEEN; n];
    let mut count = 0;
    let mut next_index = 0;
    // (vertex, position in its out-neighbor list)
    let mut calls: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        calls.push((root, 0));
        index[root] = next_index;
        lowlink[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack.insert(root);

        while let Some(&mut (v, ref mut pos)) = calls.last_mut() {
            let nb = g.out_neighbors(v);
            if *pos < nb.len() {
                let w = nb[*pos];
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    lowlink[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack.insert(w);
                    calls.push((w, 0));
                } else if on_stack.contains(w) {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
                continue;
            }
            calls.pop();
            if let Some(&(parent, _)) = calls.last() {
                lowlink[parent] = lowlink[parent].min(lowlink[v]);
            }
            if lowlink[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack holds the component root");
                    on_stack.set(w, false);
                    labels[w] = count;
                    if w == v {
                        break;
                    }
                }
                count += 1;
            }
        }
    }
    SccLabels { labels, count }
}

/// Largest strongly connected component with the vertices that reach it
/// (`in_set`) and the vertices it reaches (`out_set`). Both sets contain the
/// component itself. All sets are sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BowTie {
    pub n: usize,
    pub scc_labels: SccLabels,
    pub largest_scc: Vec<usize>,
    pub in_set: Vec<usize>,
    pub out_set: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BowTieSummary {
    pub n: usize,
    pub scc_size: usize,
    pub in_size: usize,
    pub out_size: usize,
    pub in_frac: f64,
    pub out_frac: f64,
    pub scc_frac: f64,
}

impl BowTie {
    pub fn in_frac(&self) -> f64 {
        self.in_set.len() as f64 / self.n as f64
    }

    pub fn out_frac(&self) -> f64 {
        self.out_set.len() as f64 / self.n as f64
    }

    pub fn scc_frac(&self) -> f64 {
        self.largest_scc.len() as f64 / self.n as f64
    }

    pub fn summary(&self) -> BowTieSummary {
        BowTieSummary {
            n: self.n,
            scc_size: self.largest_scc.len(),
            in_size: self.in_set.len(),
            out_size: self.out_set.len(),
            in_frac: self.in_frac(),
            out_frac: self.out_frac(),
            scc_frac: self.scc_frac(),
        }
    }
}

/// Extracts the bow-tie of `g`. Ties for the largest component go to the
/// one containing the smallest vertex id.
pub fn bowtie_extract(g: &DiGraph) -> Result<BowTie> {
    let n = g.n();
    if n == 0 {
        return Err(invalid("bow-tie of a graph without vertices"));
    }
    let scc = scc_decompose(g);
    let sizes = scc.sizes();
    // Scanning vertices in id order, the first component seen at maximum
    // size is the one with the smallest minimum id.
    let best = *sizes.iter().max().expect("n > 0");
    let giant = scc.labels.iter().copied().find(|&c| sizes[c] == best).expect("n > 0");
    let largest_scc: Vec<usize> = (0..n).filter(|&v| scc.labels[v] == giant).collect();

    let out_set = sweep(n, &largest_scc, |v| g.out_neighbors(v));
    let inn = g.in_adjacency();
    let in_set = sweep(n, &largest_scc, |v| inn.in_neighbors(v));
    Ok(BowTie { n, scc_labels: scc, largest_scc, in_set, out_set })
}

fn sweep<'a, F>(n: usize, start: &[usize], neighbors: F) -> Vec<usize>
where
    F: Fn(usize) -> &'a [usize],
{
    let mut seen = FixedBitSet::with_capacity(n);
    let mut queue: VecDeque<usize> = start.iter().copied().collect();
    for &s in start {
        seen.insert(s);
    }
    while let Some(u) = queue.pop_front() {
        for &v in neighbors(u) {
            if !seen.put(v) {
                queue.push_back(v);
            }
        }
    }
    seen.ones().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, edges: &[(usize, usize)]) -> DiGraph {
        DiGraph::from_edges(n, edges.iter().copied()).unwrap()
    }

    #[test]
    fn scc_examples() {
        let cycle = scc_decompose(&g(3, &[(0, 1), (1, 2), (2, 0)]));
        assert_eq!(cycle.count, 1);

        let path = scc_decompose(&g(3, &[(0, 1), (1, 2)]));
        assert_eq!(path.count, 3);
        // reverse topological: the sink comes first
        assert_eq!(path.labels, vec![2, 1, 0]);

        let joined = scc_decompose(&g(4, &[(0, 1), (1, 0), (2, 3), (3, 2), (1, 2)]));
        assert_eq!(joined.count, 2);
        assert_eq!(joined.sizes(), vec![2, 2]);
        assert_eq!(joined.labels, vec![1, 1, 0, 0]);
    }

    #[test]
    fn scc_survives_long_paths() {
        let n = 300_000;
        let path = DiGraph::from_edges(n, (0..n - 1).map(|i| (i, i + 1))).unwrap();
        assert_eq!(scc_decompose(&path).count, n);
        let ring = DiGraph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap();
        assert_eq!(scc_decompose(&ring).count, 1);
    }

    #[test]
    fn bowtie_with_tails() {
        // cycle 1 -> 2 -> 3 -> 1, tail 0 -> 1, exit 3 -> 4
        let bt = bowtie_extract(&g(5, &[(0, 1), (1, 2), (2, 3), (3, 1), (3, 4)])).unwrap();
        assert_eq!(bt.largest_scc, vec![1, 2, 3]);
        assert_eq!(bt.in_set, vec![0, 1, 2, 3]);
        assert_eq!(bt.out_set, vec![1, 2, 3, 4]);
    }

    #[test]
    fn bowtie_edgeless_tie_break() {
        let bt = bowtie_extract(&DiGraph::empty(5)).unwrap();
        assert_eq!(bt.largest_scc, vec![0]);
        assert_eq!((bt.in_frac(), bt.out_frac(), bt.scc_frac()), (0.2, 0.2, 0.2));
    }

    #[test]
    fn bowtie_tie_break_prefers_smallest_id() {
        // two 2-cycles {3, 4} and {1, 2}
        let bt = bowtie_extract(&g(5, &[(3, 4), (4, 3), (1, 2), (2, 1)])).unwrap();
        assert_eq!(bt.largest_scc, vec![1, 2]);
    }

    #[test]
    fn bowtie_complete() {
        let bt = bowtie_extract(&DiGraph::complete(4)).unwrap();
        assert_eq!(bt.summary().scc_size, 4);
        assert_eq!((bt.in_frac(), bt.out_frac(), bt.scc_frac()), (1.0, 1.0, 1.0));
    }

    #[test]
    fn bowtie_rejects_empty_vertex_set() {
        assert!(bowtie_extract(&DiGraph::empty(0)).is_err());
    }

    #[test]
    fn summary_json_layout() {
        let bt = bowtie_extract(&DiGraph::complete(2)).unwrap();
        let json = serde_json::to_string(&bt.summary()).unwrap();
        assert_eq!(
            json,
            r#"{"n":2,"scc_size":2,"in_size":2,"out_size":2,"in_frac":1.0,"out_frac":1.0,"scc_frac":1.0}"#
        );
    }
}

//! Brute-force reference computations for small graphs.
//!
//! These work from a plain edge list with `i64` rationals and share no code
//! with the cascade engine or the SCC routine, so they can check them.

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;

/// Small instance: `n <= 20` vertices, edge list, `L` and `C` as `(num, den)`.
#[derive(Clone, Debug)]
pub struct SmallInstance {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub liabilities: (i64, i64),
    pub leverage: (i64, i64),
}

impl SmallInstance {
    fn equity(&self) -> Ratio<i64> {
        let l = Ratio::new(self.liabilities.0, self.liabilities.1);
        let c = Ratio::new(self.leverage.0, self.leverage.1);
        l / (c - 1)
    }

    /// Per target, its senders with the exposure of the connecting edge.
    fn weighted_in_edges(&self) -> Vec<Vec<(usize, Ratio<i64>)>> {
        let l = Ratio::new(self.liabilities.0, self.liabilities.1);
        let mut deg = vec![0i64; self.n];
        for &(u, _) in &self.edges {
            deg[u] += 1;
        }
        let mut inn = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            inn[v].push((u, l / deg[u]));
        }
        inn
    }

    fn crosses(set: u32, in_edges: &[(usize, Ratio<i64>)], equity: Ratio<i64>) -> bool {
        let sum: Ratio<i64> = in_edges
            .iter()
            .filter(|(u, _)| set & (1 << u) != 0)
            .map(|&(_, w)| w)
            .sum();
        sum >= equity
    }

    /// Terminal default set as the least set `X ⊇ S_0` that is closed
    /// (no outside vertex crosses its threshold against `X`), found by
    /// checking all `2^n` subsets. Returned as a sorted list.
    pub fn least_closed_superset(&self, shock: &[usize]) -> Vec<usize> {
        assert!(self.n <= 20, "brute force is limited to n <= 20");
        let inn = self.weighted_in_edges();
        let equity = self.equity();
        let seed: u32 = shock.iter().fold(0, |m, &v| m | (1 << v));
        let mut best: Option<u32> = None;
        let mut meet: u32 = (1u32 << self.n) - 1;
        for set in 0u32..(1u32 << self.n) {
            if set & seed != seed {
                continue;
            }
            let closed = (0..self.n)
                .filter(|&v| set & (1 << v) == 0)
                .all(|v| !Self::crosses(set, &inn[v], equity));
            if closed {
                meet &= set;
                if best.is_none_or(|b| set.count_ones() < b.count_ones()) {
                    best = Some(set);
                }
            }
        }
        let best = best.expect("the full vertex set is always closed");
        // Closed sets of a monotone map are closed under intersection, so the
        // smallest one is the intersection of all of them.
        assert_eq!(best, meet, "least closed set is not unique");
        (0..self.n).filter(|&v| best & (1 << v) != 0).collect()
    }

    /// Asynchronous cascade: repeatedly default one eligible vertex chosen at
    /// random until none is left.
    pub fn sequential_cascade<R: Rng + ?Sized>(&self, shock: &[usize], rng: &mut R) -> Vec<usize> {
        let inn = self.weighted_in_edges();
        let equity = self.equity();
        let mut set: u32 = shock.iter().fold(0, |m, &v| m | (1 << v));
        loop {
            let mut eligible: Vec<usize> = (0..self.n)
                .filter(|&v| set & (1 << v) == 0 && Self::crosses(set, &inn[v], equity))
                .collect();
            if eligible.is_empty() {
                break;
            }
            eligible.shuffle(rng);
            set |= 1 << eligible[0];
        }
        (0..self.n).filter(|&v| set & (1 << v) != 0).collect()
    }
}

/// Strongly connected components from the transitive closure: `u` and `v`
/// share a component iff each reaches the other. Returns the partition with
/// each block sorted and blocks ordered by smallest member.
pub fn brute_force_scc(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut reach = vec![vec![false; n]; n];
    for (v, row) in reach.iter_mut().enumerate() {
        row[v] = true;
    }
    for &(u, v) in edges {
        reach[u][v] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut assigned = vec![false; n];
    let mut blocks = Vec::new();
    for u in 0..n {
        if assigned[u] {
            continue;
        }
        let block: Vec<usize> = (0..n).filter(|&v| reach[u][v] && reach[v][u]).collect();
        for &v in &block {
            assigned[v] = true;
        }
        blocks.push(block);
    }
    blocks
}

/// Random simple digraph on `n` vertices where each ordered pair is an edge
/// with probability `p`.
pub fn random_edges<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    edges
}

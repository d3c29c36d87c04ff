//! The sender-truncated graph: only out-edges of active senders survive,
//! which is exactly the part of the network along which one counterparty
//! failure alone can trigger another.

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use rand::Rng;
use statrs::distribution::{Binomial, Discrete};

use crate::error::{invalid, Result};
use crate::randgraph::{BinomialDegree, DegreeLaw, DiGraph};

/// Keeps every out-edge of `u` when `d_out(u) <= d_star` in `g`, and none
/// otherwise. Degrees are always measured in `g`, never in the result.
pub fn build_single_hit(g: &DiGraph, d_star: usize) -> DiGraph {
    DiGraph::from_sorted_lists(
        g.n(),
        (0..g.n()).map(|u| {
            let nb = g.out_neighbors(u);
            if nb.len() <= d_star {
                nb
            } else {
                &[][..]
            }
        }),
    )
}

/// Forward-reachable set, with the order in which a breadth-first search
/// discovered it.
#[derive(Clone, Debug)]
pub struct Reach {
    visited: FixedBitSet,
    order: Vec<usize>,
}

impl Reach {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.visited.contains(v)
    }

    /// Discovery order; sources come first in the order given.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn to_sorted_vec(&self) -> Vec<usize> {
        self.visited.ones().collect()
    }

    pub fn is_superset_of(&self, other: &[usize]) -> bool {
        other.iter().all(|&v| self.contains(v))
    }
}

/// Vertices with a directed path from some source, sources included.
/// Duplicate sources are ignored.
pub fn forward_reach(g: &DiGraph, sources: &[usize]) -> Result<Reach> {
    if let Some(&bad) = sources.iter().find(|&&s| s >= g.n()) {
        return Err(invalid(format!("source {bad} is outside 0..{}", g.n())));
    }
    let mut visited = FixedBitSet::with_capacity(g.n());
    let mut order = Vec::new();
    let mut frontier = VecDeque::new();
    for &s in sources {
        if !visited.put(s) {
            order.push(s);
            frontier.push_back(s);
        }
    }
    while let Some(u) = frontier.pop_front() {
        for &v in g.out_neighbors(u) {
            if !visited.put(v) {
                order.push(v);
                frontier.push_back(v);
            }
        }
    }
    Ok(Reach { visited, order })
}

/// Law of `K = B * 1{B <= d*}` with `B ~ Binomial(n - 1, λ/n)`: the number
/// of out-edges a vertex keeps after sender truncation.
#[derive(Clone, Debug)]
pub struct TruncatedDegreeLaw {
    n: usize,
    lambda: f64,
    d_star: usize,
    binomial: BinomialDegree,
    pmf: Vec<f64>,
}

impl TruncatedDegreeLaw {
    pub fn new(n: usize, lambda: f64, d_star: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("truncated degree law needs n >= 2, got {n}")));
        }
        if !(lambda > 0.0 && lambda < n as f64) {
            return Err(invalid(format!("truncated degree law needs 0 < λ < n, got λ = {lambda}")));
        }
        let p = lambda / n as f64;
        let trials = (n - 1) as u64;
        let exact = Binomial::new(p, trials).map_err(|e| invalid(format!("binomial law: {e}")))?;
        let top = d_star.min(n - 1);
        let mut pmf: Vec<f64> = (0..=top).map(|k| exact.pmf(k as u64)).collect();
        // Everything above the cutoff is truncated to zero.
        pmf[0] = 1.0 - pmf[1..].iter().sum::<f64>();
        Ok(TruncatedDegreeLaw {
            n,
            lambda,
            d_star,
            binomial: BinomialDegree::new(trials, p)?,
            pmf,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn d_star(&self) -> usize {
        self.d_star
    }

    /// `P(K = k)`.
    pub fn pmf(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }

    /// Probabilities on `0..=min(d*, n-1)`.
    pub fn pmf_table(&self) -> &[f64] {
        &self.pmf
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.pmf.iter().enumerate().map(|(k, p)| (k as f64 - m).powi(2) * p).sum()
    }
}

impl DegreeLaw for TruncatedDegreeLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let b = self.binomial.sample(rng);
        if b <= self.d_star {
            b
        } else {
            0
        }
    }
}

/// Sampler for the out-degree law of the sender-truncated `G(n, λ/n)`.
pub fn truncated_outdegree_sampler(n: usize, lambda: f64, d_star: usize) -> Result<TruncatedDegreeLaw> {
    TruncatedDegreeLaw::new(n, lambda, d_star)
}

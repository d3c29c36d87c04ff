//! Default cascades with zero recovery.
//!
//! Starting from `D_0 = S_0`, a vertex `v` outside `D_t` joins `D_{t+1}` when
//! the exposures it holds on *all* of `D_t` add up to at least its equity.
//! Rounds are synchronous. Exposures are accumulated exactly, once per
//! defaulted sender, so each round costs time proportional to the out-edges
//! of the vertices that defaulted in the previous round.

use std::collections::{BTreeMap, HashMap};

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::balancesheet::BalanceSheet;
use crate::error::{invalid, Result};
use crate::randgraph::DiGraph;

/// Hits that vertex `v` took from the vertices that defaulted in one round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundHits {
    /// Round of the senders: `0` for the shock, `t` for `Δ_t`.
    pub round: usize,
    pub senders: Vec<usize>,
}

/// Round-by-round record of one cascade.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CascadeTrace {
    n: usize,
    shock: Vec<usize>,
    rounds: Vec<Vec<usize>>,
    terminal_set: Vec<usize>,
    /// For every defaulted vertex outside the shock, the hits it received
    /// before it defaulted.
    hit_profile: BTreeMap<usize, Vec<RoundHits>>,
    round_double_hit_count: usize,
    multi_hit_defaults: Vec<usize>,
}

impl CascadeTrace {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted shock set `S_0`.
    pub fn shock(&self) -> &[usize] {
        &self.shock
    }

    /// `Δ_1, Δ_2, ...`, each sorted. Empty when nothing beyond the shock
    /// defaults.
    pub fn rounds(&self) -> &[Vec<usize>] {
        &self.rounds
    }

    /// Sorted terminal default set `D_∞`.
    pub fn terminal_set(&self) -> &[usize] {
        &self.terminal_set
    }

    pub fn terminal_size(&self) -> usize {
        self.terminal_set.len()
    }

    pub fn hit_profile(&self) -> &BTreeMap<usize, Vec<RoundHits>> {
        &self.hit_profile
    }

    /// Number of `(t, v)` with `v` outside `D_t` hit by at least two members
    /// of `Δ_t`.
    pub fn round_double_hit_count(&self) -> usize {
        self.round_double_hit_count
    }

    /// Defaults that no single active sender could have caused alone.
    pub fn multi_hit_defaults(&self) -> &[usize] {
        &self.multi_hit_defaults
    }

    /// Sizes `|Δ_0| = |S_0|, |Δ_1|, ...`.
    pub fn delta_sizes(&self) -> Vec<usize> {
        std::iter::once(self.shock.len()).chain(self.rounds.iter().map(Vec::len)).collect()
    }

    /// Round at which each defaulted vertex joined (`0` for the shock).
    pub fn default_round(&self) -> HashMap<usize, usize> {
        let mut map: HashMap<usize, usize> = self.shock.iter().map(|&v| (v, 0)).collect();
        for (t, delta) in self.rounds.iter().enumerate() {
            map.extend(delta.iter().map(|&v| (v, t + 1)));
        }
        map
    }

    pub fn to_json(&self) -> TraceJson<'_> {
        TraceJson {
            shock: &self.shock,
            rounds: &self.rounds,
            terminal_size: self.terminal_set.len(),
            multi_hit_ids: &self.multi_hit_defaults,
            round_double_hits: self.round_double_hit_count,
        }
    }
}

/// Serialized form of a trace; fields appear in this order.
#[derive(Clone, Debug, Serialize)]
pub struct TraceJson<'a> {
    pub shock: &'a [usize],
    pub rounds: &'a [Vec<usize>],
    pub terminal_size: usize,
    pub multi_hit_ids: &'a [usize],
    pub round_double_hits: usize,
}

/// Runs the cascade from `shock` to its fixed point.
pub fn run_cascade(g: &DiGraph, bs: &BalanceSheet, shock: &[usize]) -> Result<CascadeTrace> {
    let n = g.n();
    if shock.is_empty() {
        return Err(invalid("the initial shock must contain at least one vertex"));
    }
    if let Some(&bad) = shock.iter().find(|&&v| v >= n) {
        return Err(invalid(format!("shocked vertex {bad} is outside 0..{n}")));
    }
    let mut shock = shock.to_vec();
    shock.sort_unstable();
    shock.dedup();

    let equity = bs.equity().inner();
    let mut defaulted = vec![false; n];
    for &v in &shock {
        defaulted[v] = true;
    }
    let mut exposure: HashMap<usize, BigRational> = HashMap::new();
    let mut hits: HashMap<usize, Vec<RoundHits>> = HashMap::new();
    let mut rounds = Vec::new();
    let mut round_double_hit_count = 0;

    let mut frontier = shock.clone();
    let mut t = 0;
    while !frontier.is_empty() {
        // Targets touched this round, with the senders from Δ_t that hit them.
        let mut touched: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &u in &frontier {
            let targets = g.out_neighbors(u);
            if targets.is_empty() {
                continue;
            }
            let w = bs.exposure_raw(targets.len());
            for &v in targets {
                if defaulted[v] {
                    continue;
                }
                *exposure.entry(v).or_insert_with(BigRational::zero) += &w;
                touched.entry(v).or_default().push(u);
            }
        }
        let mut next = Vec::new();
        for (v, senders) in touched {
            if senders.len() >= 2 {
                round_double_hit_count += 1;
            }
            hits.entry(v).or_default().push(RoundHits { round: t, senders });
            if exposure[&v] >= *equity {
                next.push(v);
            }
        }
        for &v in &next {
            defaulted[v] = true;
        }
        if !next.is_empty() {
            rounds.push(next.clone());
        }
        frontier = next;
        t += 1;
    }

    let terminal_set: Vec<usize> = (0..n).filter(|&v| defaulted[v]).collect();
    let hit_profile: BTreeMap<usize, Vec<RoundHits>> = hits
        .into_iter()
        .filter(|(v, _)| defaulted[*v])
        .collect();
    let mut trace = CascadeTrace {
        n,
        shock,
        rounds,
        terminal_set,
        hit_profile,
        round_double_hit_count,
        multi_hit_defaults: Vec::new(),
    };
    trace.multi_hit_defaults = classify_hits(&trace, g, bs)?.multi_hit;
    Ok(trace)
}

/// Single-hit versus multi-hit defaults of a finished cascade.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HitClassification {
    /// Defaults with an active in-neighbor that defaulted strictly earlier;
    /// that one edge alone meets the equity threshold.
    pub single_hit: Vec<usize>,
    /// The remaining defaults outside the shock.
    pub multi_hit: Vec<usize>,
    pub round_double_hit_count: usize,
}

/// Splits the defaults of `trace` outside the shock into single-hit and
/// multi-hit ones.
pub fn classify_hits(trace: &CascadeTrace, g: &DiGraph, bs: &BalanceSheet) -> Result<HitClassification> {
    if trace.n != g.n() {
        return Err(invalid(format!("trace has {} vertices but the graph has {}", trace.n, g.n())));
    }
    let mut single_hit = Vec::new();
    let mut multi_hit = Vec::new();
    for (&v, profile) in &trace.hit_profile {
        let mut single = false;
        for hit in profile {
            for &u in &hit.senders {
                if !g.has_edge(u, v) {
                    return Err(invalid(format!("trace records a hit {u}->{v} that is not an edge of the graph")));
                }
                let d = g.out_degree(u);
                single |= d >= 1 && bs.is_active(d);
            }
        }
        if single {
            single_hit.push(v);
        } else {
            multi_hit.push(v);
        }
    }
    Ok(HitClassification {
        single_hit,
        multi_hit,
        round_double_hit_count: trace.round_double_hit_count,
    })
}

/// Whether the cascade reached at least `ceil(εn)` institutions.
pub fn is_systemic(trace: &CascadeTrace, epsilon: f64, n: usize) -> bool {
    trace.terminal_size() >= systemic_threshold(epsilon, n)
}

/// `ceil(εn)`.
pub fn systemic_threshold(epsilon: f64, n: usize) -> usize {
    (epsilon * n as f64).ceil() as usize
}

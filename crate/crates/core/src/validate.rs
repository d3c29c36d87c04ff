//! Small-graph consistency checks of the engine against brute force.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::balancesheet::{d_star, edge_exposure, equity, BalanceSheet, Rational};
use crate::bowtie::scc_decompose;
use crate::cascade::run_cascade;
use crate::error::Result;
use crate::harness::nonmono_demo;
use crate::oracle::{brute_force_scc, random_edges, SmallInstance};
use crate::randgraph::DiGraph;
use crate::singlehit::{build_single_hit, forward_reach};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub detail: String,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

pub const LAMBDAS: [f64; 3] = [0.5, 2.0, 4.0];
pub const LEVERAGES: [(i64, i64); 3] = [(3, 2), (5, 2), (4, 1)];

/// Random cascade instance with `n <= max_n` vertices and a shock of one to
/// three vertices.
pub fn random_instance<R: Rng + ?Sized>(max_n: usize, rng: &mut R) -> (SmallInstance, Vec<usize>) {
    let n = rng.random_range(2..=max_n);
    let lambda = LAMBDAS[rng.random_range(0..LAMBDAS.len())];
    let leverage = LEVERAGES[rng.random_range(0..LEVERAGES.len())];
    let edges = random_edges(n, (lambda / n as f64).min(1.0), rng);
    let k = rng.random_range(1..=3.min(n));
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    let shock = ids[..k].to_vec();
    (SmallInstance { n, edges, liabilities: (1, 1), leverage }, shock)
}

fn sheet(inst: &SmallInstance) -> Result<BalanceSheet> {
    BalanceSheet::new(
        Rational::new(inst.liabilities.0, inst.liabilities.1),
        Rational::new(inst.leverage.0, inst.leverage.1),
    )
}

/// Terminal default sets against the least closed superset of the shock.
pub fn check_fixed_point(instances: usize, max_n: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut detail = String::new();
    for i in 0..instances {
        let (inst, shock) = random_instance(max_n, &mut rng);
        let g = DiGraph::from_edges(inst.n, inst.edges.iter().copied())?;
        let got = run_cascade(&g, &sheet(&inst)?, &shock)?;
        let want = inst.least_closed_superset(&shock);
        if got.terminal_set() != want.as_slice() {
            failures += 1;
            if detail.is_empty() {
                detail = format!("instance {i}: engine {:?}, brute force {want:?}", got.terminal_set());
            }
        }
    }
    Ok(Check { name: "cascade equals least fixed point", cases: instances, failures, detail })
}

/// Terminal sets against asynchronous cascades in random orders.
pub fn check_order_independence(instances: usize, max_n: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut detail = String::new();
    for i in 0..instances {
        let (inst, shock) = random_instance(max_n, &mut rng);
        let g = DiGraph::from_edges(inst.n, inst.edges.iter().copied())?;
        let got = run_cascade(&g, &sheet(&inst)?, &shock)?;
        for _ in 0..3 {
            let alt = inst.sequential_cascade(&shock, &mut rng);
            if got.terminal_set() != alt.as_slice() {
                failures += 1;
                if detail.is_empty() {
                    detail = format!("instance {i}: synchronous {:?}, sequential {alt:?}", got.terminal_set());
                }
                break;
            }
        }
    }
    Ok(Check { name: "update order does not change the outcome", cases: instances, failures, detail })
}

/// Truncated-graph reach is inside the cascade, and equals it when no
/// multi-hit default occurred.
pub fn check_single_hit_reach(instances: usize, max_n: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut detail = String::new();
    for i in 0..instances {
        let (inst, shock) = random_instance(max_n, &mut rng);
        let g = DiGraph::from_edges(inst.n, inst.edges.iter().copied())?;
        let bs = sheet(&inst)?;
        let trace = run_cascade(&g, &bs, &shock)?;
        let reach = forward_reach(&build_single_hit(&g, bs.d_star()), &shock)?.to_sorted_vec();
        let inside = reach.iter().all(|v| trace.terminal_set().binary_search(v).is_ok());
        let equal_when_clean = !trace.multi_hit_defaults().is_empty() || reach == trace.terminal_set();
        if !(inside && equal_when_clean) {
            failures += 1;
            if detail.is_empty() {
                detail = format!("instance {i}: reach {reach:?}, cascade {:?}", trace.terminal_set());
            }
        }
    }
    Ok(Check { name: "single-hit reach vs cascade", cases: instances, failures, detail })
}

/// Component partition against the transitive-closure partition.
pub fn check_scc(instances: usize, max_n: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut detail = String::new();
    for i in 0..instances {
        let n = rng.random_range(1..=max_n);
        let p = rng.random_range(0.05..0.5);
        let edges = random_edges(n, p, &mut rng);
        let g = DiGraph::from_edges(n, edges.iter().copied())?;
        let mut got = scc_decompose(&g).components();
        got.sort();
        let want = brute_force_scc(n, &edges);
        if got != want {
            failures += 1;
            if detail.is_empty() {
                detail = format!("instance {i}: tarjan {got:?}, closure {want:?}");
            }
        }
    }
    Ok(Check { name: "strong components match transitive closure", cases: instances, failures, detail })
}

/// `L/d >= E` exactly when `d <= d*`, over a grid of `C` in `(1, 20]`.
pub fn check_cutoff_equivalence() -> Result<Check> {
    let mut cases = 0;
    let mut failures = 0;
    let mut detail = String::new();
    let l = Rational::new(3, 7);
    for den in 1..=12i64 {
        for num in (den + 1)..=(20 * den) {
            let c = Rational::new(num, den);
            let e = equity(&l, &c)?;
            let ds = d_star(&l, &c)?;
            for d in 1..=40usize {
                cases += 1;
                if (edge_exposure(&l, d)? >= e) != (d <= ds) {
                    failures += 1;
                    if detail.is_empty() {
                        detail = format!("C = {c}, d = {d}, d* = {ds}");
                    }
                }
            }
        }
    }
    Ok(Check { name: "cutoff and threshold agree", cases, failures, detail })
}

/// Adding an edge shrinks the cascade at `C = 5/2` and grows it at `C = 4`.
pub fn check_nonmonotone_witness() -> Result<Check> {
    let got = [
        nonmono_demo(&Rational::new(5, 2))?,
        nonmono_demo(&Rational::from_integer(4))?,
        nonmono_demo(&Rational::new(3, 2))?,
    ];
    let want = [(2, 1), (2, 3), (1, 1)];
    let failures = got.iter().zip(&want).filter(|(g, w)| g != w).count();
    Ok(Check {
        name: "edge addition can shrink the cascade",
        cases: 3,
        failures,
        detail: format!("C = 5/2, 4, 3/2 gave {got:?}"),
    })
}

/// The whole small-`n` suite.
pub fn run_all(seed: u64) -> Result<Vec<Check>> {
    Ok(vec![
        check_fixed_point(1000, 12, seed)?,
        check_order_independence(500, 10, seed.wrapping_add(1))?,
        check_single_hit_reach(1000, 12, seed.wrapping_add(2))?,
        check_scc(1000, 10, seed.wrapping_add(3))?,
        check_cutoff_equivalence()?,
        check_nonmonotone_witness()?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes() {
        for check in [
            check_fixed_point(100, 8, 1).unwrap(),
            check_order_independence(50, 8, 2).unwrap(),
            check_single_hit_reach(100, 8, 3).unwrap(),
            check_scc(100, 8, 4).unwrap(),
            check_nonmonotone_witness().unwrap(),
        ] {
            assert!(check.passed(), "{}: {}", check.name, check.detail);
        }
    }
}

//! Closed-form branching quantities, a Galton–Watson total-progeny
//! simulator and the fan-in accumulation bound.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::randgraph::DegreeLaw;

/// `P(Poisson(λ) <= k)`; zero for `k < 0`.
pub fn poisson_cdf(lambda: f64, k: i64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(invalid(format!("Poisson mean must be non-negative, got {lambda}")));
    }
    if k < 0 {
        return Ok(0.0);
    }
    let mut term = (-lambda).exp();
    let mut sum = term;
    for j in 0..k {
        term *= lambda / (j + 1) as f64;
        sum += term;
    }
    Ok(sum.min(1.0))
}

/// Branching mean `ρ_out = E[D 1{D <= d*}] = λ P(D <= d* - 1)` for
/// `D ~ Poisson(λ)`.
pub fn rho_out(lambda: f64, d_star: usize) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(invalid(format!("λ must be positive, got {lambda}")));
    }
    Ok(lambda * poisson_cdf(lambda, d_star as i64 - 1)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchingParams {
    lambda: f64,
    d_star: usize,
    rho_out: f64,
}

impl BranchingParams {
    pub fn new(lambda: f64, d_star: usize) -> Result<Self> {
        Ok(BranchingParams { lambda, d_star, rho_out: rho_out(lambda, d_star)? })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn d_star(&self) -> usize {
        self.d_star
    }

    pub fn rho_out(&self) -> f64 {
        self.rho_out
    }

    pub fn regime(&self) -> Regime {
        if self.rho_out < 1.0 {
            Regime::Subcritical
        } else if self.rho_out > 1.0 {
            Regime::Supercritical
        } else {
            Regime::Critical
        }
    }
}

/// Total population of a Galton–Watson process started from `initial`
/// particles, stopped once it reaches `cap`.
pub fn gw_total_progeny<L, R>(offspring: &L, initial: usize, cap: usize, rng: &mut R) -> Result<usize>
where
    L: DegreeLaw + ?Sized,
    R: Rng + ?Sized,
{
    if initial == 0 {
        return Err(invalid("a Galton–Watson process needs at least one initial particle"));
    }
    if cap < initial {
        return Err(invalid(format!("cap {cap} is below the initial population {initial}")));
    }
    let mut total = initial;
    let mut pending = initial;
    while pending > 0 && total < cap {
        pending -= 1;
        let children = offspring.sample(rng);
        total = total.saturating_add(children);
        pending = pending.saturating_add(children);
    }
    Ok(total.min(cap))
}

/// Union bound `min(1, Σ_t λ² |Δ_t|² / n)` on the probability of any
/// same-round double hit.
pub fn multi_hit_bound(lambda: f64, delta_sizes: &[usize], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(invalid("multi-hit bound needs n >= 1"));
    }
    let sum: f64 = delta_sizes.iter().map(|&s| lambda * lambda * (s as f64).powi(2) / n as f64).sum();
    Ok(sum.min(1.0))
}

/// Shock size `k_n = ceil(c ln n)`.
pub fn shock_size(n: usize, c: f64) -> Result<usize> {
    if n < 2 {
        return Err(invalid(format!("shock size needs n >= 2, got {n}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid(format!("shock constant c must be positive, got {c}")));
    }
    let k = (c * (n as f64).ln()).ceil() as usize;
    if k > n {
        return Err(invalid(format!("shock size ceil({c} ln {n}) = {k} exceeds n = {n}")));
    }
    Ok(k)
}

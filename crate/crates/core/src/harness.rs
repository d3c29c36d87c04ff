//! Reproducible Monte Carlo experiments.
//!
//! Every trial draws its randomness from streams that are pure functions of
//! `(master_seed, n, trial_index, purpose)`, so results do not depend on
//! the number of worker threads or on scheduling. Per-trial outcomes are
//! collected in trial order before they are folded into statistics.

use std::collections::{BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{multi_hit_bound, rho_out, shock_size};
use crate::balancesheet::{BalanceSheet, Rational};
use crate::bowtie::bowtie_extract;
use crate::cascade::{is_systemic, run_cascade, CascadeTrace, TraceJson};
use crate::error::{invalid, Error, Result};
use crate::randgraph::{gen_gnp_digraph, gen_iid_outdegree_digraph, DiGraph};
use crate::singlehit::{build_single_hit, forward_reach, truncated_outdegree_sampler};
use crate::stats::{chi_square_two_sample, ks_two_sample, mean, std_dev, wilson_interval, TestResult, Z_95};

/// Significance level of the identification tests.
pub const TEST_LEVEL: f64 = 0.01;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Cascade,
    ReachScaling,
    Bowtie,
    Identification,
    NonmonoDemo,
}

fn one() -> Rational {
    Rational::from_integer(1)
}

/// Experiment description, read from JSON. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_list: Vec<usize>,
    pub lambda: f64,
    #[serde(rename = "C")]
    pub leverage: Rational,
    #[serde(rename = "L", default = "one")]
    pub liabilities: Rational,
    pub c_shock: f64,
    pub epsilon: f64,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub mode: Mode,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let field = |field, message: String| Err(Error::Config { field, message });
        if self.n_list.is_empty() {
            return field("n_list", "must list at least one vertex count".into());
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n < 2) {
            return field("n_list", format!("vertex counts must be at least 2, found {n}"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return field("lambda", format!("must be positive, got {}", self.lambda));
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| self.lambda >= n as f64) {
            return field("lambda", format!("must be below every n, but n = {n}"));
        }
        if self.leverage <= one() {
            return field("C", format!("must exceed 1, got {}", self.leverage));
        }
        if !self.liabilities.is_positive() {
            return field("L", format!("must be positive, got {}", self.liabilities));
        }
        if !(self.c_shock > 0.0 && self.c_shock.is_finite()) {
            return field("c_shock", format!("must be positive, got {}", self.c_shock));
        }
        for &n in &self.n_list {
            if let Err(e) = shock_size(n, self.c_shock) {
                return field("c_shock", e.to_string());
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return field("epsilon", format!("must lie in (0, 1), got {}", self.epsilon));
        }
        if self.trials == 0 {
            return field("trials", "must be at least 1".into());
        }
        Ok(())
    }

    pub fn balance_sheet(&self) -> Result<BalanceSheet> {
        BalanceSheet::new(self.liabilities.clone(), self.leverage.clone())
    }

    pub fn rho_out(&self) -> Result<f64> {
        rho_out(self.lambda, self.balance_sheet()?.d_star())
    }
}

/// Purpose of a per-trial random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Graph = 1,
    Shock = 2,
    Probe = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one random stream, a pure function of its coordinates.
pub fn stream_seed(master_seed: u64, n: usize, trial: usize, stream: Stream) -> u64 {
    let mut h = splitmix64(master_seed);
    h = splitmix64(h ^ n as u64);
    h = splitmix64(h ^ trial as u64);
    splitmix64(h ^ stream as u64)
}

pub fn stream_rng(master_seed: u64, n: usize, trial: usize, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master_seed, n, trial, stream))
}

/// Uniform `k`-subset of `0..n` by a partial Fisher–Yates shuffle over a
/// sparse permutation. Returned sorted.
pub fn uniform_subset<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    if k > n {
        return Err(invalid(format!("cannot draw {k} distinct vertices out of {n}")));
    }
    let mut swapped: HashMap<usize, usize> = HashMap::with_capacity(2 * k);
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let j = rng.random_range(i..n);
        let at_j = *swapped.get(&j).unwrap_or(&j);
        let at_i = *swapped.get(&i).unwrap_or(&i);
        swapped.insert(j, at_i);
        out.push(at_j);
    }
    out.sort_unstable();
    Ok(out)
}

fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    builder.build().map_err(|e| invalid(format!("cannot start worker pool: {e}")))
}

/// What one random-shock trial observed.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub systemic: bool,
    pub terminal_size: usize,
    pub reach_size: usize,
    /// Some default needed more than one exposure.
    pub multi_hit: bool,
    /// Some vertex was hit twice within one round.
    pub double_hit: bool,
    pub bound: f64,
    /// Whether the reach of the shock in the truncated graph is contained
    /// in the terminal default set.
    pub reach_within_cascade: bool,
    /// When no multi-hit default occurred: whether the terminal set equals
    /// that reach.
    pub equals_reach: Option<bool>,
}

/// Shared parameters of all trials at one `n`.
#[derive(Clone, Debug)]
pub struct TrialSetup {
    pub n: usize,
    pub lambda: f64,
    pub sheet: BalanceSheet,
    pub shock_size: usize,
    pub epsilon: f64,
    pub master_seed: u64,
}

impl TrialSetup {
    pub fn from_config(cfg: &ExperimentConfig, n: usize) -> Result<Self> {
        Ok(TrialSetup {
            n,
            lambda: cfg.lambda,
            sheet: cfg.balance_sheet()?,
            shock_size: shock_size(n, cfg.c_shock)?,
            epsilon: cfg.epsilon,
            master_seed: cfg.master_seed,
        })
    }

    pub fn graph(&self, trial: usize) -> Result<DiGraph> {
        gen_gnp_digraph(self.n, self.lambda, &mut stream_rng(self.master_seed, self.n, trial, Stream::Graph))
    }

    pub fn shock(&self, trial: usize) -> Result<Vec<usize>> {
        uniform_subset(self.n, self.shock_size, &mut stream_rng(self.master_seed, self.n, trial, Stream::Shock))
    }

    /// Fresh graph, independent shock, cascade and truncated-graph reach.
    pub fn run(&self, trial: usize) -> Result<(TrialOutcome, CascadeTrace)> {
        let g = self.graph(trial)?;
        let shock = self.shock(trial)?;
        let trace = run_cascade(&g, &self.sheet, &shock)?;
        let sh = build_single_hit(&g, self.sheet.d_star());
        let reach = forward_reach(&sh, &shock)?;
        let terminal = trace.terminal_set();
        let reach_within_cascade = reach.order().iter().all(|v| terminal.binary_search(v).is_ok());
        let multi_hit = !trace.multi_hit_defaults().is_empty();
        let equals_reach = (!multi_hit).then(|| reach_within_cascade && reach.len() == terminal.len());
        let outcome = TrialOutcome {
            trial,
            systemic: is_systemic(&trace, self.epsilon, self.n),
            terminal_size: terminal.len(),
            reach_size: reach.len(),
            multi_hit,
            double_hit: trace.round_double_hit_count() > 0,
            bound: multi_hit_bound(self.lambda, &trace.delta_sizes(), self.n)?,
            reach_within_cascade,
            equals_reach,
        };
        Ok((outcome, trace))
    }

    pub fn outcomes(&self, trials: usize, workers: Option<usize>) -> Result<Vec<TrialOutcome>> {
        thread_pool(workers)?.install(|| {
            (0..trials)
                .into_par_iter()
                .map(|t| self.run(t).map(|(outcome, _)| outcome))
                .collect()
        })
    }
}

/// Aggregated random-shock statistics at one `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialStats {
    pub n: usize,
    pub lambda: f64,
    #[serde(rename = "C")]
    pub leverage: Rational,
    pub c_shock: f64,
    pub epsilon: f64,
    pub trials: usize,
    pub shock_size: usize,
    pub systemic_count: usize,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_dinf: f64,
    pub max_dinf: usize,
    pub mean_reach: f64,
    pub max_reach: usize,
    pub multi_hit_trial_frac: f64,
    pub double_hit_trial_frac: f64,
    pub mean_bound: f64,
    /// Trials where the truncated-graph reach escaped the default set.
    pub reach_subset_violations: usize,
    /// Trials without multi-hit defaults whose default set differs from the
    /// truncated-graph reach.
    pub equality_violations: usize,
    pub rho_out: f64,
    pub seed: u64,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl TrialStats {
    pub fn aggregate(cfg: &ExperimentConfig, setup: &TrialSetup, outcomes: &[TrialOutcome]) -> Result<Self> {
        let trials = outcomes.len();
        let t = trials as f64;
        let systemic_count = outcomes.iter().filter(|o| o.systemic).count();
        let (ci_lo, ci_hi) = wilson_interval(systemic_count, trials, Z_95);
        let count = |f: fn(&TrialOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count();
        Ok(TrialStats {
            n: setup.n,
            lambda: cfg.lambda,
            leverage: cfg.leverage.clone(),
            c_shock: cfg.c_shock,
            epsilon: cfg.epsilon,
            trials,
            shock_size: setup.shock_size,
            systemic_count,
            p_hat: systemic_count as f64 / t,
            ci_lo,
            ci_hi,
            mean_dinf: outcomes.iter().map(|o| o.terminal_size as f64).sum::<f64>() / t,
            max_dinf: outcomes.iter().map(|o| o.terminal_size).max().unwrap_or(0),
            mean_reach: outcomes.iter().map(|o| o.reach_size as f64).sum::<f64>() / t,
            max_reach: outcomes.iter().map(|o| o.reach_size).max().unwrap_or(0),
            multi_hit_trial_frac: count(|o| o.multi_hit) as f64 / t,
            double_hit_trial_frac: count(|o| o.double_hit) as f64 / t,
            mean_bound: outcomes.iter().map(|o| o.bound).sum::<f64>() / t,
            reach_subset_violations: count(|o| !o.reach_within_cascade),
            equality_violations: count(|o| o.equals_reach == Some(false)),
            rho_out: cfg.rho_out()?,
            seed: cfg.master_seed,
            elapsed: Duration::ZERO,
        })
    }

    /// Row for the sweep CSV, in [`SWEEP_HEADER`] order.
    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.lambda.to_string(),
            self.leverage.to_string(),
            self.c_shock.to_string(),
            self.epsilon.to_string(),
            self.trials.to_string(),
            self.systemic_count.to_string(),
            self.p_hat.to_string(),
            self.ci_lo.to_string(),
            self.ci_hi.to_string(),
            self.mean_dinf.to_string(),
            self.max_dinf.to_string(),
            self.mean_reach.to_string(),
            self.max_reach.to_string(),
            self.multi_hit_trial_frac.to_string(),
            self.rho_out.to_string(),
            self.seed.to_string(),
        ]
    }
}

pub const SWEEP_HEADER: [&str; 17] = [
    "n",
    "lambda",
    "C",
    "c_shock",
    "epsilon",
    "trials",
    "systemic_count",
    "p_hat",
    "ci_lo",
    "ci_hi",
    "mean_Dinf",
    "max_Dinf",
    "mean_reach",
    "max_reach",
    "multi_hit_trial_frac",
    "rho_out",
    "seed",
];

/// Random-shock trials at one `n`.
pub fn run_trials_at(cfg: &ExperimentConfig, n: usize, workers: Option<usize>) -> Result<TrialStats> {
    let start = Instant::now();
    let setup = TrialSetup::from_config(cfg, n)?;
    let outcomes = setup.outcomes(cfg.trials, workers)?;
    let mut stats = TrialStats::aggregate(cfg, &setup, &outcomes)?;
    stats.elapsed = start.elapsed();
    Ok(stats)
}

/// Random-shock trials for every `n` of the configuration.
pub fn run_trials(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Vec<TrialStats>> {
    cfg.validate()?;
    cfg.n_list.iter().map(|&n| run_trials_at(cfg, n, workers)).collect()
}

/// One row of the subcritical reach-scaling table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReachRow {
    pub n: usize,
    pub shock_size: usize,
    pub trials: usize,
    pub max_reach: usize,
    pub max_dinf: usize,
    pub mean_reach: f64,
    /// `max_reach / (ln n)²`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReachScaling {
    pub rho_out: f64,
    pub rows: Vec<ReachRow>,
    /// Least-squares slope through the origin of `max_reach` against `(ln n)²`.
    pub m_hat: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Root mean square of `max_reach - m_hat (ln n)²`.
    pub rms_residual: f64,
}

impl ReachScaling {
    /// Whether every per-`n` ratio lies in `[m_hat / 2, 2 m_hat]`.
    pub fn within_factor_two(&self) -> bool {
        self.rows.iter().all(|r| r.ratio >= self.m_hat / 2.0 && r.ratio <= 2.0 * self.m_hat)
    }
}

/// Maximal truncated-graph reach and default-set size per `n`, with a fit of
/// the reach against `(ln n)²`. Refuses unless `ρ_out < 1`.
pub fn reach_scaling_experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<ReachScaling> {
    cfg.validate()?;
    let rho = cfg.rho_out()?;
    if rho >= 1.0 {
        return Err(invalid(format!(
            "reach scaling needs a subcritical setting, but ρ_out = {rho:.6} >= 1 for λ = {}, C = {}",
            cfg.lambda, cfg.leverage
        )));
    }
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        let setup = TrialSetup::from_config(cfg, n)?;
        let outcomes = setup.outcomes(cfg.trials, workers)?;
        let max_reach = outcomes.iter().map(|o| o.reach_size).max().unwrap_or(0);
        let scale = (n as f64).ln().powi(2);
        rows.push(ReachRow {
            n,
            shock_size: setup.shock_size,
            trials: cfg.trials,
            max_reach,
            max_dinf: outcomes.iter().map(|o| o.terminal_size).max().unwrap_or(0),
            mean_reach: outcomes.iter().map(|o| o.reach_size as f64).sum::<f64>() / cfg.trials as f64,
            ratio: max_reach as f64 / scale,
        });
    }
    let (sxy, sxx) = rows.iter().fold((0.0, 0.0), |(sxy, sxx), r| {
        let x = (r.n as f64).ln().powi(2);
        (sxy + x * r.max_reach as f64, sxx + x * x)
    });
    let m_hat = sxy / sxx;
    let rms_residual = (rows
        .iter()
        .map(|r| (r.max_reach as f64 - m_hat * (r.n as f64).ln().powi(2)).powi(2))
        .sum::<f64>()
        / rows.len() as f64)
        .sqrt();
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let max_ratio = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(ReachScaling { rho_out: rho, rows, m_hat, min_ratio, max_ratio, rms_residual })
}

/// Bow-tie fractions of the truncated graph over independent graphs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BowtieRow {
    pub n: usize,
    pub trials: usize,
    pub in_fracs: Vec<f64>,
    pub out_fracs: Vec<f64>,
    pub scc_fracs: Vec<f64>,
}

impl BowtieRow {
    pub fn in_mean(&self) -> f64 {
        mean(&self.in_fracs)
    }
    pub fn out_mean(&self) -> f64 {
        mean(&self.out_fracs)
    }
    pub fn scc_mean(&self) -> f64 {
        mean(&self.scc_fracs)
    }
    pub fn in_sd(&self) -> f64 {
        std_dev(&self.in_fracs)
    }
    pub fn out_sd(&self) -> f64 {
        std_dev(&self.out_fracs)
    }
    pub fn scc_sd(&self) -> f64 {
        std_dev(&self.scc_fracs)
    }
    pub fn max_scc_size(&self) -> usize {
        self.scc_fracs.iter().map(|f| (f * self.n as f64).round() as usize).max().unwrap_or(0)
    }
}

pub fn bowtie_experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Vec<BowtieRow>> {
    cfg.validate()?;
    let d_star = cfg.balance_sheet()?.d_star();
    let pool = thread_pool(workers)?;
    cfg.n_list
        .iter()
        .map(|&n| {
            let setup = TrialSetup::from_config(cfg, n)?;
            let fracs: Vec<(f64, f64, f64)> = pool.install(|| {
                (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| {
                        let sh = build_single_hit(&setup.graph(t)?, d_star);
                        let bt = bowtie_extract(&sh)?;
                        Ok((bt.in_frac(), bt.out_frac(), bt.scc_frac()))
                    })
                    .collect::<Result<_>>()
            })?;
            Ok(BowtieRow {
                n,
                trials: cfg.trials,
                in_fracs: fracs.iter().map(|f| f.0).collect(),
                out_fracs: fracs.iter().map(|f| f.1).collect(),
                scc_fracs: fracs.iter().map(|f| f.2).collect(),
            })
        })
        .collect()
}

/// Two-sample comparison of the truncated `G(n, λ/n)` against an
/// i.i.d.-outdegree digraph.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentificationReport {
    pub n: usize,
    pub lambda: f64,
    pub d_star_truncated: usize,
    pub d_star_iid: usize,
    pub graphs: usize,
    /// Chi-square homogeneity test on pooled out-degree histograms.
    pub degree_test: TestResult,
    /// Kolmogorov–Smirnov test on reach sizes from a uniform vertex.
    pub reach_test: TestResult,
    pub level: f64,
    pub pass: bool,
}

/// Draws `graphs` truncated Erdős–Rényi graphs (cutoff `d_star_truncated`)
/// and `graphs` i.i.d.-outdegree graphs whose degree law is the truncated
/// binomial with cutoff `d_star_iid`, and compares them.
pub fn identification_test(
    n: usize,
    lambda: f64,
    d_star_truncated: usize,
    d_star_iid: usize,
    graphs: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<IdentificationReport> {
    let law = truncated_outdegree_sampler(n, lambda, d_star_iid)?;
    let side = |iid: bool| -> Result<(Vec<u64>, Vec<f64>)> {
        // Separate seed spaces for the two samples.
        let salt = if iid { 0x5eed_0001 } else { 0x5eed_0000 };
        let seed = master_seed ^ salt;
        let per_graph: Vec<(Vec<usize>, usize)> = thread_pool(workers)?.install(|| {
            (0..graphs)
                .into_par_iter()
                .map(|t| {
                    let mut rng = stream_rng(seed, n, t, Stream::Graph);
                    let g = if iid {
                        gen_iid_outdegree_digraph(n, &law, &mut rng)?
                    } else {
                        build_single_hit(&gen_gnp_digraph(n, lambda, &mut rng)?, d_star_truncated)
                    };
                    let start = stream_rng(seed, n, t, Stream::Probe).random_range(0..n);
                    Ok((g.out_degrees(), forward_reach(&g, &[start])?.len()))
                })
                .collect::<Result<_>>()
        })?;
        let mut hist = Vec::new();
        let mut reach = Vec::with_capacity(graphs);
        for (degrees, r) in per_graph {
            for d in degrees {
                if d >= hist.len() {
                    hist.resize(d + 1, 0u64);
                }
                hist[d] += 1;
            }
            reach.push(r as f64);
        }
        Ok((hist, reach))
    };
    let (hist_a, reach_a) = side(false)?;
    let (hist_b, reach_b) = side(true)?;
    let degree_test = chi_square_two_sample(&hist_a, &hist_b);
    let reach_test = ks_two_sample(&reach_a, &reach_b);
    Ok(IdentificationReport {
        n,
        lambda,
        d_star_truncated,
        d_star_iid,
        graphs,
        degree_test,
        reach_test,
        level: TEST_LEVEL,
        pass: degree_test.passes(TEST_LEVEL) && reach_test.passes(TEST_LEVEL),
    })
}

/// Identification test at every `n`, with `trials` graphs per sample and
/// the cutoff implied by `C` on both sides.
pub fn identification_experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Vec<IdentificationReport>> {
    cfg.validate()?;
    let d_star = cfg.balance_sheet()?.d_star();
    cfg.n_list
        .iter()
        .map(|&n| identification_test(n, cfg.lambda, d_star, d_star, cfg.trials, cfg.master_seed, workers))
        .collect()
}

/// Edge-addition experiment on three vertices `u = 0`, `v = 1`, `w = 2`.
#[derive(Clone, Debug, Serialize)]
pub struct NonmonoReport<'a> {
    #[serde(rename = "C")]
    pub leverage: String,
    pub before_size: usize,
    pub after_size: usize,
    pub before: TraceJson<'a>,
    pub after: TraceJson<'a>,
}

/// Runs the cascade from `{u}` on the graph `{u -> v}` and again after
/// adding `u -> w`. Returns both traces.
pub fn nonmono_traces(leverage: &Rational) -> Result<(CascadeTrace, CascadeTrace)> {
    let sheet = BalanceSheet::with_leverage(leverage.clone())?;
    let before = DiGraph::from_edges(3, [(0, 1)])?;
    let after = before.with_edge(0, 2)?;
    Ok((run_cascade(&before, &sheet, &[0])?, run_cascade(&after, &sheet, &[0])?))
}

/// `(|D_∞| before, |D_∞| after)` for the edge-addition experiment.
pub fn nonmono_demo(leverage: &Rational) -> Result<(usize, usize)> {
    let (before, after) = nonmono_traces(leverage)?;
    Ok((before.terminal_size(), after.terminal_size()))
}

/// JSON report of the edge-addition experiment.
pub fn nonmono_report(leverage: &Rational) -> Result<String> {
    let (before, after) = nonmono_traces(leverage)?;
    let report = NonmonoReport {
        leverage: leverage.to_string(),
        before_size: before.terminal_size(),
        after_size: after.terminal_size(),
        before: before.to_json(),
        after: after.to_json(),
    };
    Ok(serde_json::to_string_pretty(&report)?)
}

fn write_csv_line<W: Write>(w: &mut W, fields: &[String]) -> Result<()> {
    writeln!(w, "{}", fields.join(","))?;
    Ok(())
}

/// Vertex counts already present in a sweep CSV written for the same
/// configuration.
fn completed_rows(path: &Path, cfg: &ExperimentConfig) -> Result<BTreeSet<usize>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => return Ok(BTreeSet::new()),
    };
    if header != SWEEP_HEADER.join(",") {
        return Err(invalid(format!("{} has an unexpected header and cannot be resumed", path.display())));
    }
    let mut done = BTreeSet::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let matches = fields.len() == SWEEP_HEADER.len()
            && fields[1] == cfg.lambda.to_string()
            && fields[2] == cfg.leverage.to_string()
            && fields[3] == cfg.c_shock.to_string()
            && fields[4] == cfg.epsilon.to_string()
            && fields[5] == cfg.trials.to_string()
            && fields[16] == cfg.master_seed.to_string();
        if !matches {
            return Err(invalid(format!("{} holds results of a different configuration", path.display())));
        }
        done.insert(fields[0].parse().map_err(|_| invalid(format!("bad n in {}", path.display())))?);
    }
    Ok(done)
}

/// Runs the configured experiment and writes its table to `out`.
///
/// Random-shock sweeps append one row per `n`; rows already present for the
/// same configuration are kept and not recomputed.
pub fn run_sweep(cfg: &ExperimentConfig, out: &Path, workers: Option<usize>) -> Result<()> {
    cfg.validate()?;
    match cfg.mode {
        Mode::Cascade => {
            let done = if out.exists() { completed_rows(out, cfg)? } else { BTreeSet::new() };
            let fresh = !out.exists() || std::fs::metadata(out)?.len() == 0;
            let mut file = OpenOptions::new().create(true).append(true).open(out)?;
            if fresh {
                write_csv_line(&mut file, &SWEEP_HEADER.map(String::from))?;
            }
            let mut ns = cfg.n_list.clone();
            ns.sort_unstable();
            ns.dedup();
            for n in ns.into_iter().filter(|n| !done.contains(n)) {
                let stats = run_trials_at(cfg, n, workers)?;
                write_csv_line(&mut file, &stats.csv_row())?;
                file.flush()?;
            }
        }
        Mode::ReachScaling => {
            let table = reach_scaling_experiment(cfg, workers)?;
            let mut file = File::create(out)?;
            writeln!(file, "n,k_n,trials,max_reach,max_Dinf,mean_reach,ratio,m_hat")?;
            for r in &table.rows {
                writeln!(
                    file,
                    "{},{},{},{},{},{},{},{}",
                    r.n, r.shock_size, r.trials, r.max_reach, r.max_dinf, r.mean_reach, r.ratio, table.m_hat
                )?;
            }
        }
        Mode::Bowtie => {
            let rows = bowtie_experiment(cfg, workers)?;
            let mut file = File::create(out)?;
            writeln!(file, "n,trials,in_frac_mean,in_frac_sd,out_frac_mean,out_frac_sd,scc_frac_mean,scc_frac_sd")?;
            for r in &rows {
                writeln!(
                    file,
                    "{},{},{},{},{},{},{},{}",
                    r.n,
                    r.trials,
                    r.in_mean(),
                    r.in_sd(),
                    r.out_mean(),
                    r.out_sd(),
                    r.scc_mean(),
                    r.scc_sd()
                )?;
            }
        }
        Mode::Identification => {
            let reports = identification_experiment(cfg, workers)?;
            let mut file = File::create(out)?;
            writeln!(file, "n,lambda,d_star,graphs,degree_chi2,degree_dof,degree_p,reach_ks,reach_p,pass")?;
            for r in &reports {
                writeln!(
                    file,
                    "{},{},{},{},{},{},{},{},{},{}",
                    r.n,
                    r.lambda,
                    r.d_star_truncated,
                    r.graphs,
                    r.degree_test.statistic,
                    r.degree_test.dof,
                    r.degree_test.p_value,
                    r.reach_test.statistic,
                    r.reach_test.p_value,
                    r.pass
                )?;
            }
        }
        Mode::NonmonoDemo => {
            std::fs::write(out, nonmono_report(&cfg.leverage)? + "\n")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig {
            n_list: vec![100],
            lambda: 2.0,
            leverage: "5/2".parse().unwrap(),
            liabilities: one(),
            c_shock: 1.0,
            epsilon: 0.5,
            trials: 200,
            master_seed: 42,
            mode: Mode::Cascade,
        }
    }

    #[test]
    fn config_parses_and_rejects_unknown_keys() {
        let text = r#"{"n_list":[100],"lambda":2.0,"C":"5/2","c_shock":1,"epsilon":0.5,"trials":200,"master_seed":42}"#;
        let parsed = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(parsed, cfg());
        let typo = text.replace("\"trials\"", "\"trails\"");
        assert!(ExperimentConfig::from_json(&typo).is_err());
        let with_mode = text.replace("}", r#","mode":"reach_scaling","L":"3/2"}"#);
        let parsed = ExperimentConfig::from_json(&with_mode).unwrap();
        assert_eq!(parsed.mode, Mode::ReachScaling);
        assert_eq!(parsed.liabilities, "3/2".parse().unwrap());
    }

    #[test]
    fn config_errors_name_the_field() {
        let cases: Vec<(fn(&mut ExperimentConfig), &str)> = vec![
            (|c| c.trials = 0, "trials"),
            (|c| c.epsilon = 1.0, "epsilon"),
            (|c| c.epsilon = 0.0, "epsilon"),
            (|c| c.leverage = one(), "C"),
            (|c| c.lambda = -1.0, "lambda"),
            (|c| c.lambda = 100.0, "lambda"),
            (|c| c.n_list = vec![], "n_list"),
            (|c| c.n_list = vec![1], "n_list"),
            (|c| c.c_shock = 100.0, "c_shock"),
            (|c| c.liabilities = Rational::from_integer(0), "L"),
        ];
        for (mutate, name) in cases {
            let mut c = cfg();
            mutate(&mut c);
            match c.validate() {
                Err(Error::Config { field, .. }) => assert_eq!(field, name),
                other => panic!("expected config error on {name}, got {other:?}"),
            }
        }
    }

    #[test]
    fn stream_seeds_are_distinct() {
        let mut seen = BTreeSet::new();
        for n in [100, 1000] {
            for t in 0..50 {
                for s in [Stream::Graph, Stream::Shock, Stream::Probe] {
                    assert!(seen.insert(stream_seed(7, n, t, s)));
                }
            }
        }
    }

    #[test]
    fn uniform_subset_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0usize; 6];
        let draws = 30_000;
        for _ in 0..draws {
            let s = uniform_subset(6, 2, &mut rng).unwrap();
            assert_eq!(s.len(), 2);
            assert!(s[0] < s[1]);
            for v in s {
                counts[v] += 1;
            }
        }
        // each vertex is included w.p. 1/3
        let sd = (draws as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 / 3.0).abs() < 4.0 * sd);
        }
        assert_eq!(uniform_subset(5, 5, &mut rng).unwrap(), vec![0, 1, 2, 3, 4]);
        assert!(uniform_subset(5, 6, &mut rng).is_err());
    }

    #[test]
    fn trials_are_reproducible() {
        let a = run_trials(&cfg(), Some(1)).unwrap();
        let json = serde_json::to_string(&a).unwrap();
        for workers in [Some(3), None] {
            assert_eq!(json, serde_json::to_string(&run_trials(&cfg(), workers).unwrap()).unwrap());
        }
        let s = &a[0];
        assert!(s.ci_lo <= s.p_hat && s.p_hat <= s.ci_hi);
        assert_eq!(s.reach_subset_violations, 0);
        assert_eq!(s.equality_violations, 0);
    }

    #[test]
    fn reach_scaling_refuses_supercritical() {
        let mut c = cfg();
        c.leverage = Rational::from_integer(4);
        let err = reach_scaling_experiment(&c, Some(1)).unwrap_err().to_string();
        assert!(err.contains("1.353"), "{err}");
    }

    #[test]
    fn reach_scaling_without_contagion_is_the_shock() {
        let mut c = cfg();
        c.leverage = "3/2".parse().unwrap();
        c.n_list = vec![100, 1000, 5000];
        c.trials = 20;
        let table = reach_scaling_experiment(&c, Some(2)).unwrap();
        for r in &table.rows {
            assert_eq!(r.max_reach, r.shock_size);
            assert_eq!(r.mean_reach, r.shock_size as f64);
        }
    }

    #[test]
    fn reach_scaling_single_row() {
        let mut c = cfg();
        c.trials = 1;
        let table = reach_scaling_experiment(&c, Some(1)).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert!((table.m_hat - table.rows[0].ratio).abs() < 1e-12);
        assert!(table.within_factor_two());
        assert!(table.rms_residual.abs() < 1e-9);
    }

    #[test]
    fn identification_tiny_graph() {
        let report = identification_test(2, 1.0, 1, 1, 50, 1, Some(1)).unwrap();
        assert_eq!(report.n, 2);
        assert!(report.degree_test.p_value.is_finite());
    }

    #[test]
    fn nonmono_examples() {
        assert_eq!(nonmono_demo(&"5/2".parse().unwrap()).unwrap(), (2, 1));
        // v and w both take 1/2 >= E = 1/3
        assert_eq!(nonmono_demo(&"4".parse().unwrap()).unwrap(), (2, 3));
        assert_eq!(nonmono_demo(&"3/2".parse().unwrap()).unwrap(), (1, 1));
        let report = nonmono_report(&"5/2".parse().unwrap()).unwrap();
        assert_eq!(report, nonmono_report(&"5/2".parse().unwrap()).unwrap());
        assert!(report.contains("\"before_size\": 2"));
    }

    #[test]
    fn sweep_resumes_and_refuses_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("sweep.csv");
        let mut c = cfg();
        c.n_list = vec![50];
        c.trials = 10;
        run_sweep(&c, &out, Some(1)).unwrap();
        let first = std::fs::read_to_string(&out).unwrap();
        assert_eq!(first.lines().count(), 2);

        c.n_list = vec![50, 80];
        run_sweep(&c, &out, Some(1)).unwrap();
        let second = std::fs::read_to_string(&out).unwrap();
        assert!(second.starts_with(&first));
        assert_eq!(second.lines().count(), 3);

        c.master_seed += 1;
        assert!(run_sweep(&c, &out, Some(1)).is_err());
    }
}

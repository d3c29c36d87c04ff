use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use contagion::analytics::{shock_size, BranchingParams};
use contagion::bowtie::bowtie_extract;
use contagion::harness::{run_sweep, stream_rng, uniform_subset, Stream};
use contagion::randgraph::{gen_gnp_digraph, DiGraph};
use contagion::singlehit::build_single_hit;
use contagion::{run_cascade, BalanceSheet, ExperimentConfig, Rational};

/// Default cascades on sparse directed random graphs.
#[derive(Parser, Debug)]
#[command(name = "contagion", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a directed G(n, λ/n) and write it as a `src,dst` edge list.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one cascade on an edge-list graph and write its trace.
    Cascade(CascadeArgs),
    /// Run the experiment described by a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Bow-tie summary of the sender-truncated version of a graph.
    Bowtie {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long = "C")]
        leverage: Rational,
        #[arg(long = "L", default_value = "1")]
        liabilities: Rational,
        /// Vertex count, when it exceeds the largest id in the file plus one.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the cutoff, the branching mean and the regime.
    Rho {
        #[arg(long)]
        lambda: f64,
        #[arg(long = "C")]
        leverage: Rational,
    },
    /// Check the engine against brute force on small graphs.
    Validate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct CascadeArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long = "C")]
    leverage: Rational,
    #[arg(long = "L", default_value = "1")]
    liabilities: Rational,
    /// Comma-separated vertex ids.
    #[arg(long, value_delimiter = ',', num_args = 1.., conflicts_with = "shock_c", required_unless_present = "shock_c")]
    shock: Option<Vec<usize>>,
    /// Uniform shock of size ceil(c ln n).
    #[arg(long)]
    shock_c: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trace: PathBuf,
}

fn read_graph(path: &Path, n: Option<usize>) -> Result<DiGraph> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    DiGraph::read_csv(BufReader::new(file), n).with_context(|| format!("reading {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn cascade(args: CascadeArgs) -> Result<()> {
    let g = read_graph(&args.graph, args.n)?;
    let sheet = BalanceSheet::new(args.liabilities, args.leverage)?;
    let shock = match (args.shock, args.shock_c) {
        (Some(ids), _) => ids,
        (None, Some(c)) => {
            let k = shock_size(g.n(), c)?;
            uniform_subset(g.n(), k, &mut stream_rng(args.seed, g.n(), 0, Stream::Shock))?
        }
        (None, None) => bail!("either --shock or --shock-c is required"),
    };
    let trace = run_cascade(&g, &sheet, &shock)?;
    write_json(&args.trace, &trace.to_json())?;
    println!(
        "shock {} -> {} defaults in {} rounds",
        shock.len(),
        trace.terminal_size(),
        trace.rounds().len()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate { n, lambda, seed, out } => {
            let g = gen_gnp_digraph(n, lambda, &mut stream_rng(seed, n, 0, Stream::Graph))?;
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            g.write_csv(BufWriter::new(file))?;
            println!("{} vertices, {} edges", g.n(), g.edge_count());
        }
        Command::Cascade(args) => cascade(args)?,
        Command::Sweep { config, out, workers } => {
            let cfg = ExperimentConfig::load(&config)?;
            run_sweep(&cfg, &out, workers)?;
            println!("wrote {}", out.display());
        }
        Command::Bowtie { graph, leverage, liabilities, n, out } => {
            let g = read_graph(&graph, n)?;
            let d_star = BalanceSheet::new(liabilities, leverage)?.d_star();
            let summary = bowtie_extract(&build_single_hit(&g, d_star))?.summary();
            write_json(&out, &summary)?;
            println!(
                "scc {} ({:.4}), in {} ({:.4}), out {} ({:.4})",
                summary.scc_size, summary.scc_frac, summary.in_size, summary.in_frac, summary.out_size, summary.out_frac
            );
        }
        Command::Rho { lambda, leverage } => {
            let d_star = BalanceSheet::with_leverage(leverage)?.d_star();
            let params = BranchingParams::new(lambda, d_star)?;
            println!("d* = {d_star}");
            println!("rho_out = {}", params.rho_out());
            println!("regime = {}", params.regime());
        }
        Command::Validate { seed } => {
            let checks = contagion::validate::run_all(seed)?;
            let mut ok = true;
            for c in &checks {
                let tag = if c.passed() { "PASS" } else { "FAIL" };
                println!("[{tag}] {} ({} cases, {} failures) {}", c.name, c.cases, c.failures, c.detail);
                ok &= c.passed();
            }
            if !ok {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

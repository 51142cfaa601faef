use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use bhd_cli::{
    bench, load_graph, read_graph, read_pairs, run_query, stats, write_ground_truth, write_rows,
    BenchOptions, BenchRow, CliError, CliResult, QuerySpec, RunOptions, DEFAULT_EPS_LIST,
    DEFAULT_MAX_SAMPLES, DEFAULT_TIME_BUDGET_SECS,
};
use bhd_core::{Execution, Graph, Method};
use clap::{Args, Parser, Subcommand};

/// Biharmonic distance queries on undirected graphs.
#[derive(Parser)]
#[command(name = "bhd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Size, degree and connectivity figures for an edge list.
    Stats {
        graph: PathBuf,
        /// Report figures for the largest connected component.
        #[arg(long)]
        lcc: bool,
        /// Also estimate lambda and gamma2 (on the largest component).
        #[arg(long)]
        spectral: bool,
    },
    /// Answer one pairwise or nodal query and print a CSV row.
    Query {
        graph: PathBuf,
        #[arg(long, short = 'm')]
        method: Method,
        #[arg(long, short = 's')]
        source: u64,
        /// Target node; omit for nodal queries.
        #[arg(long, short = 't')]
        target: Option<u64>,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Reference values by 1000-hop propagation for a file of `s t` pairs.
    GroundTruth {
        graph: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        /// Output CSV (standard output when absent).
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Random pairs, ground truth, every method at every epsilon.
    Bench {
        graph: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "push,push+,swf")]
        methods: Vec<Method>,
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        /// Number of distinct random pairs.
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Per-query sample cap for walk methods.
    #[arg(long, default_value_t = DEFAULT_MAX_SAMPLES)]
    max_samples: u64,
    /// Sample until the method's own stopping rule, however long.
    #[arg(long, conflicts_with = "max_samples")]
    no_sample_cap: bool,
    /// Seconds allowed per query.
    #[arg(long, default_value_t = DEFAULT_TIME_BUDGET_SECS)]
    time_budget: f64,
    /// Worker threads (and sampling streams for a single query).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Samples per worker between merges.
    #[arg(long, default_value_t = 256)]
    batch: usize,
    /// Use this lambda instead of estimating it.
    #[arg(long)]
    lambda: Option<f64>,
    /// Use this gamma2 instead of estimating it.
    #[arg(long)]
    gamma2: Option<f64>,
}

impl RunArgs {
    fn options(&self) -> CliResult<RunOptions> {
        if !(self.time_budget >= 0.0 && self.time_budget.is_finite()) {
            return Err(CliError::Usage(
                "--time-budget must be a non-negative number".into(),
            ));
        }
        if self.max_samples == 0 {
            return Err(CliError::Usage("--max-samples must be positive".into()));
        }
        Ok(RunOptions {
            delta: self.delta,
            max_samples: (!self.no_sample_cap).then_some(self.max_samples),
            time_budget: Duration::from_secs_f64(self.time_budget),
            jobs: self.jobs,
            batch: self.batch,
            lambda: self.lambda,
            gamma2: self.gamma2,
        })
    }
}

fn init_threads(jobs: usize) -> CliResult<()> {
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be positive".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(())
}

fn output(path: Option<&PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(path: &Path) -> CliResult<Graph> {
    let (g, dropped) = load_graph(path)?;
    if dropped > 0 {
        eprintln!(
            "note: graph is disconnected; using its largest component ({} nodes, {dropped} dropped)",
            g.n()
        );
    }
    Ok(g)
}

fn warn_capped(rows: &[BenchRow]) {
    let capped = rows.iter().filter(|r| r.capped).count();
    if capped > 0 {
        eprintln!(
            "warning: {capped} quer{} stopped at the sample cap before the method's own stopping rule; \
             accuracy guarantees do not apply to {}",
            if capped == 1 { "y" } else { "ies" },
            if capped == 1 { "it" } else { "them" }
        );
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Stats {
            graph,
            lcc,
            spectral,
        } => {
            let g = read_graph(&graph)?;
            print!("{}", stats(&g, lcc, spectral)?);
        }
        Command::Query {
            graph,
            method,
            source,
            target,
            eps,
            seed,
            run,
        } => {
            let opts = run.options()?;
            init_threads(opts.jobs)?;
            let g = load(&graph)?;
            let spec = QuerySpec {
                method,
                s: source,
                t: target,
                epsilon: eps,
                seed,
            };
            let row = run_query(&g, &spec, &opts)?;
            warn_capped(std::slice::from_ref(&row));
            write_rows(output(None)?, &[row])?;
        }
        Command::GroundTruth {
            graph,
            pairs,
            out,
            jobs,
        } => {
            init_threads(jobs)?;
            let g = load(&graph)?;
            let pairs = read_pairs(&pairs)?;
            write_ground_truth(&g, &pairs, Execution::default(), output(out.as_ref())?)?;
        }
        Command::Bench {
            graph,
            methods,
            eps,
            pairs,
            seed,
            out,
            run,
        } => {
            let opts = run.options()?;
            init_threads(opts.jobs)?;
            let g = load(&graph)?;
            let opts = BenchOptions {
                methods,
                eps_list: if eps.is_empty() {
                    DEFAULT_EPS_LIST.to_vec()
                } else {
                    eps
                },
                num_pairs: pairs,
                seed,
                run: opts,
            };
            let report = bench(&g, &opts)?;
            warn_capped(&report.rows);
            write_rows(output(out.as_ref())?, &report.rows)?;
            for line in &report.summary {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

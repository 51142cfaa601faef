//! Library side of the `bhd` command: graph loading, single queries, ground
//! truth and the benchmark protocol, all producing CSV rows in the file's
//! original id space.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use bhd_core::graph::{build_graph, parse_edge_list, parse_edge_list_str};
use bhd_core::nodal::{query_snb, query_snb_plus};
use bhd_core::push::{push_residual, query_push_until};
use bhd_core::rwalk::{query_stw, query_swf};
use bhd_core::seed::{derive, stream_rng};
use bhd_core::{
    DenseOracle, Error, Estimate, Execution, Graph, Method, SamplingConfig, SpectralConfig,
    SpectralInfo,
};

/// Hop count for ground-truth propagation.
pub const GROUND_TRUTH_ELL: usize = 1000;

pub const CSV_HEADER: [&str; 10] = [
    "method",
    "s",
    "t",
    "estimate",
    "ground_truth",
    "abs_error",
    "walks_or_iters",
    "time_ms",
    "epsilon",
    "seed",
];

pub const DEFAULT_EPS_LIST: [f64; 5] = [0.01, 0.02, 0.05, 0.1, 0.2];
pub const DEFAULT_MAX_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_TIME_BUDGET_SECS: f64 = 86_400.0;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Load { path: String, source: Error },
    #[error(transparent)]
    Core(#[from] Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 usage, 3 data, 4 numeric or convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Load { source, .. } | CliError::Core(source) => match source {
                Error::InvalidParameter(_) => 2,
                Error::NotConverged { .. } | Error::Numeric(_) | Error::Timeout => 4,
                _ => 3,
            },
            CliError::Csv(_) | CliError::Io(_) => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn read_graph(path: &Path) -> CliResult<Graph> {
    let wrap = |source: Error| CliError::Load {
        path: path.display().to_string(),
        source,
    };
    let file = File::open(path).map_err(|e| wrap(e.into()))?;
    let edges = parse_edge_list(BufReader::new(file)).map_err(wrap)?;
    build_graph(&edges).map_err(wrap)
}

/// Reads a graph and restricts it to its largest connected component.
/// Returns the graph and the number of nodes dropped.
pub fn load_graph(path: &Path) -> CliResult<(Graph, usize)> {
    let g = read_graph(path)?;
    if g.is_connected() {
        return Ok((g, 0));
    }
    let lcc = g.largest_connected_component();
    let dropped = g.n() - lcc.n();
    Ok((lcc, dropped))
}

/// Parses a pairs file of `s t` lines (same comment rules as edge lists).
pub fn read_pairs(path: &Path) -> CliResult<Vec<(u64, u64)>> {
    let text = std::fs::read_to_string(path)?;
    parse_edge_list_str(&text)
        .map(|e| e.pairs)
        .map_err(|source| CliError::Load {
            path: path.display().to_string(),
            source,
        })
}

pub fn dense_id(g: &Graph, id: u64) -> CliResult<usize> {
    g.dense_id(id).ok_or_else(|| {
        CliError::Core(Error::InvalidQuery(format!(
            "node {id} is not in the (largest connected component of the) graph"
        )))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsReport {
    pub n: usize,
    pub m: usize,
    pub average_degree: f64,
    pub min_degree: usize,
    pub max_degree: usize,
    pub bipartite: bool,
    pub components: usize,
    pub lcc_nodes: usize,
    pub lcc_edges: usize,
    pub lambda: Option<f64>,
    pub gamma2: Option<f64>,
}

impl std::fmt::Display for StatsReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "n: {}", self.n)?;
        writeln!(f, "m: {}", self.m)?;
        writeln!(f, "avg_degree: {:.2}", self.average_degree)?;
        writeln!(f, "min_degree: {}", self.min_degree)?;
        writeln!(f, "max_degree: {}", self.max_degree)?;
        writeln!(f, "bipartite: {}", self.bipartite)?;
        writeln!(f, "components: {}", self.components)?;
        writeln!(f, "lcc_nodes: {}", self.lcc_nodes)?;
        writeln!(f, "lcc_edges: {}", self.lcc_edges)?;
        if let Some(l) = self.lambda {
            writeln!(f, "lambda: {l:.6}")?;
        }
        if let Some(g) = self.gamma2 {
            writeln!(f, "gamma2: {g:.6}")?;
        }
        Ok(())
    }
}

/// Graph statistics. With `lcc` the main figures describe the largest
/// component; spectral values are always taken on it.
pub fn stats(g: &Graph, lcc: bool, spectral: bool) -> CliResult<StatsReport> {
    let comp = g.largest_connected_component();
    let base = if lcc { &comp } else { g };
    let (lambda, gamma2) = if spectral {
        let info = SpectralInfo::estimate(&comp, &SpectralConfig::default())?;
        (Some(info.lambda), info.gamma2)
    } else {
        (None, None)
    };
    Ok(StatsReport {
        n: base.n(),
        m: base.m(),
        average_degree: base.average_degree(),
        min_degree: base.min_degree(),
        max_degree: base.max_degree(),
        bipartite: base.is_bipartite(),
        components: base.components().1,
        lcc_nodes: comp.n(),
        lcc_edges: comp.m(),
        lambda,
        gamma2,
    })
}

/// Overrides and knobs shared by query-running commands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub delta: f64,
    pub max_samples: Option<u64>,
    pub time_budget: Duration,
    /// Sampling workers for a single query; query concurrency in `bench`.
    pub jobs: usize,
    pub batch: usize,
    pub lambda: Option<f64>,
    pub gamma2: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            delta: 0.01,
            max_samples: Some(DEFAULT_MAX_SAMPLES),
            time_budget: Duration::from_secs_f64(DEFAULT_TIME_BUDGET_SECS),
            jobs: 1,
            batch: 256,
            lambda: None,
            gamma2: None,
        }
    }
}

impl RunOptions {
    pub fn spectral(&self, g: &Graph, need_gamma2: bool) -> CliResult<SpectralInfo> {
        let cfg = SpectralConfig::default();
        let lambda = match self.lambda {
            Some(l) => l,
            None => bhd_core::spectral::estimate_lambda_with(g, &cfg)?,
        };
        let gamma2 = match (self.gamma2, need_gamma2) {
            (Some(g2), _) => Some(g2),
            (None, true) => Some(bhd_core::spectral::estimate_gamma2_with(g, &cfg)?),
            (None, false) => None,
        };
        Ok(SpectralInfo::new(lambda, gamma2)?)
    }

    fn sampling(&self, workers: usize, execution: Execution, deadline: Instant) -> SamplingConfig {
        SamplingConfig {
            delta: self.delta,
            workers,
            batch: self.batch,
            max_samples: self.max_samples,
            execution,
            deadline: Some(deadline),
        }
    }

    fn validate(&self) -> CliResult<()> {
        if self.jobs == 0 || self.batch == 0 {
            return Err(CliError::Usage(
                "--jobs and --batch must be positive".into(),
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(CliError::Usage("--delta must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// A single query as given on the command line.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySpec {
    pub method: Method,
    pub s: u64,
    pub t: Option<u64>,
    pub epsilon: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Value(f64),
    Timeout,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    pub s: u64,
    pub t: Option<u64>,
    pub estimate: Outcome,
    pub ground_truth: Option<f64>,
    pub walks_or_iters: Option<u64>,
    pub time_ms: f64,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    /// Sampling stopped at the cap rather than by its own rule.
    pub capped: bool,
}

impl BenchRow {
    pub fn value(&self) -> Option<f64> {
        match self.estimate {
            Outcome::Value(v) => Some(v),
            Outcome::Timeout => None,
        }
    }

    pub fn abs_error(&self) -> Option<f64> {
        Some((self.value()? - self.ground_truth?).abs())
    }

    pub fn record(&self) -> [String; 10] {
        let opt = |x: Option<String>| x.unwrap_or_default();
        [
            self.method.to_string(),
            self.s.to_string(),
            opt(self.t.map(|t| t.to_string())),
            match self.estimate {
                Outcome::Value(v) => v.to_string(),
                Outcome::Timeout => "timeout".into(),
            },
            opt(self.ground_truth.map(|g| g.to_string())),
            opt(self.abs_error().map(|e| e.to_string())),
            opt(self.walks_or_iters.map(|w| w.to_string())),
            format!("{:.3}", self.time_ms),
            opt(self.epsilon.map(|e| e.to_string())),
            opt(self.seed.map(|s| s.to_string())),
        ]
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[BenchRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_pairwise(
    g: &Graph,
    spectral: &SpectralInfo,
    method: Method,
    s: usize,
    t: usize,
    epsilon: f64,
    cfg: &SamplingConfig,
    seed: u64,
) -> bhd_core::Result<Estimate> {
    match method {
        Method::Push | Method::PushPlus => query_push_until(
            g,
            spectral,
            s,
            t,
            epsilon,
            method == Method::PushPlus,
            cfg.deadline,
        ),
        Method::Swf => query_swf(g, spectral, s, t, epsilon, cfg, seed),
        Method::Stw => query_stw(g, spectral, s, t, epsilon, cfg, seed, None),
        other => Err(Error::InvalidParameter(format!(
            "{other} is not a pairwise method"
        ))),
    }
}

fn row_from(method: Method, s: u64, t: Option<u64>, start: Instant) -> BenchRow {
    BenchRow {
        method,
        s,
        t,
        estimate: Outcome::Timeout,
        ground_truth: None,
        walks_or_iters: None,
        time_ms: start.elapsed().as_secs_f64() * 1e3,
        epsilon: None,
        seed: None,
        capped: false,
    }
}

/// Answers one query. Timeouts become a row with estimate `timeout`.
pub fn run_query(g: &Graph, spec: &QuerySpec, opts: &RunOptions) -> CliResult<BenchRow> {
    opts.validate()?;
    let method = spec.method;
    if method.is_pairwise() && method != Method::Exact && spec.t.is_none() {
        return Err(CliError::Usage(format!("{method} needs a target node")));
    }
    if !method.is_pairwise() && spec.t.is_some() {
        return Err(CliError::Usage(format!(
            "{method} is a nodal method; drop the target"
        )));
    }
    let s = dense_id(g, spec.s)?;
    let t = spec.t.map(|t| dense_id(g, t)).transpose()?;

    if method == Method::Exact {
        let start = Instant::now();
        let oracle = DenseOracle::build(g, bhd_core::exact::DEFAULT_SIZE_LIMIT)?;
        let value = match t {
            Some(t) => oracle.pair(s, t)?,
            None => oracle.nodal(s)?,
        };
        let mut row = row_from(method, spec.s, spec.t, start);
        row.estimate = Outcome::Value(value);
        row.time_ms = start.elapsed().as_secs_f64() * 1e3;
        return Ok(row);
    }

    if !(spec.epsilon > 0.0 && spec.epsilon < 1.0) {
        return Err(CliError::Usage("--eps must lie in (0, 1)".into()));
    }
    g.check_ergodic()?;
    let spectral = opts.spectral(g, method == Method::SnbPlus)?;
    let start = Instant::now();
    let cfg = opts.sampling(opts.jobs, Execution::default(), start + opts.time_budget);
    let mut row = row_from(method, spec.s, spec.t, start);
    row.epsilon = Some(spec.epsilon);
    row.seed = method.is_randomized().then_some(spec.seed);
    let result = match t {
        Some(t) => run_pairwise(g, &spectral, method, s, t, spec.epsilon, &cfg, spec.seed)
            .map(|e| (e.value, e.work, e.capped)),
        None => {
            let nodal = if method == Method::Snb {
                query_snb
            } else {
                query_snb_plus
            };
            nodal(g, &spectral, s, spec.epsilon, &cfg, spec.seed)
                .map(|e| (e.value, e.samples, e.capped))
        }
    };
    row.time_ms = start.elapsed().as_secs_f64() * 1e3;
    match result {
        Ok((value, work, capped)) => {
            row.estimate = Outcome::Value(value);
            row.walks_or_iters = Some(work);
            row.capped = capped;
        }
        Err(Error::Timeout) => {}
        Err(e) => return Err(e.into()),
    }
    Ok(row)
}

/// `β^ℓ` with `ℓ = 1000` for each pair of dense ids.
pub fn ground_truth(
    g: &Graph,
    pairs: &[(usize, usize)],
    execution: Execution,
) -> CliResult<Vec<f64>> {
    for &(s, t) in pairs {
        if s == t {
            return Err(Error::InvalidQuery(format!(
                "pair ({0}, {0}) repeats a node",
                g.original_id(s)
            ))
            .into());
        }
    }
    Ok(execution.map_range(pairs.len(), |i| {
        let (s, t) = pairs[i];
        push_residual(g, s, t, GROUND_TRUTH_ELL).beta()
    }))
}

/// Ground-truth CSV (`s,t,ground_truth`) for pairs of original ids.
pub fn write_ground_truth<W: Write>(
    g: &Graph,
    pairs: &[(u64, u64)],
    execution: Execution,
    out: W,
) -> CliResult<()> {
    let dense = pairs
        .iter()
        .map(|&(s, t)| Ok((dense_id(g, s)?, dense_id(g, t)?)))
        .collect::<CliResult<Vec<_>>>()?;
    let values = ground_truth(g, &dense, execution)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["s", "t", "ground_truth"])?;
    for (&(s, t), v) in pairs.iter().zip(values) {
        w.write_record([s.to_string(), t.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Draws `count` distinct unordered pairs `u < v` of dense ids uniformly.
pub fn sample_pairs(n: usize, count: usize, seed: u64) -> CliResult<Vec<(usize, usize)>> {
    let total = n as u128 * (n as u128).saturating_sub(1) / 2;
    if count as u128 > total {
        return Err(CliError::Usage(format!(
            "cannot draw {count} distinct pairs from {n} nodes ({total} available)"
        )));
    }
    let total = usize::try_from(total)
        .map_err(|_| CliError::Usage("graph too large for pair sampling".into()))?;
    // Pairs are numbered row by row: row u holds (u, u+1..n).
    let row_start = |u: usize| u * n - u * (u + 1) / 2;
    let mut rng = stream_rng(seed, 0);
    let picked = rand::seq::index::sample(&mut rng, total, count);
    Ok(picked
        .into_iter()
        .map(|k| {
            let (mut lo, mut hi) = (0, n - 1);
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if row_start(mid) <= k {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            (lo, lo + 1 + (k - row_start(lo)))
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub methods: Vec<Method>,
    pub eps_list: Vec<f64>,
    pub num_pairs: usize,
    pub seed: u64,
    pub run: RunOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub epsilon: Option<f64>,
    pub queries: usize,
    pub timeouts: usize,
    pub mean_abs_error: Option<f64>,
    pub max_abs_error: Option<f64>,
    pub mean_time_ms: f64,
}

impl std::fmt::Display for SummaryRow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let eps = self.epsilon.map_or("-".to_string(), |e| e.to_string());
        let err = |x: Option<f64>| x.map_or("-".to_string(), |e| format!("{e:.3e}"));
        write!(
            f,
            "{:<6} eps={:<6} queries={:<4} timeouts={:<3} mean_abs_err={:<10} max_abs_err={:<10} mean_time_ms={:.3}",
            self.method.as_str(),
            eps,
            self.queries,
            self.timeouts,
            err(self.mean_abs_error),
            err(self.max_abs_error),
            self.mean_time_ms
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub pairs: Vec<(u64, u64)>,
    pub rows: Vec<BenchRow>,
    pub summary: Vec<SummaryRow>,
}

/// Seed of the `index`-th query of a bench run.
pub fn query_seed(seed: u64, index: usize) -> u64 {
    derive(seed, index as u64 + 1)
}

/// Benchmark protocol: sample pairs, compute ground truth once, run every
/// method at every `ε` and summarize. Each randomized query samples with a
/// single worker under its own seed, so any row can be replayed with
/// `bhd query --seed <row seed> --jobs 1`.
pub fn bench(g: &Graph, opts: &BenchOptions) -> CliResult<BenchReport> {
    opts.run.validate()?;
    if opts.methods.is_empty() || opts.eps_list.is_empty() {
        return Err(CliError::Usage(
            "need at least one method and one epsilon".into(),
        ));
    }
    for &m in &opts.methods {
        if !m.is_pairwise() {
            return Err(CliError::Usage(format!("{m} is not a pairwise method")));
        }
    }
    for &e in &opts.eps_list {
        if !(e > 0.0 && e < 1.0) {
            return Err(CliError::Usage(format!("epsilon {e} must lie in (0, 1)")));
        }
    }
    let approximate = opts.methods.iter().any(|&m| m != Method::Exact);
    if approximate {
        g.check_ergodic()?;
    }
    let pairs = sample_pairs(g.n(), opts.num_pairs, opts.seed)?;
    let truth = ground_truth(g, &pairs, Execution::default())?;
    let spectral = if approximate {
        Some(opts.run.spectral(g, false)?)
    } else {
        None
    };
    let oracle = if opts.methods.contains(&Method::Exact) {
        Some(DenseOracle::build(g, bhd_core::exact::DEFAULT_SIZE_LIMIT)?)
    } else {
        None
    };

    // Query list in output order: method, then epsilon, then pair. The
    // exact oracle runs once per pair.
    let mut jobs: Vec<(Method, Option<f64>, usize)> = Vec::new();
    for &m in &opts.methods {
        if m == Method::Exact {
            jobs.extend((0..pairs.len()).map(|p| (m, None, p)));
        } else {
            for &e in &opts.eps_list {
                jobs.extend((0..pairs.len()).map(|p| (m, Some(e), p)));
            }
        }
    }

    let results = Execution::default().map_range(jobs.len(), |i| -> CliResult<BenchRow> {
        let (method, eps, p) = jobs[i];
        let (s, t) = pairs[p];
        let start = Instant::now();
        let mut row = row_from(method, g.original_id(s), Some(g.original_id(t)), start);
        row.ground_truth = Some(truth[p]);
        row.epsilon = eps;
        let outcome = match (method, eps) {
            (Method::Exact, _) => oracle
                .as_ref()
                .unwrap()
                .pair(s, t)
                .map(|v| (v, None, false)),
            (_, Some(eps)) => {
                let seed = query_seed(opts.seed, i);
                row.seed = method.is_randomized().then_some(seed);
                let cfg = opts
                    .run
                    .sampling(1, Execution::Sequential, start + opts.run.time_budget);
                run_pairwise(g, spectral.as_ref().unwrap(), method, s, t, eps, &cfg, seed)
                    .map(|e| (e.value, Some(e.work), e.capped))
            }
            _ => unreachable!(),
        };
        row.time_ms = start.elapsed().as_secs_f64() * 1e3;
        match outcome {
            Ok((v, work, capped)) => {
                row.estimate = Outcome::Value(v);
                row.walks_or_iters = work;
                row.capped = capped;
            }
            Err(Error::Timeout) => {}
            Err(e) => return Err(e.into()),
        }
        Ok(row)
    });
    let rows = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    let summary = summarize(&rows);
    Ok(BenchReport {
        pairs: pairs
            .iter()
            .map(|&(s, t)| (g.original_id(s), g.original_id(t)))
            .collect(),
        rows,
        summary,
    })
}

/// Per-(method, ε) means in first-appearance order.
pub fn summarize(rows: &[BenchRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Method, Option<f64>)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.method, r.epsilon)) {
            keys.push((r.method, r.epsilon));
        }
    }
    keys.into_iter()
        .map(|(method, epsilon)| {
            let group: Vec<&BenchRow> = rows
                .iter()
                .filter(|r| r.method == method && r.epsilon == epsilon)
                .collect();
            let errors: Vec<f64> = group.iter().filter_map(|r| r.abs_error()).collect();
            let mean =
                |xs: &[f64]| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
            let times: Vec<f64> = group.iter().map(|r| r.time_ms).collect();
            SummaryRow {
                method,
                epsilon,
                queries: group.len(),
                timeouts: group
                    .iter()
                    .filter(|r| r.estimate == Outcome::Timeout)
                    .count(),
                mean_abs_error: mean(&errors),
                max_abs_error: errors.iter().copied().reduce(f64::max),
                mean_time_ms: mean(&times).unwrap_or(0.0),
            }
        })
        .collect()
}

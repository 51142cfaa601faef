//! Random-walk estimators `STW` and `SWF`.
//!
//! Both draw quadruples of walks, two from `s` and two from `t`, each with
//! `ℓ` recorded positions (a walk of `ℓ − 1` hops including its start).
//! `SWF` averages the coincidence statistic `Z = Z₁ − Z₂/n` and stops as
//! soon as an empirical-Bernstein radius drops below `ε/2`. `STW` replaces
//! the weights `1/d²` with Bernoulli coins on every pair of prefix lengths.
//!
//! Sampling is split over logical workers. Worker `w` draws from stream `w`
//! of the query seed in batches; batches are merged in worker order, so the
//! result depends only on `(seed, workers, batch)`.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimate::{Estimate, Method};
use crate::graph::Graph;
use crate::par::Execution;
use crate::push::{check_pair, TruncationParams};
use crate::seed::stream_rng;
use crate::spectral::SpectralInfo;

/// Nodes visited by a walk, position 0 first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walk {
    nodes: Vec<u32>,
}

impl Walk {
    pub fn nodes(&self) -> &[u32] {
        &self.nodes
    }

    pub fn start(&self) -> usize {
        self.nodes[0] as usize
    }

    /// Number of hops.
    pub fn length(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn positions(&self) -> usize {
        self.nodes.len()
    }
}

#[inline]
fn step<R: Rng + ?Sized>(g: &Graph, v: u32, rng: &mut R) -> u32 {
    let nbrs = g.neighbors(v as usize);
    nbrs[rng.random_range(0..nbrs.len() as u32) as usize]
}

fn fill_walk<R: Rng + ?Sized>(
    g: &Graph,
    start: usize,
    positions: usize,
    rng: &mut R,
    buf: &mut Vec<u32>,
) {
    buf.clear();
    let mut v = start as u32;
    buf.push(v);
    for _ in 1..positions {
        v = step(g, v, rng);
        buf.push(v);
    }
}

/// Simple random walk of `length` hops from `start`.
pub fn random_walk<R: Rng + ?Sized>(g: &Graph, start: usize, length: usize, rng: &mut R) -> Walk {
    let mut nodes = Vec::with_capacity(length + 1);
    fill_walk(g, start, length + 1, rng, &mut nodes);
    Walk { nodes }
}

/// `Σ_{x∈w1} Σ_{y∈w2} 1[x = y] / d_x²` over positions.
pub fn xi(w1: &Walk, w2: &Walk, g: &Graph) -> f64 {
    let mut a = w1.nodes.clone();
    let mut b = w2.nodes.clone();
    a.sort_unstable();
    b.sort_unstable();
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let v = a[i];
                let ci = a[i..].iter().take_while(|&&x| x == v).count();
                let cj = b[j..].iter().take_while(|&&x| x == v).count();
                let d = g.degree(v as usize) as f64;
                acc += (ci * cj) as f64 / (d * d);
                i += ci;
                j += cj;
            }
        }
    }
    acc
}

fn inverse_degree_sum(w: &[u32], g: &Graph) -> f64 {
    w.iter().map(|&x| 1.0 / g.degree(x as usize) as f64).sum()
}

/// `Σ_{x∈w1} Σ_{y∈w2} 1 / (d_x d_y)`, which factorizes.
pub fn xi_prime(w1: &Walk, w2: &Walk, g: &Graph) -> f64 {
    inverse_degree_sum(&w1.nodes, g) * inverse_degree_sum(&w2.nodes, g)
}

/// `Z₁ − Z₂/n` from explicit walks, straight from the `ξ`, `ξ′` definitions.
pub fn z_from_walks(g: &Graph, s1: &Walk, s2: &Walk, t1: &Walk, t2: &Walk) -> f64 {
    let z1 = xi(s1, s2, g) + xi(t1, t2, g) - xi(s1, t2, g) - xi(s2, t1, g);
    let z2 = xi_prime(s1, s2, g) + xi_prime(t1, t2, g) - xi_prime(s1, t2, g) - xi_prime(s2, t1, g);
    z1 - z2 / g.n() as f64
}

/// Reusable buffers for drawing `Z` samples in `O(ℓ)`.
///
/// `Z₁ = Σ_v (c_{S₁}(v) − c_{T₁}(v)) (c_{S₂}(v) − c_{T₂}(v)) / d_v²` where `c_W`
/// counts visits, so one pass marks `S₁ − T₁` in `scratch` and a second pass
/// reads it along `S₂` and `T₂`.
#[derive(Debug, Clone)]
pub struct ZSampler {
    scratch: Vec<i32>,
    inv_degree: Vec<f64>,
    walks: [Vec<u32>; 4],
}

impl ZSampler {
    pub fn new(g: &Graph, positions: usize) -> Self {
        Self {
            scratch: vec![0; g.n()],
            inv_degree: g.degrees().map(|d| 1.0 / d as f64).collect(),
            walks: std::array::from_fn(|_| Vec::with_capacity(positions)),
        }
    }

    /// Draws walks S₁, S₂, T₁, T₂ in that order and returns `Z`.
    pub fn sample<R: Rng + ?Sized>(
        &mut self,
        g: &Graph,
        s: usize,
        t: usize,
        positions: usize,
        rng: &mut R,
    ) -> f64 {
        let [s1, s2, t1, t2] = &mut self.walks;
        fill_walk(g, s, positions, rng, s1);
        fill_walk(g, s, positions, rng, s2);
        fill_walk(g, t, positions, rng, t1);
        fill_walk(g, t, positions, rng, t2);

        let inv = &self.inv_degree[..];
        let scratch = &mut self.scratch[..];
        let (mut a_s1, mut a_t1) = (0.0, 0.0);
        for &x in s1.iter() {
            scratch[x as usize] += 1;
            a_s1 += inv[x as usize];
        }
        for &x in t1.iter() {
            scratch[x as usize] -= 1;
            a_t1 += inv[x as usize];
        }
        let pass = |w: &[u32]| -> (f64, f64) {
            w.iter().fold((0.0, 0.0), |(z, a), &x| {
                let q = inv[x as usize];
                (z + scratch[x as usize] as f64 * q * q, a + q)
            })
        };
        let (zs, a_s2) = pass(s2);
        let (zt, a_t2) = pass(t2);
        for &x in s1.iter().chain(t1.iter()) {
            scratch[x as usize] = 0;
        }
        (zs - zt) - (a_s1 - a_t1) * (a_s2 - a_t2) / g.n() as f64
    }
}

/// One draw of `Z` with walks of `ell` positions.
pub fn sample_z<R: Rng + ?Sized>(g: &Graph, s: usize, t: usize, ell: usize, rng: &mut R) -> f64 {
    ZSampler::new(g, ell).sample(g, s, t, ell, rng)
}

/// Range bound on `Z` for walks of `ell` positions.
pub fn psi(ell: usize, min_degree: usize, n: usize) -> f64 {
    let l2 = (ell as f64).powi(2);
    let d2 = (min_degree as f64).powi(2);
    2.0 * l2 / d2 + 2.0 * l2 / (n as f64 * d2)
}

fn ceil_to_u64(x: f64) -> u64 {
    if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        x.ceil().max(1.0) as u64
    }
}

/// Worst-case `SWF` sample count `⌈ψ² ln(2/δ) / (2ε²)⌉`.
pub fn r_star(ell: usize, min_degree: usize, n: usize, epsilon: f64, delta: f64) -> u64 {
    let p = psi(ell, min_degree, n);
    ceil_to_u64(p * p * (2.0 / delta).ln() / (2.0 * epsilon * epsilon))
}

/// `STW` sample count `⌈128 ℓ⁴ ln(8ℓ²/δ) / ε²⌉`.
pub fn stw_samples(ell: usize, epsilon: f64, delta: f64) -> u64 {
    let l = ell as f64;
    ceil_to_u64(128.0 * l.powi(4) * (8.0 * l * l / delta).ln() / (epsilon * epsilon))
}

/// Empirical-Bernstein radius `√(2σ̂² ln(3/δ)/k) + 3ψ ln(3/δ)/k`.
pub fn bernstein_radius(k: u64, var_hat: f64, psi: f64, delta: f64) -> f64 {
    if k == 0 {
        return f64::INFINITY;
    }
    let log = (3.0 / delta).ln();
    let k = k as f64;
    (2.0 * var_hat * log / k).sqrt() + 3.0 * psi * log / k
}

/// Running moments and stopping rule of an `SWF` query.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub k: u64,
    pub sum_z: f64,
    pub sum_z2: f64,
    pub psi: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub r_star: u64,
}

impl EstimatorState {
    pub fn new(psi: f64, epsilon: f64, delta: f64, r_star: u64) -> Self {
        Self {
            k: 0,
            sum_z: 0.0,
            sum_z2: 0.0,
            psi,
            epsilon,
            delta,
            r_star,
        }
    }

    pub fn push(&mut self, z: f64) {
        self.k += 1;
        self.sum_z += z;
        self.sum_z2 += z * z;
    }

    pub fn mean(&self) -> f64 {
        if self.k == 0 {
            0.0
        } else {
            self.sum_z / self.k as f64
        }
    }

    /// Population variance, clamped at zero.
    pub fn variance(&self) -> f64 {
        if self.k == 0 {
            return 0.0;
        }
        let m = self.mean();
        (self.sum_z2 / self.k as f64 - m * m).max(0.0)
    }

    pub fn std_error(&self) -> f64 {
        if self.k < 2 {
            return f64::INFINITY;
        }
        (self.variance() / (self.k - 1) as f64).sqrt()
    }

    pub fn radius(&self) -> f64 {
        bernstein_radius(self.k, self.variance(), self.psi, self.delta)
    }

    pub fn converged(&self) -> bool {
        self.radius() <= self.epsilon / 2.0
    }

    pub fn exhausted(&self) -> bool {
        self.k >= self.r_star
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingConfig {
    pub delta: f64,
    /// Logical workers; each owns one random stream.
    pub workers: usize,
    /// Samples per worker between merges.
    pub batch: usize,
    /// Hard cap on samples per query, below the theoretical count.
    pub max_samples: Option<u64>,
    pub execution: Execution,
    pub deadline: Option<Instant>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            delta: 0.01,
            workers: 1,
            batch: 256,
            max_samples: None,
            execution: Execution::default(),
            deadline: None,
        }
    }
}

impl SamplingConfig {
    pub fn with_delta(delta: f64) -> Self {
        Self {
            delta,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.workers == 0 || self.batch == 0 {
            return Err(Error::InvalidParameter(
                "workers and batch must be positive".into(),
            ));
        }
        if self.max_samples == Some(0) {
            return Err(Error::InvalidParameter(
                "max samples must be positive".into(),
            ));
        }
        Ok(())
    }

    fn timed_out(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

fn check_query(
    g: &Graph,
    spectral: &SpectralInfo,
    s: usize,
    t: usize,
    epsilon: f64,
    cfg: &SamplingConfig,
) -> Result<TruncationParams> {
    check_pair(g, s, t)?;
    g.check_ergodic()?;
    cfg.validate()?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    TruncationParams::for_pair(g, s, t, spectral.lambda, epsilon)
}

struct SwfWorker {
    rng: ChaCha8Rng,
    sampler: ZSampler,
    out: Vec<f64>,
}

/// `SWF`: average `Z` until the Bernstein radius is at most `ε/2`, or the
/// sample count reaches `r*` (or `cfg.max_samples`).
pub fn query_swf(
    g: &Graph,
    spectral: &SpectralInfo,
    s: usize,
    t: usize,
    epsilon: f64,
    cfg: &SamplingConfig,
    seed: u64,
) -> Result<Estimate> {
    let start = Instant::now();
    let params = check_query(g, spectral, s, t, epsilon, cfg)?;
    let ell = params.ell;
    let psi_val = psi(ell, g.min_degree(), g.n());
    let r = r_star(ell, g.min_degree(), g.n(), epsilon, cfg.delta);
    let cap = cfg.max_samples.map_or(r, |m| m.min(r));
    let mut state = EstimatorState::new(psi_val, epsilon, cfg.delta, r);

    let mut workers: Vec<SwfWorker> = (0..cfg.workers)
        .map(|w| SwfWorker {
            rng: stream_rng(seed, w as u64),
            sampler: ZSampler::new(g, ell),
            out: Vec::with_capacity(cfg.batch),
        })
        .collect();

    'outer: loop {
        if cfg.timed_out() {
            return Err(Error::Timeout);
        }
        cfg.execution.map_mut(&mut workers, |w| {
            w.out.clear();
            for _ in 0..cfg.batch {
                let z = w.sampler.sample(g, s, t, ell, &mut w.rng);
                w.out.push(z);
            }
        });
        for w in &workers {
            for &z in &w.out {
                debug_assert!(
                    z.abs() <= psi_val * (1.0 + 1e-12),
                    "|Z| = {} > ψ = {psi_val}",
                    z.abs()
                );
                state.push(z);
                if state.converged() || state.k >= cap {
                    break 'outer;
                }
            }
        }
    }

    Ok(Estimate {
        value: state.mean(),
        method: Method::Swf,
        ell,
        work: state.k,
        touched: 0,
        epsilon,
        delta: Some(cfg.delta),
        std_error: Some(state.std_error()),
        capped: !state.converged() && state.k < r,
        elapsed: start.elapsed(),
    })
}

/// Coin families of the acceptance estimator, in draw order.
pub const STW_FAMILIES: [&str; 8] = ["W", "X", "Y", "Z", "W_bar", "X_bar", "Y_bar", "Z_bar"];

/// Outcome of an acceptance-based run at fixed `ℓ` and `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct StwRun {
    pub ell: usize,
    pub samples: u64,
    /// Accepted coins per `(i, j)` (row-major, `ℓ × ℓ`) and family.
    pub counts: Vec<[u64; 8]>,
    pub value: f64,
    pub std_error: f64,
}

struct StwWorker {
    index: usize,
    rng: ChaCha8Rng,
    walks: [Vec<u32>; 4],
    counts: Vec<[u64; 8]>,
    samples: u64,
    sum: f64,
    sum2: f64,
}

impl StwWorker {
    fn new(seed: u64, w: usize, ell: usize) -> Self {
        Self {
            index: w,
            rng: stream_rng(seed, w as u64),
            walks: std::array::from_fn(|_| Vec::with_capacity(ell)),
            counts: vec![[0; 8]; ell * ell],
            samples: 0,
            sum: 0.0,
            sum2: 0.0,
        }
    }

    /// One quadruple. Draw order: walks S₁, S₂, T₁, T₂, then for each
    /// `(i, j)` in row-major order the conditional coins W, X, Y, Z (only
    /// when the end nodes coincide) followed by W̄, X̄, Ȳ, Z̄.
    fn draw(&mut self, g: &Graph, s: usize, t: usize, ell: usize) {
        let inv_n = 1.0 / g.n() as f64;
        let [s1, s2, t1, t2] = &mut self.walks;
        fill_walk(g, s, ell, &mut self.rng, s1);
        fill_walk(g, s, ell, &mut self.rng, s2);
        fill_walk(g, t, ell, &mut self.rng, t1);
        fill_walk(g, t, ell, &mut self.rng, t2);
        let inv_d = |v: u32| 1.0 / g.degree(v as usize) as f64;
        let rng = &mut self.rng;
        let mut coin = |p: f64| rng.random::<f64>() < p;
        let mut value = 0.0;
        for i in 0..ell {
            for j in 0..ell {
                let (a1, a2, b1, b2) = (s1[i], s2[j], t1[i], t2[j]);
                let hit = [
                    a1 == a2 && coin(inv_d(a1) * inv_d(a1)),
                    b1 == b2 && coin(inv_d(b1) * inv_d(b1)),
                    a1 == b2 && coin(inv_d(a1) * inv_d(a1)),
                    b1 == a2 && coin(inv_d(b1) * inv_d(b1)),
                    coin(inv_d(a1) * inv_d(a2)),
                    coin(inv_d(b1) * inv_d(b2)),
                    coin(inv_d(a1) * inv_d(b2)),
                    coin(inv_d(b1) * inv_d(a2)),
                ];
                let cell = &mut self.counts[i * ell + j];
                for (c, &h) in cell.iter_mut().zip(&hit) {
                    *c += h as u64;
                }
                let f = |k: usize| hit[k] as i32 as f64;
                value += (f(0) + f(1) - f(2) - f(3)) - (f(4) + f(5) - f(6) - f(7)) * inv_n;
            }
        }
        self.samples += 1;
        self.sum += value;
        self.sum2 += value * value;
    }
}

/// Acceptance estimator with walks of `ell` positions and exactly `r`
/// quadruples, split over `cfg.workers` streams of `seed`.
pub fn stw_run(
    g: &Graph,
    s: usize,
    t: usize,
    ell: usize,
    r: u64,
    cfg: &SamplingConfig,
    seed: u64,
) -> Result<StwRun> {
    check_pair(g, s, t)?;
    cfg.validate()?;
    if ell == 0 || r == 0 {
        return Err(Error::InvalidParameter("ell and r must be positive".into()));
    }
    let nw = cfg.workers as u64;
    let mut workers: Vec<StwWorker> = (0..cfg.workers)
        .map(|w| StwWorker::new(seed, w, ell))
        .collect();
    // Worker w owns samples w, w + nw, w + 2nw, ...; chunks of `batch`
    // between deadline checks.
    let quota = |w: usize| r / nw + u64::from((w as u64) < r % nw);
    loop {
        if cfg.timed_out() {
            return Err(Error::Timeout);
        }
        let pending = cfg.execution.map_mut(&mut workers, |wk| {
            let w = wk.index;
            let todo = quota(w).saturating_sub(wk.samples).min(cfg.batch as u64);
            for _ in 0..todo {
                wk.draw(g, s, t, ell);
            }
            quota(w) > wk.samples
        });
        if !pending.into_iter().any(|p| p) {
            break;
        }
    }
    let mut counts = vec![[0u64; 8]; ell * ell];
    let (mut sum, mut sum2) = (0.0, 0.0);
    for wk in &workers {
        for (acc, c) in counts.iter_mut().zip(&wk.counts) {
            for k in 0..8 {
                acc[k] += c[k];
            }
        }
        sum += wk.sum;
        sum2 += wk.sum2;
    }
    let rf = r as f64;
    let mean = sum / rf;
    let var = (sum2 / rf - mean * mean).max(0.0);
    let std_error = if r > 1 {
        (var / (rf - 1.0)).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(StwRun {
        ell,
        samples: r,
        counts,
        value: mean,
        std_error,
    })
}

/// `STW`. The sample count is the Chernoff–Hoeffding value, lowered to
/// `sample_override` or `cfg.max_samples` when either is smaller.
#[allow(clippy::too_many_arguments)]
pub fn query_stw(
    g: &Graph,
    spectral: &SpectralInfo,
    s: usize,
    t: usize,
    epsilon: f64,
    cfg: &SamplingConfig,
    seed: u64,
    sample_override: Option<u64>,
) -> Result<Estimate> {
    let start = Instant::now();
    let params = check_query(g, spectral, s, t, epsilon, cfg)?;
    let ell = params.ell;
    let full = stw_samples(ell, epsilon, cfg.delta);
    let r = [Some(full), sample_override, cfg.max_samples]
        .into_iter()
        .flatten()
        .min()
        .unwrap_or(full);
    let run = stw_run(g, s, t, ell, r, cfg, seed)?;
    Ok(Estimate {
        value: run.value,
        method: Method::Stw,
        ell,
        work: r,
        touched: 0,
        epsilon,
        delta: Some(cfg.delta),
        std_error: Some(run.std_error),
        capped: r < full,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{complete, cycle, erdos_renyi_connected, path, star};
    use crate::push::truncated_beta;
    use crate::seed::derive;
    use proptest::prelude::*;

    fn walk(nodes: &[u32]) -> Walk {
        Walk {
            nodes: nodes.to_vec(),
        }
    }

    #[test]
    fn walk_basics() {
        let g = complete(3);
        let mut rng = stream_rng(1, 0);
        assert_eq!(random_walk(&g, 2, 0, &mut rng).nodes(), &[2]);
        let w = random_walk(&g, 0, 50, &mut rng);
        assert_eq!(w.positions(), 51);
        assert_eq!(w.length(), 50);
        assert_eq!(w.start(), 0);
        for pair in w.nodes().windows(2) {
            assert!(g.has_edge(pair[0] as usize, pair[1] as usize));
        }
        let a = random_walk(&g, 0, 30, &mut stream_rng(9, 3));
        let b = random_walk(&g, 0, 30, &mut stream_rng(9, 3));
        assert_eq!(a, b);
    }

    #[test]
    fn first_step_is_uniform() {
        let g = complete(3);
        let mut rng = stream_rng(4, 0);
        let ones = (0..10_000)
            .filter(|_| random_walk(&g, 0, 1, &mut rng).nodes()[1] == 1)
            .count();
        assert!((ones as f64 / 1e4 - 0.5).abs() < 0.02);
    }

    #[test]
    fn step_chi_square() {
        // 2 categories per start node; critical value at 0.001 with 1 dof.
        let g = complete(3);
        let mut rng = stream_rng(5, 0);
        for v in 0..3u32 {
            let mut counts = [0f64; 3];
            let trials = 100_000;
            for _ in 0..trials {
                counts[step(&g, v, &mut rng) as usize] += 1.0;
            }
            assert_eq!(counts[v as usize], 0.0);
            let expected = trials as f64 / 2.0;
            let chi2: f64 = (0..3)
                .filter(|&u| u != v as usize)
                .map(|u| (counts[u] - expected).powi(2) / expected)
                .sum();
            assert!(chi2 < 10.828, "chi2 = {chi2}");
        }
    }

    #[test]
    fn xi_examples() {
        let g = cycle(5);
        let v = walk(&[2]);
        assert_eq!(xi(&v, &v, &g), 0.25);
        assert_eq!(xi_prime(&v, &v, &g), 0.25);
        assert_eq!(xi(&walk(&[0, 1, 0]), &walk(&[2, 3, 4]), &g), 0.0);
        // 0 appears twice and once: 2 coincidences; 1 once and twice: 2.
        assert_eq!(xi(&walk(&[0, 1, 0]), &walk(&[1, 0, 1]), &g), 4.0 * 0.25);
    }

    #[test]
    fn psi_and_r_star_values() {
        assert!((psi(10, 2, 3) - (50.0 + 200.0 / 12.0)).abs() < 1e-12);
        let expect = (psi(10, 2, 3).powi(2) * 200f64.ln() / 0.02).ceil() as u64;
        assert_eq!(r_star(10, 2, 3, 0.1, 0.01), expect);
        let a = r_star(10, 2, 3, 0.1, 0.01) as f64;
        let b = r_star(10, 2, 3, 0.2, 0.01) as f64;
        assert!((a / 4.0 - b).abs() <= 1.0);
        let lim = psi(10, 2, 3).powi(2) * 2f64.ln() / 0.02;
        assert_eq!(r_star(10, 2, 3, 0.1, 1.0), lim.ceil() as u64);
    }

    #[test]
    fn bernstein_examples() {
        let log = 300f64.ln();
        assert!(
            (bernstein_radius(100, 1.0, 10.0, 0.01)
                - ((2.0 * log / 100.0).sqrt() + 30.0 * log / 100.0))
                .abs()
                < 1e-12
        );
        assert!((bernstein_radius(7, 0.0, 4.0, 0.1) - 12.0 * 30f64.ln() / 7.0).abs() < 1e-12);
        let sq = |k| bernstein_radius(k, 2.0, 0.0, 0.05);
        let lin = |k| bernstein_radius(k, 0.0, 3.0, 0.05);
        assert!((sq(40) / sq(160) - 2.0).abs() < 1e-12);
        assert!((lin(40) / lin(160) - 4.0).abs() < 1e-12);
        assert_eq!(bernstein_radius(0, 1.0, 1.0, 0.1), f64::INFINITY);
    }

    #[test]
    fn estimator_state_moments() {
        let mut st = EstimatorState::new(1.0, 0.1, 0.01, 10);
        for z in [1.0, 2.0, 3.0, 4.0] {
            st.push(z);
        }
        assert_eq!(st.mean(), 2.5);
        assert!((st.variance() - 1.25).abs() < 1e-12);
        let mut flat = EstimatorState::new(1.0, 0.1, 0.01, 10);
        for _ in 0..5 {
            flat.push(0.1 + 0.2);
        }
        assert!(flat.variance() >= 0.0);
    }

    #[test]
    fn fast_sampler_matches_definition() {
        let g = erdos_renyi_connected(20, 0.3, 2).unwrap();
        let mut sampler = ZSampler::new(&g, 9);
        for k in 0..200 {
            let mut a = stream_rng(k, 0);
            let mut b = stream_rng(k, 0);
            let fast = sampler.sample(&g, 3, 8, 9, &mut a);
            let s1 = random_walk(&g, 3, 8, &mut b);
            let s2 = random_walk(&g, 3, 8, &mut b);
            let t1 = random_walk(&g, 8, 8, &mut b);
            let t2 = random_walk(&g, 8, 8, &mut b);
            let slow = z_from_walks(&g, &s1, &s2, &t1, &t2);
            assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
        }
    }

    fn mean_and_se(xs: impl Iterator<Item = f64>) -> (f64, f64) {
        let mut st = EstimatorState::new(0.0, 1.0, 0.5, u64::MAX);
        xs.for_each(|z| st.push(z));
        (st.mean(), st.std_error())
    }

    #[test]
    fn z_is_unbiased_for_truncated_beta() {
        let cases = [
            (complete(3), 0, 1, 20),
            (cycle(5), 0, 2, 12),
            (erdos_renyi_connected(20, 0.3, 7).unwrap(), 1, 5, 8),
        ];
        for (g, s, t, ell) in cases {
            let target = truncated_beta(&g, s, t, ell);
            let mut sampler = ZSampler::new(&g, ell);
            let mut rng = stream_rng(11, 0);
            let p = psi(ell, g.min_degree(), g.n());
            let (mean, se) = mean_and_se((0..100_000).map(|_| {
                let z = sampler.sample(&g, s, t, ell, &mut rng);
                assert!(z.abs() <= p);
                z
            }));
            assert!(
                (mean - target).abs() <= 4.0 * se,
                "{mean} vs {target} (se {se})"
            );
        }
    }

    #[test]
    fn xi_bounded_by_positions() {
        let g = erdos_renyi_connected(15, 0.3, 3).unwrap();
        let d = g.min_degree() as f64;
        let mut rng = stream_rng(2, 0);
        for _ in 0..500 {
            let a = random_walk(&g, 0, 9, &mut rng);
            let b = random_walk(&g, 0, 9, &mut rng);
            assert!(xi(&a, &b, &g) <= 100.0 / (d * d));
            assert!(xi_prime(&a, &b, &g) <= 100.0 / (d * d));
        }
    }

    #[test]
    fn stw_degenerate_single_position() {
        let g = cycle(5);
        let cfg = SamplingConfig::default();
        let run = stw_run(&g, 0, 2, 1, 50_000, &cfg, 3).unwrap();
        // W, X accept 1/4; Y, Z never fire; bars 1/4 each, cancelling pairwise.
        let c = run.counts[0];
        assert_eq!((c[2], c[3]), (0, 0));
        assert!((run.value - 0.5).abs() < 4.0 * run.std_error + 1e-12);
        assert!((run.value - truncated_beta(&g, 0, 2, 1)).abs() < 4.0 * run.std_error);
    }

    #[test]
    fn stw_counts_are_bounded() {
        let g = complete(3);
        let run = stw_run(&g, 0, 1, 4, 2_000, &SamplingConfig::default(), 1).unwrap();
        assert_eq!(run.counts.len(), 16);
        for cell in &run.counts {
            for &c in cell {
                assert!(c <= run.samples);
            }
        }
    }

    #[test]
    fn stw_is_unbiased() {
        let cases = [
            (complete(3), 0, 1, 6),
            (cycle(5), 1, 3, 5),
            (erdos_renyi_connected(20, 0.3, 7).unwrap(), 1, 5, 4),
        ];
        for (g, s, t, ell) in cases {
            let target = truncated_beta(&g, s, t, ell);
            let run = stw_run(&g, s, t, ell, 40_000, &SamplingConfig::default(), 21).unwrap();
            assert!(
                (run.value - target).abs() <= 4.0 * run.std_error,
                "{} vs {target}",
                run.value
            );
        }
    }

    #[test]
    fn stw_independent_of_execution_mode() {
        let g = cycle(7);
        let mut cfg = SamplingConfig {
            workers: 3,
            batch: 17,
            ..SamplingConfig::default()
        };
        cfg.execution = Execution::Sequential;
        let a = stw_run(&g, 0, 3, 5, 1000, &cfg, 8).unwrap();
        cfg.execution = Execution::Parallel;
        let b = stw_run(&g, 0, 3, 5, 1000, &cfg, 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn query_stw_caps_samples() {
        let g = complete(3);
        let info = SpectralInfo::new(0.5, None).unwrap();
        let cfg = SamplingConfig::default();
        let est = query_stw(&g, &info, 0, 1, 0.1, &cfg, 4, Some(3000)).unwrap();
        assert_eq!(est.work, 3000);
        assert!(est.capped);
        assert_eq!(est.ell, 11);
        assert!(stw_samples(11, 0.1, 0.01) > 3000);
    }

    #[test]
    fn swf_on_triangle() {
        let g = complete(3);
        let info = SpectralInfo::new(0.5, None).unwrap();
        let cfg = SamplingConfig::default();
        let est = query_swf(&g, &info, 0, 1, 0.1, &cfg, 99).unwrap();
        let r = r_star(est.ell, 2, 3, 0.1, 0.01);
        assert!(est.work <= r / 10);
        assert!(!est.capped);
        assert!((est.value - 2.0 / 9.0).abs() <= 0.1);
        let again = query_swf(&g, &info, 0, 1, 0.1, &cfg, 99).unwrap();
        assert_eq!((est.value, est.work), (again.value, again.work));
    }

    #[test]
    fn swf_respects_sample_cap() {
        let g = complete(3);
        let info = SpectralInfo::new(0.5, None).unwrap();
        let cfg = SamplingConfig {
            max_samples: Some(1000),
            ..SamplingConfig::default()
        };
        let est = query_swf(&g, &info, 0, 1, 0.1, &cfg, 1).unwrap();
        assert_eq!(est.work, 1000);
        assert!(est.capped);
    }

    #[test]
    fn swf_result_ignores_execution_mode() {
        let g = erdos_renyi_connected(20, 0.3, 4).unwrap();
        let info = SpectralInfo::estimate_lambda_only(&g, &Default::default()).unwrap();
        let mut cfg = SamplingConfig {
            workers: 4,
            batch: 64,
            max_samples: Some(20_000),
            ..SamplingConfig::default()
        };
        cfg.execution = Execution::Sequential;
        let a = query_swf(&g, &info, 0, 7, 0.2, &cfg, derive(3, 4)).unwrap();
        cfg.execution = Execution::Parallel;
        let b = query_swf(&g, &info, 0, 7, 0.2, &cfg, derive(3, 4)).unwrap();
        assert_eq!((a.value, a.work), (b.value, b.work));
    }

    #[test]
    fn query_preconditions() {
        let info = SpectralInfo::new(0.5, None).unwrap();
        let cfg = SamplingConfig::default();
        assert!(matches!(
            query_swf(&complete(3), &info, 0, 0, 0.1, &cfg, 0),
            Err(Error::InvalidQuery(_))
        ));
        assert!(matches!(
            query_swf(&path(4), &info, 0, 1, 0.1, &cfg, 0),
            Err(Error::Bipartite)
        ));
        assert!(matches!(
            query_stw(&star(4), &info, 0, 1, 0.1, &cfg, 0, None),
            Err(Error::Bipartite)
        ));
        assert!(query_swf(&complete(3), &info, 0, 1, 1.5, &cfg, 0).is_err());
        let bad = SamplingConfig::with_delta(0.0);
        assert!(query_swf(&complete(3), &info, 0, 1, 0.1, &bad, 0).is_err());
        let late = SamplingConfig {
            deadline: Some(Instant::now()),
            ..SamplingConfig::default()
        };
        assert!(matches!(
            query_swf(&complete(3), &info, 0, 1, 0.1, &late, 0),
            Err(Error::Timeout)
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn z_within_psi(seed in any::<u64>(), ell in 1usize..15) {
            let g = erdos_renyi_connected(12, 0.35, seed % 7).unwrap();
            let mut rng = stream_rng(seed, 0);
            let z = sample_z(&g, 0, 1, ell, &mut rng);
            prop_assert!(z.abs() <= psi(ell, g.min_degree(), g.n()));
        }

        #[test]
        fn variance_never_negative(zs in proptest::collection::vec(-5.0f64..5.0, 1..50)) {
            let mut st = EstimatorState::new(5.0, 0.1, 0.01, 100);
            for z in zs {
                st.push(z);
            }
            prop_assert!(st.variance() >= 0.0);
            prop_assert!(st.radius() > 0.0);
        }
    }
}

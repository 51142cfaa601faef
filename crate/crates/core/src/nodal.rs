//! Nodal biharmonic distance `β(s) = Σ_{t≠s} β(s,t)`.
//!
//! `SNB` sums an `SWF` estimate for every target. `SNB+` keeps each target
//! with probability `p` and rescales the partial sum by `1/p`. Per-pair
//! queries use seed `derive(seed, t)`, so a target gets the same estimate
//! whichever method evaluates it.

use std::time::{Duration, Instant};

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::par::Execution;
use crate::rwalk::{query_swf, SamplingConfig};
use crate::seed::{derive, stream_rng, SUBSET_STREAM};
use crate::spectral::SpectralInfo;

#[derive(Debug, Clone, PartialEq)]
pub struct NodalEstimate {
    pub node: usize,
    pub value: f64,
    pub pairs_evaluated: usize,
    pub sampling_probability: f64,
    pub per_pair_epsilon: f64,
    pub per_pair_delta: f64,
    /// Total `SWF` samples over all pairs.
    pub samples: u64,
    /// Whether any pair hit the sample cap.
    pub capped: bool,
    pub elapsed: Duration,
}

fn check_source(g: &Graph, s: usize, epsilon: f64) -> Result<()> {
    if s >= g.n() {
        return Err(Error::InvalidQuery(format!("node {s} out of range")));
    }
    g.check_ergodic()?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    Ok(())
}

/// Keeps each candidate independently with probability `p`. `p = 1`
/// returns every candidate without drawing.
pub fn bernoulli_subset<R: Rng + ?Sized>(
    candidates: &[usize],
    p: f64,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sampling probability must lie in (0, 1], got {p}"
        )));
    }
    if p == 1.0 {
        return Ok(candidates.to_vec());
    }
    Ok(candidates
        .iter()
        .copied()
        .filter(|_| rng.random_bool(p))
        .collect())
}

/// `min(φ √(ln n) / (√n τ), 1)`.
pub fn snb_plus_probability(n: usize, phi: f64, tau: f64) -> f64 {
    let n = n as f64;
    (phi * n.ln().sqrt() / (n.sqrt() * tau)).min(1.0)
}

/// `Σ_{t∈subset} value(t) / p`.
pub fn estimate_sum_by_subset(
    subset: &[usize],
    p: f64,
    mut value: impl FnMut(usize) -> f64,
) -> f64 {
    subset.iter().map(|&t| value(t)).sum::<f64>() / p
}

/// Runs `SWF` from `s` to each target, spreading pairs over the pool.
fn sum_pairs(
    g: &Graph,
    spectral: &SpectralInfo,
    s: usize,
    targets: &[usize],
    epsilon: f64,
    cfg: &SamplingConfig,
    seed: u64,
) -> Result<(f64, u64, bool)> {
    let inner = SamplingConfig {
        execution: Execution::Sequential,
        ..cfg.clone()
    };
    let results = cfg.execution.map_range(targets.len(), |i| {
        let t = targets[i];
        query_swf(g, spectral, s, t, epsilon, &inner, derive(seed, t as u64))
    });
    let (mut sum, mut samples, mut capped) = (0.0, 0, false);
    for r in results {
        let e = r?;
        sum += e.value;
        samples += e.work;
        capped |= e.capped;
    }
    Ok((sum, samples, capped))
}

/// `SNB`: every target at accuracy `ε` and failure probability
/// `δ/(n − 1)`, where `δ` is `cfg.delta`.
pub fn query_snb(
    g: &Graph,
    spectral: &SpectralInfo,
    s: usize,
    epsilon: f64,
    cfg: &SamplingConfig,
    seed: u64,
) -> Result<NodalEstimate> {
    let start = Instant::now();
    check_source(g, s, epsilon)?;
    let targets: Vec<usize> = (0..g.n()).filter(|&t| t != s).collect();
    let per_pair = SamplingConfig {
        delta: cfg.delta / targets.len() as f64,
        ..cfg.clone()
    };
    let (value, samples, capped) = sum_pairs(g, spectral, s, &targets, epsilon, &per_pair, seed)?;
    Ok(NodalEstimate {
        node: s,
        value,
        pairs_evaluated: targets.len(),
        sampling_probability: 1.0,
        per_pair_epsilon: epsilon,
        per_pair_delta: per_pair.delta,
        samples,
        capped,
        elapsed: start.elapsed(),
    })
}

/// `SNB+`: Bernoulli subset of targets at accuracy `ε/2` each, rescaled by
/// `1/p`. Needs `γ₂` in `spectral`.
pub fn query_snb_plus(
    g: &Graph,
    spectral: &SpectralInfo,
    s: usize,
    epsilon: f64,
    cfg: &SamplingConfig,
    seed: u64,
) -> Result<NodalEstimate> {
    let start = Instant::now();
    check_source(g, s, epsilon)?;
    let phi = spectral
        .phi()
        .ok_or_else(|| Error::InvalidParameter("nodal sampling needs gamma2".into()))?;
    let theta = epsilon / 2.0;
    let tau = epsilon / 2.0;
    let p = snb_plus_probability(g.n(), phi, tau);
    let candidates: Vec<usize> = (0..g.n()).filter(|&t| t != s).collect();
    let subset = bernoulli_subset(&candidates, p, &mut stream_rng(seed, SUBSET_STREAM))?;
    if subset.is_empty() {
        return Ok(NodalEstimate {
            node: s,
            value: 0.0,
            pairs_evaluated: 0,
            sampling_probability: p,
            per_pair_epsilon: theta,
            per_pair_delta: cfg.delta,
            samples: 0,
            capped: false,
            elapsed: start.elapsed(),
        });
    }
    let per_pair = SamplingConfig {
        delta: cfg.delta / subset.len() as f64,
        ..cfg.clone()
    };
    let (sum, samples, capped) = sum_pairs(g, spectral, s, &subset, theta, &per_pair, seed)?;
    Ok(NodalEstimate {
        node: s,
        value: sum / p,
        pairs_evaluated: subset.len(),
        sampling_probability: p,
        per_pair_epsilon: theta,
        per_pair_delta: per_pair.delta,
        samples,
        capped,
        elapsed: start.elapsed(),
    })
}

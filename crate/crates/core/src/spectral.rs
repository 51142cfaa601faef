//! Spectral quantities the truncation lengths and nodal sampling need.
//!
//! * `λ = max(|λ₂|, |λ_n|)` of the transition matrix `P = D⁻¹A`, found by
//!   power iteration on `Q²` with `Q = D^{-1/2} A D^{-1/2}` (similar to `P`)
//!   after deflating the top eigenvector `u₁ ∝ D^{1/2}·1`. On the deflated
//!   subspace the dominant eigenvalue of `Q²` is exactly `λ²`, so the sign of
//!   the extreme eigenvalue never matters.
//! * `γ₂`, the algebraic connectivity, from power iteration on `c·I − L`
//!   deflated against the all-ones vector, where `c` bounds the Laplacian
//!   spectrum from above.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::seed::stream_rng;

/// Largest value the inflated `λ` may take.
pub const LAMBDA_CEILING: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Relative inflation applied to the raw `λ` estimate.
    pub slack: f64,
    pub seed: u64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 10_000,
            slack: 0.01,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralInfo {
    /// Inflated estimate of `max(|λ₂|, |λ_n|)` of `P`, in `(0, 1)`.
    pub lambda: f64,
    /// Algebraic connectivity, when known. Only nodal subset sampling uses it.
    pub gamma2: Option<f64>,
}

impl SpectralInfo {
    pub fn new(lambda: f64, gamma2: Option<f64>) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must lie in (0, 1), got {lambda}"
            )));
        }
        if let Some(g2) = gamma2 {
            if !(g2 > 0.0 && g2.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "gamma2 must be positive, got {g2}"
                )));
            }
        }
        Ok(Self { lambda, gamma2 })
    }

    pub fn estimate(g: &Graph, cfg: &SpectralConfig) -> Result<Self> {
        let lambda = estimate_lambda_with(g, cfg)?;
        let gamma2 = estimate_gamma2_with(g, cfg)?;
        Self::new(lambda, Some(gamma2))
    }

    pub fn estimate_lambda_only(g: &Graph, cfg: &SpectralConfig) -> Result<Self> {
        Self::new(estimate_lambda_with(g, cfg)?, None)
    }

    /// Upper bound on any pairwise BD, `2 / γ₂²`.
    pub fn phi(&self) -> Option<f64> {
        self.gamma2.map(|g2| 2.0 / (g2 * g2))
    }
}

/// Power iteration for the dominant eigenvalue of the symmetric PSD operator
/// `apply` restricted to the complement of the unit vector `deflate`.
/// Stops once `‖Mx − μx‖ ≤ tol_of(μ)`.
fn deflated_power_iteration(
    n: usize,
    deflate: &[f64],
    mut apply: impl FnMut(&[f64], &mut [f64]),
    tol_of: impl Fn(f64) -> f64,
    max_iter: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = stream_rng(seed, 0);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut y = vec![0.0; n];
    orthogonalize(&mut x, deflate);
    if normalize(&mut x) == 0.0 {
        return Err(Error::Numeric("degenerate start vector".into()));
    }
    let mut mu = 0.0;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        apply(&x, &mut y);
        orthogonalize(&mut y, deflate);
        mu = dot(&x, &y);
        residual = x
            .iter()
            .zip(&y)
            .map(|(xi, yi)| (yi - mu * xi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol_of(mu) {
            return Ok(mu);
        }
        if normalize(&mut y) == 0.0 {
            // Deflated operator annihilates x: eigenvalue 0.
            return Ok(0.0);
        }
        std::mem::swap(&mut x, &mut y);
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        estimate: mu,
        residual,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn orthogonalize(x: &mut [f64], unit: &[f64]) {
    let c = dot(x, unit);
    for (xi, ui) in x.iter_mut().zip(unit) {
        *xi -= c * ui;
    }
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = dot(x, x).sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    norm
}

fn apply_q(g: &Graph, inv_sqrt_deg: &[f64], x: &[f64], out: &mut [f64]) {
    for (v, o) in out.iter_mut().enumerate() {
        let acc: f64 = g
            .neighbors(v)
            .iter()
            .map(|&w| x[w as usize] * inv_sqrt_deg[w as usize])
            .sum();
        *o = acc * inv_sqrt_deg[v];
    }
}

/// Raw estimate of `λ = max(|λ₂|, |λ_n|)` with relative error about `tol`.
pub fn estimate_lambda_raw(g: &Graph, tol: f64, max_iter: usize, seed: u64) -> Result<f64> {
    if tol <= 0.0 {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    let n = g.n();
    let two_m = 2.0 * g.m() as f64;
    let inv_sqrt_deg: Vec<f64> = g.degrees().map(|d| 1.0 / (d as f64).sqrt()).collect();
    let top: Vec<f64> = g.degrees().map(|d| (d as f64 / two_m).sqrt()).collect();
    let mut tmp = vec![0.0; n];
    let res = deflated_power_iteration(
        n,
        &top,
        |x, out| {
            apply_q(g, &inv_sqrt_deg, x, &mut tmp);
            apply_q(g, &inv_sqrt_deg, &tmp, out);
        },
        // |μ − λ²| ≤ residual, and a relative error r on λ² is r/2 on λ.
        |mu| tol * mu,
        max_iter,
        seed,
    )?;
    Ok(res.max(0.0).sqrt())
}

/// `min(λ·(1 + slack), 1 − 10⁻⁹)`.
pub fn inflate_lambda(raw: f64, slack: f64) -> f64 {
    (raw * (1.0 + slack)).min(LAMBDA_CEILING)
}

/// Inflated `λ` estimate with the default slack.
pub fn estimate_lambda(g: &Graph, tol: f64, max_iter: usize) -> Result<f64> {
    let cfg = SpectralConfig {
        tol,
        max_iter,
        ..Default::default()
    };
    estimate_lambda_with(g, &cfg)
}

pub fn estimate_lambda_with(g: &Graph, cfg: &SpectralConfig) -> Result<f64> {
    let raw = estimate_lambda_raw(g, cfg.tol, cfg.max_iter, cfg.seed)?;
    Ok(inflate_lambda(raw, cfg.slack))
}

/// Second-smallest Laplacian eigenvalue to relative tolerance `tol`.
pub fn estimate_gamma2(g: &Graph, tol: f64, max_iter: usize) -> Result<f64> {
    let cfg = SpectralConfig {
        tol,
        max_iter,
        ..Default::default()
    };
    estimate_gamma2_with(g, &cfg)
}

pub fn estimate_gamma2_with(g: &Graph, cfg: &SpectralConfig) -> Result<f64> {
    if cfg.tol <= 0.0 {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    let n = g.n();
    // Anderson–Morley: γ_n ≤ max over edges of d_u + d_v ≤ 2·max degree.
    let shift = g
        .edges()
        .map(|(u, v)| g.degree(u) + g.degree(v))
        .max()
        .unwrap_or(0) as f64;
    let ones = vec![1.0 / (n as f64).sqrt(); n];
    let tol = cfg.tol;
    let res = deflated_power_iteration(
        n,
        &ones,
        |x, out| {
            for (v, o) in out.iter_mut().enumerate() {
                let nb: f64 = g.neighbors(v).iter().map(|&w| x[w as usize]).sum();
                // (shift·I − L)x = (shift − d_v)x_v + Σ_{w~v} x_w
                *o = (shift - g.degree(v) as f64) * x[v] + nb;
            }
        },
        |mu| tol * (shift - mu).max(f64::MIN_POSITIVE),
        cfg.max_iter,
        cfg.seed,
    )?;
    let gamma2 = shift - res;
    if gamma2 <= 0.0 {
        return Err(Error::Disconnected);
    }
    Ok(gamma2)
}

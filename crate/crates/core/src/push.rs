//! Truncated propagation estimators `Push` and `Push+`.
//!
//! With `h = Σ_{i≥0} (e_s − e_t)ᵀ Pⁱ D⁻¹` the squared biharmonic distance is
//! `β(s,t) = ‖h‖² − (h·1)²/n`. Truncating the series after `ℓ` terms gives
//! `h^ℓ` and `β^ℓ`; the truncation lengths below keep `|β − β^ℓ| ≤ ε/2`.
//!
//! `h^ℓ` is computed by advancing the hop distributions `p_i(s,·)` and
//! `p_i(t,·)` one step at a time and accumulating `(p_i(s,v) − p_i(t,v))/d_v`
//! for `i = 0..ℓ`.

use std::time::Instant;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::estimate::{Estimate, Method};
use crate::graph::Graph;
use crate::spectral::SpectralInfo;

/// A vector switches to a dense array once more than `n / DENSE_RATIO`
/// entries are touched.
const DENSE_RATIO: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationParams {
    pub ell_universal: usize,
    pub ell_pair: Option<usize>,
    /// Length in use: `min(ell_universal, ell_pair)` when both are known.
    pub ell: usize,
    pub lambda: f64,
    pub epsilon: f64,
}

impl TruncationParams {
    pub fn universal(n: usize, lambda: f64, epsilon: f64) -> Result<Self> {
        let ell_universal = universal_length(n, lambda, epsilon)?;
        Ok(Self {
            ell_universal,
            ell_pair: None,
            ell: ell_universal,
            lambda,
            epsilon,
        })
    }

    pub fn for_pair(g: &Graph, s: usize, t: usize, lambda: f64, epsilon: f64) -> Result<Self> {
        let ell_universal = universal_length(g.n(), lambda, epsilon)?;
        let ell_pair = pairwise_length(g, s, t, lambda, epsilon)?;
        Ok(Self {
            ell_universal,
            ell_pair: Some(ell_pair),
            ell: ell_universal.min(ell_pair),
            lambda,
            epsilon,
        })
    }
}

fn check_length_params(lambda: f64, epsilon: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must lie in (0, 1), got {lambda}"
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    Ok(())
}

/// `⌈log(numerator / (ε(1−λ)²)) / log(1/λ)⌉`, at least 1.
fn length_from(numerator: f64, lambda: f64, epsilon: f64) -> usize {
    let x = (numerator / (epsilon * (1.0 - lambda).powi(2))).ln() / (1.0 / lambda).ln();
    if x.is_nan() || x <= 1.0 {
        1
    } else if x >= usize::MAX as f64 {
        usize::MAX
    } else {
        x.ceil() as usize
    }
}

/// Length that works for every pair: `⌈log(12n/(ε(1−λ)²)) / log(1/λ)⌉`.
pub fn universal_length(n: usize, lambda: f64, epsilon: f64) -> Result<usize> {
    check_length_params(lambda, epsilon)?;
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two nodes".into()));
    }
    Ok(length_from(12.0 * n as f64, lambda, epsilon))
}

/// Pair-specific length, driven by the degrees of `s`, `t` and the rest of
/// the graph. Smaller than the universal length around high-degree nodes.
pub fn pairwise_length(g: &Graph, s: usize, t: usize, lambda: f64, epsilon: f64) -> Result<usize> {
    check_length_params(lambda, epsilon)?;
    check_pair(g, s, t)?;
    let n = g.n() as f64;
    let a = 1.0 / g.degree(s) as f64 + 1.0 / g.degree(t) as f64;
    let (sum_sq, sum_inv) = g.degrees().fold((0.0, 0.0), |(sq, inv), d| {
        let two_over = 2.0 / d as f64;
        (sq + (a + two_over).powi(2), inv + two_over)
    });
    let cross = n * a + sum_inv;
    let numerator = 6.0 * sum_sq + 6.0 / n * cross * cross;
    Ok(length_from(numerator, lambda, epsilon))
}

pub(crate) fn check_pair(g: &Graph, s: usize, t: usize) -> Result<()> {
    let n = g.n();
    if s >= n || t >= n {
        return Err(Error::InvalidQuery(format!(
            "node out of range: ({s}, {t}) with n = {n}"
        )));
    }
    if s == t {
        return Err(Error::InvalidQuery("s and t must differ".into()));
    }
    Ok(())
}

/// Sparse vector over nodes that turns dense as it fills up. Iteration
/// order is deterministic: insertion order while sparse, index order once
/// dense.
#[derive(Debug, Clone)]
enum NodeVec {
    Sparse(IndexMap<u32, f64>),
    Dense { values: Vec<f64>, nnz: usize },
}

impl NodeVec {
    fn new(n: usize, dense: bool) -> Self {
        if dense {
            NodeVec::Dense {
                values: vec![0.0; n],
                nnz: 0,
            }
        } else {
            NodeVec::Sparse(IndexMap::new())
        }
    }

    fn is_dense(&self) -> bool {
        matches!(self, NodeVec::Dense { .. })
    }

    fn len(&self) -> usize {
        match self {
            NodeVec::Sparse(map) => map.len(),
            NodeVec::Dense { nnz, .. } => *nnz,
        }
    }

    fn get(&self, v: usize) -> f64 {
        match self {
            NodeVec::Sparse(map) => map.get(&(v as u32)).copied().unwrap_or(0.0),
            NodeVec::Dense { values, .. } => values[v],
        }
    }

    #[inline]
    fn add(&mut self, v: u32, x: f64, n: usize) {
        match self {
            NodeVec::Sparse(map) => {
                *map.entry(v).or_insert(0.0) += x;
                if map.len() * DENSE_RATIO > n {
                    self.densify(n);
                }
            }
            NodeVec::Dense { values, nnz } => {
                let slot = &mut values[v as usize];
                if *slot == 0.0 {
                    *nnz += 1;
                }
                *slot += x;
            }
        }
    }

    fn densify(&mut self, n: usize) {
        if let NodeVec::Sparse(map) = self {
            let mut values = vec![0.0; n];
            for (&v, &x) in map.iter() {
                values[v as usize] = x;
            }
            let nnz = map.len();
            *self = NodeVec::Dense { values, nnz };
        }
    }

    fn for_each(&self, mut f: impl FnMut(usize, f64)) {
        match self {
            NodeVec::Sparse(map) => map.iter().for_each(|(&v, &x)| f(v as usize, x)),
            NodeVec::Dense { values, .. } => values
                .iter()
                .enumerate()
                .filter(|(_, x)| **x != 0.0)
                .for_each(|(v, &x)| f(v, x)),
        }
    }

    #[cfg(test)]
    fn sum(&self) -> f64 {
        let mut acc = 0.0;
        self.for_each(|_, x| acc += x);
        acc
    }
}

/// Truncated `h^ℓ` over the nodes it touches.
#[derive(Debug, Clone)]
pub struct ResidualVector {
    n: usize,
    h: NodeVec,
}

impl ResidualVector {
    /// Builds a vector from explicit entries; repeated nodes accumulate.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut h = NodeVec::new(n, false);
        for (v, x) in entries {
            assert!(v < n, "node {v} out of range");
            h.add(v as u32, x, n);
        }
        Self { n, h }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, v: usize) -> f64 {
        self.h.get(v)
    }

    /// Number of nodes with a nonzero entry.
    pub fn touched(&self) -> usize {
        self.h.len()
    }

    /// Nonzero entries in deterministic order.
    pub fn entries(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(self.h.len());
        self.h.for_each(|v, x| out.push((v, x)));
        out
    }

    pub fn beta(&self) -> f64 {
        beta_from_residual(self, self.n)
    }
}

/// `‖h‖² − (h·1)²/n` over the touched entries.
pub fn beta_from_residual(h: &ResidualVector, n: usize) -> f64 {
    let (mut sq, mut sum) = (0.0, 0.0);
    h.h.for_each(|_, x| {
        sq += x * x;
        sum += x;
    });
    sq - sum * sum / n as f64
}

/// One step of the walk distribution: `next = cur · P`.
fn advance(g: &Graph, cur: &NodeVec) -> NodeVec {
    let n = g.n();
    let mut next = NodeVec::new(n, cur.is_dense());
    cur.for_each(|j, p| {
        let share = p / g.degree(j) as f64;
        for &x in g.neighbors(j) {
            next.add(x, share, n);
        }
    });
    next
}

/// Runs the hop loop, calling `on_hop(i, p_i(s,·), p_i(t,·))` for each hop
/// before it is accumulated.
fn propagate(
    g: &Graph,
    s: usize,
    t: usize,
    ell: usize,
    deadline: Option<Instant>,
    mut on_hop: impl FnMut(usize, &NodeVec, &NodeVec),
) -> Result<ResidualVector> {
    let n = g.n();
    let mut ps = NodeVec::new(n, false);
    let mut pt = NodeVec::new(n, false);
    ps.add(s as u32, 1.0, n);
    pt.add(t as u32, 1.0, n);
    let mut h = NodeVec::new(n, false);
    for i in 0..ell {
        if i > 0 {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                return Err(Error::Timeout);
            }
            ps = advance(g, &ps);
            pt = advance(g, &pt);
        }
        on_hop(i, &ps, &pt);
        ps.for_each(|v, p| h.add(v as u32, p / g.degree(v) as f64, n));
        pt.for_each(|v, p| h.add(v as u32, -p / g.degree(v) as f64, n));
    }
    Ok(ResidualVector { n, h })
}

/// `h^ℓ` for the pair `(s, t)`, summing hops `0..ℓ`.
pub fn push_residual(g: &Graph, s: usize, t: usize, ell: usize) -> ResidualVector {
    propagate(g, s, t, ell, None, |_, _, _| {}).expect("no deadline")
}

pub fn push_residual_until(
    g: &Graph,
    s: usize,
    t: usize,
    ell: usize,
    deadline: Option<Instant>,
) -> Result<ResidualVector> {
    propagate(g, s, t, ell, deadline, |_, _, _| {})
}

/// `β^ℓ(s,t)` at a fixed length.
pub fn truncated_beta(g: &Graph, s: usize, t: usize, ell: usize) -> f64 {
    push_residual(g, s, t, ell).beta()
}

pub fn query_push(
    g: &Graph,
    spectral: &SpectralInfo,
    s: usize,
    t: usize,
    epsilon: f64,
) -> Result<Estimate> {
    query_push_until(g, spectral, s, t, epsilon, false, None)
}

pub fn query_push_plus(
    g: &Graph,
    spectral: &SpectralInfo,
    s: usize,
    t: usize,
    epsilon: f64,
) -> Result<Estimate> {
    query_push_until(g, spectral, s, t, epsilon, true, None)
}

/// `Push` (`plus = false`) or `Push+` with an optional wall-clock deadline.
pub fn query_push_until(
    g: &Graph,
    spectral: &SpectralInfo,
    s: usize,
    t: usize,
    epsilon: f64,
    plus: bool,
    deadline: Option<Instant>,
) -> Result<Estimate> {
    let start = Instant::now();
    check_pair(g, s, t)?;
    g.check_ergodic()?;
    let params = if plus {
        TruncationParams::for_pair(g, s, t, spectral.lambda, epsilon)?
    } else {
        TruncationParams::universal(g.n(), spectral.lambda, epsilon)?
    };
    let h = push_residual_until(g, s, t, params.ell, deadline)?;
    Ok(Estimate {
        value: h.beta(),
        method: if plus { Method::PushPlus } else { Method::Push },
        ell: params.ell,
        work: params.ell as u64,
        touched: h.touched(),
        epsilon,
        delta: None,
        std_error: None,
        capped: false,
        elapsed: start.elapsed(),
    })
}

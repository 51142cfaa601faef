//! Dense ground truth through the Laplacian pseudoinverse,
//! `L† = (L + J/n)⁻¹ − J/n`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::Graph;

pub const DEFAULT_SIZE_LIMIT: usize = 5000;

#[derive(Debug, Clone)]
pub struct DenseOracle {
    lpinv: DMatrix<f64>,
    lpinv2_diag: Vec<f64>,
    trace_lpinv2: f64,
}

pub fn build_oracle(g: &Graph, size_limit: usize) -> Result<DenseOracle> {
    DenseOracle::build(g, size_limit)
}

impl DenseOracle {
    pub fn build(g: &Graph, size_limit: usize) -> Result<Self> {
        let n = g.n();
        if n > size_limit {
            return Err(Error::TooLarge {
                n,
                limit: size_limit,
            });
        }
        let inv_n = 1.0 / n as f64;
        let mut m = DMatrix::from_element(n, n, inv_n);
        for v in 0..n {
            m[(v, v)] += g.degree(v) as f64;
            for &w in g.neighbors(v) {
                m[(v, w as usize)] -= 1.0;
            }
        }
        // L + J/n is positive definite exactly when the graph is connected.
        let chol = m.cholesky().ok_or_else(|| {
            Error::Numeric("L + J/n is not positive definite; is the graph connected?".into())
        })?;
        let mut lpinv = chol.inverse();
        lpinv.add_scalar_mut(-inv_n);
        // Symmetrize away rounding so pair queries are exactly symmetric.
        for i in 0..n {
            for j in i + 1..n {
                let avg = 0.5 * (lpinv[(i, j)] + lpinv[(j, i)]);
                lpinv[(i, j)] = avg;
                lpinv[(j, i)] = avg;
            }
        }
        let lpinv2_diag: Vec<f64> = (0..n)
            .map(|v| lpinv.column(v).iter().map(|x| x * x).sum())
            .collect();
        let trace_lpinv2 = lpinv2_diag.iter().sum();
        Ok(Self {
            lpinv,
            lpinv2_diag,
            trace_lpinv2,
        })
    }

    pub fn n(&self) -> usize {
        self.lpinv.nrows()
    }

    pub fn lpinv(&self) -> &DMatrix<f64> {
        &self.lpinv
    }

    /// Diagonal of `L²†`.
    pub fn lpinv2_diag(&self) -> &[f64] {
        &self.lpinv2_diag
    }

    pub fn trace_lpinv2(&self) -> f64 {
        self.trace_lpinv2
    }

    fn check_node(&self, v: usize) -> Result<()> {
        if v >= self.n() {
            return Err(Error::InvalidQuery(format!("node {v} out of range")));
        }
        Ok(())
    }

    /// `β(s,t) = ‖L†(e_s − e_t)‖²`.
    pub fn pair(&self, s: usize, t: usize) -> Result<f64> {
        self.check_node(s)?;
        self.check_node(t)?;
        if s == t {
            return Err(Error::InvalidQuery("s and t must differ".into()));
        }
        // Columns of the symmetric L†; (a − b)² = (b − a)² keeps this exactly
        // symmetric in (s, t).
        Ok(self
            .lpinv
            .column(s)
            .iter()
            .zip(self.lpinv.column(t).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    /// `β(s) = n·L²†[s,s] + tr(L²†)`.
    pub fn nodal(&self, s: usize) -> Result<f64> {
        self.check_node(s)?;
        Ok(self.n() as f64 * self.lpinv2_diag[s] + self.trace_lpinv2)
    }
}

pub fn exact_pair(o: &DenseOracle, s: usize, t: usize) -> Result<f64> {
    o.pair(s, t)
}

pub fn exact_nodal(o: &DenseOracle, s: usize) -> Result<f64> {
    o.nodal(s)
}

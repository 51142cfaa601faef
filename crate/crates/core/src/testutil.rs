//! Dense eigendecompositions used as independent oracles in unit tests.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::graph::Graph;

pub struct DenseSpectra {
    /// max(|λ₂|, |λ_n|) of P.
    pub lambda: f64,
    pub gamma2: f64,
    pub gamma_n: f64,
    /// Laplacian eigenpairs, eigenvalues ascending.
    pub laplacian_values: Vec<f64>,
    pub laplacian_vectors: DMatrix<f64>,
}

pub fn laplacian(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut l = DMatrix::zeros(n, n);
    for v in 0..n {
        l[(v, v)] = g.degree(v) as f64;
        for &w in g.neighbors(v) {
            l[(v, w as usize)] = -1.0;
        }
    }
    l
}

pub fn dense_spectra(g: &Graph) -> DenseSpectra {
    let n = g.n();
    let mut q = DMatrix::zeros(n, n);
    for v in 0..n {
        for &w in g.neighbors(v) {
            let w = w as usize;
            q[(v, w)] = 1.0 / ((g.degree(v) * g.degree(w)) as f64).sqrt();
        }
    }
    let mut qvals: Vec<f64> = SymmetricEigen::new(q).eigenvalues.iter().copied().collect();
    qvals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let lambda = qvals[1].abs().max(qvals[n - 1].abs());

    let eig = SymmetricEigen::new(laplacian(g));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let laplacian_values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let laplacian_vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    DenseSpectra {
        lambda,
        gamma2: laplacian_values[1],
        gamma_n: laplacian_values[n - 1],
        laplacian_values,
        laplacian_vectors,
    }
}

/// β(s,t) from the Laplacian eigenbasis: Σ_{k≥2} (u_k(s) − u_k(t))² / γ_k².
pub fn spectral_beta(spec: &DenseSpectra, s: usize, t: usize) -> f64 {
    (1..spec.laplacian_values.len())
        .map(|k| {
            let d = spec.laplacian_vectors[(s, k)] - spec.laplacian_vectors[(t, k)];
            d * d / spec.laplacian_values[k].powi(2)
        })
        .sum()
}

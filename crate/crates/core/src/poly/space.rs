//! Dimension of the filter space over a graph set, and the polynomials
//! spanned by stacked first-order layers.

use super::PolyFilter;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::{dot, Matrix};
use crate::spectral::{distinct_eigenvalues, EIGEN_TOL};

/// Default relative rank threshold.
pub const RANK_TOL: f64 = 1e-9;

/// Largest total node count accepted by [`block_diag_t`].
pub const BLOCK_DIAG_CAP: usize = 512;

/// Dimension of the space of degree-`order` filters restricted to `graphs`:
/// the rank of the Vandermonde matrix `V[i][k] = λ_i^k` over the distinct
/// pooled eigenvalues.
pub fn lss_dimension(graphs: &[Graph], order: usize, rank_tol: f64) -> Result<usize> {
    let nodes = distinct_eigenvalues(graphs, EIGEN_TOL)?;
    Ok(krylov_rank(&nodes, order, rank_tol))
}

/// Numerical rank of the `n x (order+1)` Vandermonde matrix on `nodes`.
///
/// Monomial columns lose linear independence in floating point long before
/// the true rank is reached, so the column space is built as the Krylov
/// sequence `1, Λ1, Λ²1, …` with each new vector orthogonalized (twice)
/// against the previous ones. This spans exactly the Vandermonde column
/// space. Growth stops when a new direction's norm falls below
/// `rank_tol * max(1, max|λ|)`.
pub fn krylov_rank(nodes: &[f64], order: usize, rank_tol: f64) -> usize {
    let n = nodes.len();
    if n == 0 {
        return 0;
    }
    let scale = nodes.iter().fold(1.0f64, |m, l| m.max(l.abs()));
    let mut basis: Vec<Vec<f64>> = vec![vec![1.0 / (n as f64).sqrt(); n]];
    for _ in 0..order {
        if basis.len() == n {
            break;
        }
        let last = basis.last().unwrap();
        let mut w: Vec<f64> = last.iter().zip(nodes).map(|(q, l)| q * l).collect();
        for _ in 0..2 {
            for q in &basis {
                let h = dot(q, &w);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= h * qi);
            }
        }
        let norm = dot(&w, &w).sqrt();
        if norm <= rank_tol * scale {
            break;
        }
        w.iter_mut().for_each(|v| *v /= norm);
        basis.push(w);
    }
    basis.len()
}

/// Composite filter of `L` stacked vanilla layers `θ_l (A + I)`:
/// `(Π θ_l) Σ_k C(L, k) x^k`.
pub fn vanilla_stack_polynomial(thetas: &[f64]) -> Result<PolyFilter> {
    if thetas.is_empty() {
        return Err(Error::Parameter("need at least one layer".into()));
    }
    let depth = thetas.len();
    let scale: f64 = thetas.iter().product();
    let mut binom = vec![1.0f64; depth + 1];
    for k in 1..depth {
        binom[k] = binom[k - 1] * (depth - k + 1) as f64 / k as f64;
    }
    PolyFilter::new(binom.into_iter().map(|b| scale * b.round()).collect::<Vec<_>>())
}

/// Composite filter of stacked GIN-form layers `θ₁ A + θ₀ I`, given as
/// `(θ₀, θ₁)` pairs.
pub fn gin_stack_polynomial(pairs: &[(f64, f64)]) -> Result<PolyFilter> {
    if pairs.is_empty() {
        return Err(Error::Parameter("need at least one layer".into()));
    }
    pairs.iter().try_fold(PolyFilter::identity(), |acc, &(t0, t1)| {
        Ok(acc.compose(&PolyFilter::new(vec![t0, t1])?))
    })
}

/// Block-diagonal stacking of the normalized adjacencies of `graphs`.
pub fn block_diag_t(graphs: &[Graph]) -> Result<Matrix> {
    if graphs.is_empty() {
        return Err(Error::Parameter("graph set is empty".into()));
    }
    let total: usize = graphs.iter().map(Graph::num_nodes).sum();
    if total > BLOCK_DIAG_CAP {
        return Err(Error::Parameter(format!(
            "{total} nodes exceed the block-diagonal cap of {BLOCK_DIAG_CAP}"
        )));
    }
    let mut t = Matrix::zeros(total, total);
    let mut offset = 0;
    for g in graphs {
        let a = g.norm_adjacency();
        let n = g.num_nodes();
        for i in 0..n {
            for j in 0..n {
                t[(offset + i, offset + j)] = a[(i, j)];
            }
        }
        offset += n;
    }
    Ok(t)
}

//! Polynomial graph filters `f(A) = Σ θ_k A^k`.
//!
//! Filter composition is polynomial multiplication, so stacking linear
//! convolution layers can be analysed entirely through coefficient vectors.

mod factor;
mod roots;
mod space;

pub use factor::{factor_quadratics, QuadraticCascade, FACTOR_DEGREE_CAP};
pub use roots::{durand_kerner, RootOptions, Roots};
pub use space::{
    block_diag_t, gin_stack_polynomial, krylov_rank, lss_dimension, vanilla_stack_polynomial,
    BLOCK_DIAG_CAP, RANK_TOL,
};

use crate::error::{Error, Result};
use crate::graph::{Graph, Signal};
use crate::matrix::Matrix;

/// Real polynomial in canonical form: constant term first, no trailing zeros
/// (the zero polynomial is stored as `[0.0]`).
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFilter {
    coeffs: Vec<f64>,
}

impl PolyFilter {
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Result<Self> {
        let coeffs = coeffs.into();
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("filter coefficients must be finite".into()));
        }
        Ok(Self::canonical(coeffs))
    }

    fn canonical(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn identity() -> Self {
        Self { coeffs: vec![1.0] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs == [0.0]
    }

    /// Horner evaluation at a scalar (the filter's frequency response).
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Applies the filter on a graph through repeated one-hop aggregation;
    /// powers of `A` are never formed.
    pub fn apply(&self, graph: &Graph, x: &Signal) -> Result<Signal> {
        if x.rows() != graph.num_nodes() {
            return Err(Error::shape(
                "apply_filter",
                format!("{} rows", graph.num_nodes()),
                format!("{} rows", x.rows()),
            ));
        }
        let mut y = x.scaled(self.coeffs[0]);
        let mut hop: Option<Signal> = None;
        for &theta in &self.coeffs[1..] {
            let next = graph.aggregate(hop.as_ref().unwrap_or(x))?;
            y.axpy(theta, &next);
            hop = Some(next);
        }
        Ok(y)
    }

    /// Dense evaluation `f(m) x` by Horner's scheme on matrix-vector products.
    pub fn apply_dense(&self, m: &Matrix, x: &Signal) -> Result<Signal> {
        let mut acc = x.scaled(self.leading());
        for &c in self.coeffs.iter().rev().skip(1) {
            acc = m.matmul(&acc)?;
            acc.axpy(c, x);
        }
        Ok(acc)
    }

    /// Coefficient convolution, i.e. the filter `p(A) q(A)`.
    pub fn compose(&self, other: &PolyFilter) -> PolyFilter {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::canonical(out)
    }

    pub fn scaled(&self, s: f64) -> PolyFilter {
        Self::canonical(self.coeffs.iter().map(|c| c * s).collect())
    }
}

pub fn apply_filter(f: &PolyFilter, graph: &Graph, x: &Signal) -> Result<Signal> {
    f.apply(graph, x)
}

pub fn compose(p: &PolyFilter, q: &PolyFilter) -> PolyFilter {
    p.compose(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::erdos_renyi;
    use crate::rng;
    use crate::spectral::graph_basis;
    use proptest::prelude::*;

    fn poly(c: &[f64]) -> PolyFilter {
        PolyFilter::new(c.to_vec()).unwrap()
    }

    fn random_signal(n: usize, seed: u64) -> Signal {
        let mut r = rng::seeded(seed);
        Matrix::from_fn(n, 2, |_, _| r.random_range(-1.0..1.0))
    }

    #[test]
    fn canonical_form_trims_zeros() {
        assert_eq!(poly(&[1.0, 2.0, 0.0, 0.0]).coeffs(), &[1.0, 2.0]);
        assert_eq!(poly(&[0.0, 0.0]).coeffs(), &[0.0]);
        assert!(poly(&[]).is_zero());
        assert!(PolyFilter::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn identity_filter_returns_input() {
        let g = erdos_renyi(10, 0.3, 1).unwrap();
        let x = random_signal(10, 2);
        assert_eq!(PolyFilter::identity().apply(&g, &x).unwrap(), x);
    }

    #[test]
    fn first_order_filter_on_k2() {
        let g = Graph::complete(2).unwrap();
        let y = poly(&[0.0, 1.0]).apply(&g, &Matrix::column(&[1.0, 0.0])).unwrap();
        assert_eq!(y.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn filter_vanishes_on_its_roots() {
        let g = Graph::path(3).unwrap();
        let b = graph_basis(&g).unwrap();
        let top = Matrix::column(&b.eigenvectors.col(2));
        let y = poly(&[1.0, 0.0, -1.0]).apply(&g, &top).unwrap();
        assert!(y.max_abs() < 1e-12);
    }

    #[test]
    fn compose_examples() {
        assert_eq!(poly(&[1.0, 1.0]).compose(&poly(&[-1.0, 1.0])).coeffs(), &[-1.0, 0.0, 1.0]);
        let p = poly(&[0.3, -2.0, 1.5]);
        assert_eq!(p.compose(&PolyFilter::identity()), p);
    }

    #[test]
    fn apply_rejects_wrong_shape() {
        let g = Graph::path(4).unwrap();
        assert!(poly(&[1.0, 1.0]).apply(&g, &Matrix::zeros(5, 1)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn sparse_apply_matches_dense(n in 1usize..=64, seed in any::<u64>(), c in prop::collection::vec(-2.0f64..2.0, 1..7)) {
            let g = erdos_renyi(n, 0.15, seed).unwrap();
            let x = random_signal(n, seed ^ 7);
            let f = poly(&c);
            let sparse = f.apply(&g, &x).unwrap();
            let dense = f.apply_dense(g.norm_adjacency(), &x).unwrap();
            prop_assert!(sparse.max_abs_diff(&dense) <= 1e-9);
        }

        #[test]
        fn composition_is_sequential_application(
            n in 2usize..30,
            seed in any::<u64>(),
            p in prop::collection::vec(-2.0f64..2.0, 1..5),
            q in prop::collection::vec(-2.0f64..2.0, 1..5),
        ) {
            let g = erdos_renyi(n, 0.2, seed).unwrap();
            let x = random_signal(n, seed ^ 3);
            let (p, q) = (poly(&p), poly(&q));
            let lhs = p.compose(&q).apply(&g, &x).unwrap();
            let rhs = p.apply(&g, &q.apply(&g, &x).unwrap()).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-8);
        }

        #[test]
        fn filters_commute_with_shift(n in 2usize..40, seed in any::<u64>(), c in prop::collection::vec(-2.0f64..2.0, 1..6)) {
            let g = erdos_renyi(n, 0.15, seed).unwrap();
            let x = random_signal(n, seed ^ 5);
            let f = poly(&c);
            let lhs = f.apply(&g, &g.aggregate(&x).unwrap()).unwrap();
            let rhs = g.aggregate(&f.apply(&g, &x).unwrap()).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-9);
        }
    }
}

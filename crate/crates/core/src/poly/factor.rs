//! Factorization of a real polynomial filter into a cascade of filters of
//! degree at most two.

use num_complex::Complex64;

use super::roots::{durand_kerner, RootOptions};
use super::PolyFilter;
use crate::error::{Error, Result};
use crate::graph::{Graph, Signal};

/// Largest degree accepted by [`factor_quadratics`].
pub const FACTOR_DEGREE_CAP: usize = 64;

/// Roots with `|im| < REAL_TOL * (1 + |z|)` are treated as real.
const REAL_TOL: f64 = 1e-8;

/// `leading_scale * Π factors`, every factor monic of degree one or two and
/// at most one of degree one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCascade {
    pub factors: Vec<PolyFilter>,
    pub leading_scale: f64,
    /// Relative coefficient error of the re-expanded product.
    pub residual: f64,
}

impl QuadraticCascade {
    pub fn expand(&self) -> PolyFilter {
        self.factors
            .iter()
            .fold(PolyFilter::identity(), |acc, f| acc.compose(f))
            .scaled(self.leading_scale)
    }

    /// Runs the factors one after another, then scales.
    pub fn apply(&self, graph: &Graph, x: &Signal) -> Result<Signal> {
        let mut y = x.clone();
        for f in &self.factors {
            y = f.apply(graph, &y)?;
        }
        y.scale_assign(self.leading_scale);
        Ok(y)
    }

    pub fn linear_factors(&self) -> usize {
        self.factors.iter().filter(|f| f.degree() == 1).count()
    }
}

/// Splits `p` into monic real factors of degree ≤ 2.
///
/// Complex roots are paired with their conjugates; real roots are sorted
/// ascending and merged pairwise, so at most one linear factor remains. The
/// product is re-expanded and must match `p` within relative coefficient
/// error `tol`.
pub fn factor_quadratics(p: &PolyFilter, tol: f64) -> Result<QuadraticCascade> {
    if p.is_zero() {
        return Err(Error::Parameter("cannot factor the zero polynomial".into()));
    }
    let degree = p.degree();
    if degree == 0 {
        return Err(Error::Parameter("factorization needs degree >= 1".into()));
    }
    if degree > FACTOR_DEGREE_CAP {
        return Err(Error::Parameter(format!(
            "degree {degree} exceeds the factorization cap {FACTOR_DEGREE_CAP}"
        )));
    }

    let roots = durand_kerner(p.coeffs(), RootOptions::default())?.roots;
    let mut real = Vec::new();
    let mut upper = Vec::new();
    let mut lower = 0usize;
    for z in roots {
        if z.im.abs() < REAL_TOL * (1.0 + z.norm()) {
            real.push(z.re);
        } else if z.im > 0.0 {
            upper.push(z);
        } else {
            lower += 1;
        }
    }
    if upper.len() != lower {
        return Err(Error::Numeric(format!(
            "unpaired complex roots: {} above and {lower} below the real axis",
            upper.len()
        )));
    }
    upper.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    real.sort_by(f64::total_cmp);

    let mut factors: Vec<PolyFilter> = upper.iter().map(conjugate_quadratic).collect();
    let mut pairs = real.chunks_exact(2);
    for pair in pairs.by_ref() {
        let (a, b) = (pair[0], pair[1]);
        factors.push(PolyFilter::canonical(vec![a * b, -(a + b), 1.0]));
    }
    if let [a] = pairs.remainder() {
        factors.push(PolyFilter::canonical(vec![-a, 1.0]));
    }

    let mut cascade = QuadraticCascade {
        factors,
        leading_scale: p.leading(),
        residual: 0.0,
    };
    cascade.residual = relative_coeff_error(&cascade.expand(), p);
    if cascade.residual.is_nan() || cascade.residual > tol {
        return Err(Error::Numeric(format!(
            "re-expansion error {:e} exceeds tolerance {tol:e}",
            cascade.residual
        )));
    }
    Ok(cascade)
}

fn conjugate_quadratic(z: &Complex64) -> PolyFilter {
    PolyFilter::canonical(vec![z.norm_sqr(), -2.0 * z.re, 1.0])
}

/// `max_k |a_k - b_k| / max_k |b_k|`
pub(crate) fn relative_coeff_error(a: &PolyFilter, b: &PolyFilter) -> f64 {
    let n = a.coeffs().len().max(b.coeffs().len());
    let get = |f: &PolyFilter, k: usize| f.coeffs().get(k).copied().unwrap_or(0.0);
    let diff = (0..n).fold(0.0f64, |m, k| m.max((get(a, k) - get(b, k)).abs()));
    let scale = b.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
    diff / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::erdos_renyi;
    use crate::matrix::Matrix;
    use crate::rng;
    use proptest::prelude::*;
    use rand_distr::StandardNormal;

    fn poly(c: &[f64]) -> PolyFilter {
        PolyFilter::new(c.to_vec()).unwrap()
    }

    #[test]
    fn irreducible_quadratic_is_kept() {
        let c = factor_quadratics(&poly(&[1.0, 0.0, 1.0]), 1e-12).unwrap();
        assert_eq!(c.factors.len(), 1);
        assert!(c.factors[0].coeffs().iter().zip([1.0, 0.0, 1.0]).all(|(a, b)| (a - b).abs() < 1e-12));
        assert_eq!(c.leading_scale, 1.0);
        assert!(c.residual < 1e-12);
    }

    #[test]
    fn cubic_minus_one_splits_into_linear_and_quadratic() {
        let c = factor_quadratics(&poly(&[-1.0, 0.0, 0.0, 1.0]), 1e-10).unwrap();
        assert_eq!(c.factors.len(), 2);
        let quad = c.factors.iter().find(|f| f.degree() == 2).unwrap();
        let lin = c.factors.iter().find(|f| f.degree() == 1).unwrap();
        for (a, b) in quad.coeffs().iter().zip([1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-10);
        }
        for (a, b) in lin.coeffs().iter().zip([-1.0, 1.0]) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn real_roots_pair_in_ascending_order() {
        // (x+3)(x+1)(x-2)(x-5)
        let p = poly(&[1.0, 1.0])
            .compose(&poly(&[3.0, 1.0]))
            .compose(&poly(&[-2.0, 1.0]))
            .compose(&poly(&[-5.0, 1.0]))
            .scaled(2.0);
        let c = factor_quadratics(&p, 1e-10).unwrap();
        assert_eq!(c.leading_scale, 2.0);
        assert_eq!(c.factors.len(), 2);
        // (x+3)(x+1) and (x-2)(x-5)
        let want = [[3.0, 4.0, 1.0], [10.0, -7.0, 1.0]];
        for (f, w) in c.factors.iter().zip(want) {
            for (a, b) in f.coeffs().iter().zip(w) {
                assert!((a - b).abs() < 1e-9, "{:?}", c.factors);
            }
        }
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(matches!(factor_quadratics(&poly(&[0.0]), 1e-6), Err(Error::Parameter(_))));
        assert!(matches!(factor_quadratics(&poly(&[3.0]), 1e-6), Err(Error::Parameter(_))));
        let big = PolyFilter::new(vec![1.0; 66]).unwrap();
        assert!(matches!(factor_quadratics(&big, 1e-6), Err(Error::Parameter(_))));
    }

    #[test]
    fn random_degree_nine() {
        let mut r = rng::seeded(2024);
        let c: Vec<f64> = (0..10).map(|_| r.sample(StandardNormal)).collect();
        let cascade = factor_quadratics(&poly(&c), 1e-6).unwrap();
        assert_eq!(cascade.factors.len(), 5);
        assert!(cascade.linear_factors() <= 1);
        assert!(cascade.residual <= 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn round_trip_and_cascade(seed in any::<u64>(), degree in 1usize..=15) {
            let mut r = rng::seeded(seed);
            let mut c: Vec<f64> = (0..=degree).map(|_| r.sample(StandardNormal)).collect();
            if c[degree] == 0.0 { c[degree] = 1.0; }
            let p = poly(&c);
            let cascade = factor_quadratics(&p, 1e-6).unwrap();
            prop_assert_eq!(cascade.factors.len(), degree.div_ceil(2));
            prop_assert!(cascade.linear_factors() <= 1);
            prop_assert!(cascade.factors.iter().all(|f| f.degree() <= 2));

            let g = erdos_renyi(r.random_range(2..=40), 0.15, seed ^ 9).unwrap();
            let x = Matrix::from_fn(g.num_nodes(), 1, |_, _| r.random_range(-1.0..1.0));
            let direct = p.apply(&g, &x).unwrap();
            let cascaded = cascade.apply(&g, &x).unwrap();
            prop_assert!(cascaded.max_abs_diff(&direct) <= 1e-6 * direct.max_abs().max(1.0));
        }
    }
}

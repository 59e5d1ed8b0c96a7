//! Durand–Kerner (Weierstrass) simultaneous root iteration.

use num_complex::Complex64;

use crate::error::{Error, Result};

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Stop once every root moves less than `tol * max(1, |z|)` in a sweep.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Roots {
    pub roots: Vec<Complex64>,
    pub iterations: usize,
    /// `max |p(z)|` over the returned roots for the monic polynomial.
    pub residual: f64,
}

/// All complex roots of `Σ c_k x^k` (constant term first).
///
/// Exact zero roots are split off first. The rest are iterated from a circle
/// of radius `1 + max |c_k / c_n|` with golden-angle spacing, after
/// normalizing to a monic polynomial. A sweep also counts as converged when
/// every residual is already at rounding level, which is where iteration on
/// a multiple root stalls.
pub fn durand_kerner(coeffs: &[f64], opts: RootOptions) -> Result<Roots> {
    let mut coeffs = coeffs.to_vec();
    while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
        coeffs.pop();
    }
    if coeffs.iter().all(|&c| c == 0.0) {
        return Err(Error::Parameter("zero polynomial has no finite root set".into()));
    }
    let zeros = coeffs.iter().take_while(|&&c| c == 0.0).count();
    let reduced = &coeffs[zeros..];
    let degree = reduced.len() - 1;

    let lead = reduced[degree];
    let monic: Vec<f64> = reduced.iter().map(|c| c / lead).collect();
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    if degree == 0 {
        return Ok(Roots {
            roots,
            iterations: 0,
            residual: 0.0,
        });
    }

    let radius = 1.0 + monic[..degree].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut z: Vec<Complex64> = (0..degree)
        .map(|k| Complex64::from_polar(radius, 0.5 + k as f64 * GOLDEN_ANGLE))
        .collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut max_step = 0.0f64;
        for i in 0..degree {
            let zi = z[i];
            let mut denom = Complex64::new(1.0, 0.0);
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    denom *= zi - zj;
                }
            }
            if denom.norm() == 0.0 {
                // Coincident iterates; nudge apart.
                z[i] += Complex64::new(1e-8, 1e-8) * radius;
                max_step = f64::INFINITY;
                continue;
            }
            let step = eval(&monic, zi) / denom;
            z[i] = zi - step;
            max_step = max_step.max(step.norm() / zi.norm().max(1.0));
        }
        if !max_step.is_finite() && z.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Numeric("root iteration diverged".into()));
        }
        if max_step < opts.tol || z.iter().all(|&zi| at_rounding_level(&monic, zi)) {
            converged = true;
            break;
        }
    }

    let residual = z.iter().map(|&zi| eval(&monic, zi).norm()).fold(0.0, f64::max);
    if !converged {
        return Err(Error::Numeric(format!(
            "Durand-Kerner did not converge in {} iterations (residual {residual:e})",
            opts.max_iter
        )));
    }
    roots.extend(z);
    Ok(Roots {
        roots,
        iterations,
        residual,
    })
}

fn eval(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// `|p(z)|` no larger than the rounding error bound of Horner's scheme.
fn at_rounding_level(coeffs: &[f64], z: Complex64) -> bool {
    let r = z.norm();
    let bound = coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c.abs());
    eval(coeffs, z).norm() <= 8.0 * coeffs.len() as f64 * f64::EPSILON * bound
}

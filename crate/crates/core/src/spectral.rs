//! Symmetric eigendecomposition, graph Fourier transform and spectrum
//! capacity.

use crate::error::{Error, Result};
use crate::graph::{Graph, Signal};
use crate::matrix::Matrix;

/// Off-diagonal threshold used when decomposing normalized adjacencies.
pub const JACOBI_TOL: f64 = 1e-13;

/// Absolute tolerance below which two eigenvalues count as one.
pub const EIGEN_TOL: f64 = 1e-7;

const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored as the columns of `eigenvectors`.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl SpectralBasis {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `Uᵀ x`
    pub fn gft(&self, x: &Signal) -> Result<Signal> {
        self.check_rows(x, "gft")?;
        self.eigenvectors.t_matmul(x)
    }

    /// `U s`
    pub fn igft(&self, s: &Signal) -> Result<Signal> {
        self.check_rows(s, "igft")?;
        self.eigenvectors.matmul(s)
    }

    /// Basis of `L = I - A` for the same eigenvectors: eigenvalues `1 - λ`,
    /// re-sorted ascending (which reverses the column order).
    pub fn to_laplacian(&self) -> SpectralBasis {
        let n = self.dim();
        let eigenvalues = self.eigenvalues.iter().rev().map(|l| 1.0 - l).collect();
        let eigenvectors = Matrix::from_fn(n, n, |i, j| self.eigenvectors[(i, n - 1 - j)]);
        SpectralBasis {
            eigenvalues,
            eigenvectors,
        }
    }

    /// `U diag(values) Uᵀ`
    pub fn synthesize(&self, values: &[f64]) -> Result<Matrix> {
        if values.len() != self.dim() {
            return Err(Error::shape("synthesize", self.dim(), values.len()));
        }
        let u = &self.eigenvectors;
        let scaled = Matrix::from_fn(u.rows(), u.cols(), |i, j| u[(i, j)] * values[j]);
        scaled.matmul_t(u)
    }

    /// `max |UᵀU - I|`
    pub fn orthonormality_residual(&self) -> f64 {
        let gram = self
            .eigenvectors
            .t_matmul(&self.eigenvectors)
            .expect("square basis");
        gram.max_abs_diff(&Matrix::identity(self.dim()))
    }

    /// `max |U diag(λ) Uᵀ - a|`
    pub fn reconstruction_residual(&self, a: &Matrix) -> f64 {
        self.synthesize(&self.eigenvalues)
            .expect("matching dimension")
            .max_abs_diff(a)
    }

    fn check_rows(&self, x: &Signal, op: &'static str) -> Result<()> {
        if x.rows() != self.dim() {
            return Err(Error::shape(op, format!("{} rows", self.dim()), format!("{} rows", x.rows())));
        }
        Ok(())
    }
}

/// Cyclic-by-row Jacobi eigensolver for real symmetric matrices.
///
/// Rotations are skipped for entries already below `tol`; iteration stops once
/// every off-diagonal magnitude is below `tol`. At most `100 N²` rotations are
/// applied before giving up.
pub fn eigendecompose(matrix: &Matrix, tol: f64) -> Result<SpectralBasis> {
    let n = matrix.rows();
    if n == 0 || !matrix.is_square() {
        return Err(Error::Contract(format!(
            "eigendecompose needs a non-empty square matrix, got {}x{}",
            matrix.rows(),
            matrix.cols()
        )));
    }
    if !matrix.is_finite() {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    for i in 0..n {
        for j in i + 1..n {
            if (matrix[(i, j)] - matrix[(j, i)]).abs() > SYMMETRY_TOL {
                return Err(Error::Contract(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }

    let mut a = matrix.clone();
    let mut v = Matrix::identity(n);
    let cap = 100 * n * n;
    let mut rotations = 0usize;

    loop {
        let off = off_diagonal_max(&a);
        if off < tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() < tol {
                    continue;
                }
                if rotations >= cap {
                    return Err(Error::Numeric(format!(
                        "Jacobi did not converge after {rotations} rotations (off-diagonal {off:e})"
                    )));
                }
                rotate(&mut a, &mut v, p, q);
                rotations += 1;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let eigenvectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SpectralBasis {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_max(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut m = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            m = m.max(a[(i, j)].abs());
        }
    }
    m
}

/// Annihilates `a[p][q]` with a rotation in the (p, q) plane.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let n = a.rows();
    let apq = a[(p, q)];
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);

    a[(p, p)] -= t * apq;
    a[(q, q)] += t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let g = a[(r, p)];
        let h = a[(r, q)];
        let rp = g - s * (h + g * tau);
        let rq = h + s * (g - h * tau);
        a[(r, p)] = rp;
        a[(p, r)] = rp;
        a[(r, q)] = rq;
        a[(q, r)] = rq;
    }
    for r in 0..n {
        let g = v[(r, p)];
        let h = v[(r, q)];
        v[(r, p)] = g - s * (h + g * tau);
        v[(r, q)] = h + s * (g - h * tau);
    }
}

/// Eigendecomposition of a graph's normalized adjacency.
pub fn graph_basis(graph: &Graph) -> Result<SpectralBasis> {
    eigendecompose(graph.norm_adjacency(), JACOBI_TOL)
}

pub fn gft(basis: &SpectralBasis, x: &Signal) -> Result<Signal> {
    basis.gft(x)
}

pub fn igft(basis: &SpectralBasis, s: &Signal) -> Result<Signal> {
    basis.igft(s)
}

/// Spectrum table `eigen_index,eigenvalue,channel_0,...` of `S = Uᵀ x`, one
/// row per eigenvalue, floats to 17 significant digits.
pub fn spectrum_csv(basis: &SpectralBasis, x: &Signal) -> Result<String> {
    let s = basis.gft(x)?;
    let mut out = String::from("eigen_index,eigenvalue");
    for c in 0..s.cols() {
        out.push_str(&format!(",channel_{c}"));
    }
    out.push('\n');
    for (i, lambda) in basis.eigenvalues.iter().enumerate() {
        out.push_str(&format!("{i},{lambda:.16e}"));
        for v in s.row(i) {
            out.push_str(&format!(",{v:.16e}"));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Groups sorted values greedily: a cluster spans at most `tol` from its
/// first (smallest) member. Returns the mean of each cluster.
///
/// The greedy cover is minimal, so the count never decreases when values are
/// added.
pub fn cluster_values(mut values: Vec<f64>, tol: f64) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let mut reps = Vec::new();
    let mut i = 0;
    while i < values.len() {
        let anchor = values[i];
        let mut j = i;
        let mut sum = 0.0;
        while j < values.len() && values[j] - anchor <= tol {
            sum += values[j];
            j += 1;
        }
        reps.push(sum / (j - i) as f64);
        i = j;
    }
    reps
}

/// Distinct eigenvalues pooled over all normalized adjacencies of `graphs`.
pub fn distinct_eigenvalues(graphs: &[Graph], eigen_tol: f64) -> Result<Vec<f64>> {
    if graphs.is_empty() {
        return Err(Error::Parameter("graph set is empty".into()));
    }
    let mut pooled = Vec::new();
    for g in graphs {
        pooled.extend(graph_basis(g)?.eigenvalues);
    }
    Ok(cluster_values(pooled, eigen_tol))
}

/// Number of distinct eigenvalues across the graph set.
pub fn spectrum_capacity(graphs: &[Graph], eigen_tol: f64) -> Result<usize> {
    Ok(distinct_eigenvalues(graphs, eigen_tol)?.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::erdos_renyi;
    use crate::rng;
    use proptest::prelude::*;

    #[test]
    fn spectrum_table_layout() {
        let g = Graph::path(3).unwrap();
        let basis = graph_basis(&g).unwrap();
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![2.0, 0.5]]).unwrap();
        let csv = spectrum_csv(&basis, &x).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "eigen_index,eigenvalue,channel_0,channel_1");
        assert_eq!(lines.len(), 4);
        assert!(!csv.contains('\r'));
        let s = basis.gft(&x).unwrap();
        for (i, line) in lines[1..].iter().enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 4);
            assert_eq!(fields[0].parse::<usize>().unwrap(), i);
            assert_eq!(fields[1].parse::<f64>().unwrap(), basis.eigenvalues[i]);
            assert_eq!(fields[3].parse::<f64>().unwrap(), s[(i, 1)]);
        }
    }

    fn assert_eigs(actual: &[f64], expected: &[f64], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.iter().zip(expected) {
            assert!((a - e).abs() < tol, "{actual:?} vs {expected:?}");
        }
    }

    #[test]
    fn identity_decomposes_trivially() {
        let b = eigendecompose(&Matrix::identity(3), 1e-12).unwrap();
        assert_eigs(&b.eigenvalues, &[1.0, 1.0, 1.0], 1e-15);
        assert!(b.orthonormality_residual() < 1e-10);
    }

    #[test]
    fn small_graph_spectra() {
        let k2 = graph_basis(&Graph::complete(2).unwrap()).unwrap();
        assert_eigs(&k2.eigenvalues, &[-1.0, 1.0], 1e-12);
        let p3 = graph_basis(&Graph::path(3).unwrap()).unwrap();
        assert_eigs(&p3.eigenvalues, &[-1.0, 0.0, 1.0], 1e-12);
        let k3 = graph_basis(&Graph::complete(3).unwrap()).unwrap();
        assert_eigs(&k3.eigenvalues, &[-0.5, -0.5, 1.0], 1e-12);
    }

    #[test]
    fn rejects_non_symmetric_input() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.5, 0.0]]).unwrap();
        assert!(matches!(eigendecompose(&m, 1e-12), Err(Error::Contract(_))));
        assert!(matches!(eigendecompose(&Matrix::zeros(2, 3), 1e-12), Err(Error::Contract(_))));
    }

    #[test]
    fn gft_of_basis_is_identity() {
        let g = erdos_renyi(12, 0.3, 5).unwrap();
        let b = graph_basis(&g).unwrap();
        let s = b.gft(&b.eigenvectors).unwrap();
        assert!(s.max_abs_diff(&Matrix::identity(12)) < 1e-10);
    }

    #[test]
    fn all_ones_on_regular_graph_is_top_mode() {
        let b = graph_basis(&Graph::complete(3).unwrap()).unwrap();
        let s = b.gft(&Matrix::filled(3, 1, 1.0)).unwrap();
        assert!((s[(2, 0)].abs() - 3f64.sqrt()).abs() < 1e-12);
        assert!(s[(0, 0)].abs() < 1e-12 && s[(1, 0)].abs() < 1e-12);
    }

    #[test]
    fn igft_inverts_gft() {
        let g = erdos_renyi(20, 0.2, 11).unwrap();
        let b = graph_basis(&g).unwrap();
        let mut r = rng::seeded(3);
        let x = Matrix::from_fn(20, 3, |_, _| r.random_range(-2.0..2.0));
        let back = b.igft(&b.gft(&x).unwrap()).unwrap();
        assert!(back.max_abs_diff(&x) < 1e-10);
        assert_eq!(b.igft(&Matrix::zeros(20, 1)).unwrap(), Matrix::zeros(20, 1));
        assert!(matches!(b.gft(&Matrix::zeros(19, 1)), Err(Error::Shape { .. })));
    }

    #[test]
    fn p3_null_mode_is_annihilated() {
        let g = Graph::path(3).unwrap();
        let b = graph_basis(&g).unwrap();
        let mut s = Matrix::zeros(3, 1);
        s[(1, 0)] = 1.0;
        let x = b.igft(&s).unwrap();
        assert!((x.frobenius_norm() - 1.0).abs() < 1e-12);
        assert!(g.aggregate(&x).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn laplacian_basis_flips_order() {
        let g = erdos_renyi(15, 0.25, 8).unwrap();
        let b = graph_basis(&g).unwrap();
        let l = b.to_laplacian();
        assert!(l.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let lap = Matrix::identity(15).zip_map(g.norm_adjacency(), |i, a| i - a);
        assert!(l.reconstruction_residual(&lap) < 1e-8);
    }

    #[test]
    fn capacity_small_sets() {
        let k3 = Graph::complete(3).unwrap();
        let p3 = Graph::path(3).unwrap();
        assert_eq!(spectrum_capacity(std::slice::from_ref(&k3), EIGEN_TOL).unwrap(), 2);
        assert_eq!(spectrum_capacity(std::slice::from_ref(&p3), EIGEN_TOL).unwrap(), 3);
        assert_eq!(spectrum_capacity(&[k3.clone(), k3.clone()], EIGEN_TOL).unwrap(), 2);
        assert_eq!(spectrum_capacity(&[k3, p3], EIGEN_TOL).unwrap(), 4);
        assert!(matches!(spectrum_capacity(&[], EIGEN_TOL), Err(Error::Parameter(_))));
    }

    #[test]
    fn clustering_is_monotone_under_insertion() {
        let base = vec![0.0, 1.5e-7, 3.1e-7, 1.0];
        let n = cluster_values(base.clone(), 1e-7).len();
        for extra in [-0.6e-7, 0.8e-7, 2.2e-7, 0.5] {
            let mut more = base.clone();
            more.push(extra);
            assert!(cluster_values(more, 1e-7).len() >= n);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn basis_invariants_on_random_graphs(n in 1usize..=60, p in 0.02f64..0.5, seed in any::<u64>()) {
            let g = erdos_renyi(n, p, seed).unwrap();
            let b = graph_basis(&g).unwrap();
            prop_assert!(b.orthonormality_residual() <= 1e-10);
            prop_assert!(b.reconstruction_residual(g.norm_adjacency()) <= 1e-8);
            prop_assert!(b.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(b.eigenvalues.iter().all(|&l| (-1.0 - 1e-8..=1.0 + 1e-8).contains(&l)));
            prop_assert!(spectrum_capacity(std::slice::from_ref(&g), EIGEN_TOL).unwrap() <= n);
        }

        #[test]
        fn capacity_monotone_under_union(seed in any::<u64>()) {
            let a = erdos_renyi(15, 0.2, seed).unwrap();
            let b = erdos_renyi(12, 0.3, seed ^ 0xabc).unwrap();
            let ga = spectrum_capacity(std::slice::from_ref(&a), EIGEN_TOL).unwrap();
            let gab = spectrum_capacity(&[a, b], EIGEN_TOL).unwrap();
            prop_assert!(gab >= ga);
        }
    }
}

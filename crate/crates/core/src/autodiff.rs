//! Tape-based reverse-mode differentiation over matrix-valued expressions.
//!
//! A [`Tape`] records every operation together with its forward value;
//! [`Tape::backward`] walks the tape once in reverse and accumulates the
//! adjoint of every node that depends on a parameter. Tapes are single use:
//! build, differentiate, drop.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var {
    id: usize,
    rows: usize,
    cols: usize,
}

impl Var {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

#[derive(Debug, Clone, Copy)]
enum Op<'g> {
    Leaf,
    MatMul(usize, usize),
    Add(usize, usize),
    Scale(usize, f64),
    Hadamard(usize, usize),
    Relu(usize),
    Sigmoid(usize),
    Tanh(usize),
    OneMinus(usize),
    Aggregate(usize, &'g Graph),
    SumRows(usize),
    Mae(usize, usize),
    Mse(usize, usize),
}

#[derive(Debug)]
struct Node<'g> {
    op: Op<'g>,
    value: Matrix,
    needs_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape<'g> {
    nodes: Vec<Node<'g>>,
    params: Vec<usize>,
}

/// Adjoints produced by [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
    params: Vec<usize>,
}

impl Gradients {
    /// Gradient of the loss with respect to `v`; `None` if `v` does not
    /// influence the loss or is a constant.
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.grads[v.id].as_ref()
    }

    /// Gradients for every parameter in registration order, zero-filled
    /// where the loss does not depend on the parameter.
    pub fn into_param_grads(mut self, tape: &Tape<'_>) -> Vec<Matrix> {
        self.params
            .iter()
            .map(|&id| {
                self.grads[id]
                    .take()
                    .unwrap_or_else(|| {
                        let (r, c) = tape.nodes[id].value.shape();
                        Matrix::zeros(r, c)
                    })
            })
            .collect()
    }
}

impl<'g> Tape<'g> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op<'g>, value: Matrix, needs_grad: bool) -> Var {
        let (rows, cols) = value.shape();
        let id = self.nodes.len();
        self.nodes.push(Node { op, value, needs_grad });
        Var { id, rows, cols }
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.id].needs_grad
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Matrix) -> Var {
        let v = self.push(Op::Leaf, value, true);
        self.params.push(v.id);
        v
    }

    /// Leaf that receives no gradient.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(Op::Leaf, value, false)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.id].value
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        let g = self.needs(a) || self.needs(b);
        Ok(self.push(Op::MatMul(a.id, b.id), value, g))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let mut value = self.value(a).clone();
        value.add_assign(self.value(b));
        let g = self.needs(a) || self.needs(b);
        Ok(self.push(Op::Add(a.id, b.id), value, g))
    }

    pub fn scale(&mut self, a: Var, r: f64) -> Var {
        let value = self.value(a).scaled(r);
        let g = self.needs(a);
        self.push(Op::Scale(a.id, r), value, g)
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "hadamard")?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y);
        let g = self.needs(a) || self.needs(b);
        Ok(self.push(Op::Hadamard(a.id, b.id), value, g))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x.max(0.0));
        let g = self.needs(a);
        self.push(Op::Relu(a.id), value, g)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid);
        let g = self.needs(a);
        self.push(Op::Sigmoid(a.id), value, g)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::tanh);
        let g = self.needs(a);
        self.push(Op::Tanh(a.id), value, g)
    }

    /// `1 - a`
    pub fn one_minus(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| 1.0 - x);
        let g = self.needs(a);
        self.push(Op::OneMinus(a.id), value, g)
    }

    /// `A a` with the graph's normalized adjacency.
    pub fn aggregate(&mut self, graph: &'g Graph, a: Var) -> Result<Var> {
        let value = graph.aggregate(self.value(a))?;
        let g = self.needs(a);
        Ok(self.push(Op::Aggregate(a.id, graph), value, g))
    }

    /// Column sums as a `1 x C` row.
    pub fn sum_rows(&mut self, a: Var) -> Var {
        let m = self.value(a);
        let mut value = Matrix::zeros(1, m.cols());
        for i in 0..m.rows() {
            for (o, v) in value.row_mut(0).iter_mut().zip(m.row(i)) {
                *o += v;
            }
        }
        let g = self.needs(a);
        self.push(Op::SumRows(a.id), value, g)
    }

    /// Mean absolute error, `1 x 1`.
    pub fn mae_loss(&mut self, pred: Var, target: Var) -> Result<Var> {
        self.same_shape(pred, target, "mae_loss")?;
        let (p, t) = (self.value(pred), self.value(target));
        let total: f64 = p.as_slice().iter().zip(t.as_slice()).map(|(a, b)| (a - b).abs()).sum();
        let value = Matrix::filled(1, 1, total / p.as_slice().len() as f64);
        let g = self.needs(pred) || self.needs(target);
        Ok(self.push(Op::Mae(pred.id, target.id), value, g))
    }

    /// Mean squared error, `1 x 1`.
    pub fn mse_loss(&mut self, pred: Var, target: Var) -> Result<Var> {
        self.same_shape(pred, target, "mse_loss")?;
        let (p, t) = (self.value(pred), self.value(target));
        let total: f64 = p.as_slice().iter().zip(t.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
        let value = Matrix::filled(1, 1, total / p.as_slice().len() as f64);
        let g = self.needs(pred) || self.needs(target);
        Ok(self.push(Op::Mse(pred.id, target.id), value, g))
    }

    fn same_shape(&self, a: Var, b: Var, op: &'static str) -> Result<()> {
        if a.shape() != b.shape() {
            return Err(Error::shape(
                op,
                format!("{}x{}", a.rows, a.cols),
                format!("{}x{}", b.rows, b.cols),
            ));
        }
        Ok(())
    }

    /// Reverse sweep from a `1 x 1` loss.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if loss.shape() != (1, 1) {
            return Err(Error::Contract(format!(
                "backward needs a 1x1 loss, got {}x{}",
                loss.rows, loss.cols
            )));
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        grads[loss.id] = Some(Matrix::filled(1, 1, 1.0));

        for id in (0..=loss.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            if !node.needs_grad {
                continue;
            }
            match node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    if self.nodes[a].needs_grad {
                        let ga = g.matmul_t(&self.nodes[b].value)?;
                        accumulate(&mut grads, a, ga);
                    }
                    if self.nodes[b].needs_grad {
                        let gb = self.nodes[a].value.t_matmul(&g)?;
                        accumulate(&mut grads, b, gb);
                    }
                }
                Op::Add(a, b) => {
                    if self.nodes[b].needs_grad {
                        accumulate(&mut grads, b, g.clone());
                    }
                    if self.nodes[a].needs_grad {
                        accumulate(&mut grads, a, g.clone());
                    }
                }
                Op::Scale(a, r) => accumulate(&mut grads, a, g.scaled(r)),
                Op::Hadamard(a, b) => {
                    if self.nodes[a].needs_grad {
                        accumulate(&mut grads, a, g.zip_map(&self.nodes[b].value, |x, y| x * y));
                    }
                    if self.nodes[b].needs_grad {
                        accumulate(&mut grads, b, g.zip_map(&self.nodes[a].value, |x, y| x * y));
                    }
                }
                Op::Relu(a) => {
                    let ga = g.zip_map(&self.nodes[a].value, |x, v| if v > 0.0 { x } else { 0.0 });
                    accumulate(&mut grads, a, ga);
                }
                Op::Sigmoid(a) => {
                    let ga = g.zip_map(&node.value, |x, s| x * s * (1.0 - s));
                    accumulate(&mut grads, a, ga);
                }
                Op::Tanh(a) => {
                    let ga = g.zip_map(&node.value, |x, t| x * (1.0 - t * t));
                    accumulate(&mut grads, a, ga);
                }
                Op::OneMinus(a) => accumulate(&mut grads, a, g.scaled(-1.0)),
                // A is symmetric, so the adjoint of aggregation is aggregation.
                Op::Aggregate(a, graph) => accumulate(&mut grads, a, graph.aggregate(&g)?),
                Op::SumRows(a) => {
                    let rows = self.nodes[a].value.rows();
                    let ga = Matrix::from_fn(rows, g.cols(), |_, j| g[(0, j)]);
                    accumulate(&mut grads, a, ga);
                }
                Op::Mae(p, t) => {
                    let (pv, tv) = (&self.nodes[p].value, &self.nodes[t].value);
                    let scale = g[(0, 0)] / pv.as_slice().len() as f64;
                    let gp = pv.zip_map(tv, |a, b| scale * sign(a - b));
                    if self.nodes[t].needs_grad {
                        accumulate(&mut grads, t, gp.scaled(-1.0));
                    }
                    if self.nodes[p].needs_grad {
                        accumulate(&mut grads, p, gp);
                    }
                }
                Op::Mse(p, t) => {
                    let (pv, tv) = (&self.nodes[p].value, &self.nodes[t].value);
                    let scale = 2.0 * g[(0, 0)] / pv.as_slice().len() as f64;
                    let gp = pv.zip_map(tv, |a, b| scale * (a - b));
                    if self.nodes[t].needs_grad {
                        accumulate(&mut grads, t, gp.scaled(-1.0));
                    }
                    if self.nodes[p].needs_grad {
                        accumulate(&mut grads, p, gp);
                    }
                }
            }
            if matches!(node.op, Op::Leaf) {
                grads[id] = Some(g);
            }
        }
        Ok(Gradients {
            grads,
            params: self.params.clone(),
        })
    }
}

fn accumulate(grads: &mut [Option<Matrix>], id: usize, g: Matrix) {
    match &mut grads[id] {
        Some(acc) => acc.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::erdos_renyi;
    use crate::rng;
    use rand::Rng as _;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut r = rng::seeded(seed);
        Matrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
    }

    #[test]
    fn relu_derivative() {
        for (x, expected) in [(3.0, 1.0), (-2.0, 0.0), (0.0, 0.0)] {
            let mut t = Tape::new();
            let p = t.param(Matrix::filled(1, 1, x));
            let y = t.relu(p);
            let g = t.backward(y).unwrap();
            assert_eq!(g.get(p).unwrap()[(0, 0)], expected);
        }
    }

    #[test]
    fn parameter_as_loss_has_unit_gradient() {
        let mut t = Tape::new();
        let p = t.param(Matrix::filled(1, 1, 4.2));
        let g = t.backward(p).unwrap();
        assert_eq!(g.get(p).unwrap()[(0, 0)], 1.0);
    }

    #[test]
    fn disjoint_paths_are_independent() {
        let mut t = Tape::new();
        let a = t.param(Matrix::filled(1, 1, 2.0));
        let b = t.param(Matrix::filled(1, 1, 5.0));
        let a3 = t.scale(a, 3.0);
        let bb = t.hadamard(b, b).unwrap();
        let loss = t.add(a3, bb).unwrap();
        let g = t.backward(loss).unwrap();
        assert_eq!(g.get(a).unwrap()[(0, 0)], 3.0);
        assert_eq!(g.get(b).unwrap()[(0, 0)], 10.0);
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut t = Tape::new();
        let p = t.param(Matrix::zeros(2, 1));
        assert!(matches!(t.backward(p), Err(Error::Contract(_))));
    }

    #[test]
    fn shape_errors_at_construction() {
        let mut t = Tape::new();
        let a = t.param(Matrix::zeros(2, 3));
        let b = t.param(Matrix::zeros(2, 2));
        assert!(t.matmul(a, b).is_err());
        assert!(t.add(a, b).is_err());
        assert!(t.hadamard(a, b).is_err());
        assert!(t.mae_loss(a, b).is_err());
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut t = Tape::new();
        let c = t.constant(Matrix::filled(2, 2, 1.0));
        let w = t.param(Matrix::identity(2));
        let y = t.matmul(c, w).unwrap();
        let s = t.sum_rows(y);
        let target = t.constant(Matrix::zeros(1, 2));
        let loss = t.mae_loss(s, target).unwrap();
        let g = t.backward(loss).unwrap();
        assert!(g.get(c).is_none());
        assert!(g.get(w).is_some());
    }

    #[test]
    fn aggregate_is_self_adjoint() {
        for seed in 0..10 {
            let g = erdos_renyi(25, 0.2, seed).unwrap();
            let u = random(25, 1, seed + 100);
            let v = random(25, 1, seed + 200);
            let lhs: f64 = g.aggregate(&u).unwrap().as_slice().iter().zip(v.as_slice()).map(|(a, b)| a * b).sum();
            let rhs: f64 = u.as_slice().iter().zip(g.aggregate(&v).unwrap().as_slice()).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    /// Central differences of `f` at every entry of `m`.
    fn finite_diff(m: &Matrix, h: f64, f: &dyn Fn(&Matrix) -> f64) -> Matrix {
        let mut out = Matrix::zeros(m.rows(), m.cols());
        for k in 0..m.as_slice().len() {
            let mut plus = m.clone();
            plus.as_mut_slice()[k] += h;
            let mut minus = m.clone();
            minus.as_mut_slice()[k] -= h;
            out.as_mut_slice()[k] = (f(&plus) - f(&minus)) / (2.0 * h);
        }
        out
    }

    fn assert_close(analytic: &Matrix, numeric: &Matrix, rel: f64) {
        for (a, n) in analytic.as_slice().iter().zip(numeric.as_slice()) {
            assert!((a - n).abs() <= rel * a.abs().max(n.abs()).max(1e-3), "{a} vs {n}");
        }
    }

    #[test]
    fn mae_of_linear_map_matches_finite_differences() {
        let x = random(6, 3, 1);
        let y = random(6, 2, 2);
        let w = random(3, 2, 3);
        let loss_of = |w: &Matrix| {
            let mut t = Tape::new();
            let xv = t.constant(x.clone());
            let wv = t.param(w.clone());
            let yv = t.constant(y.clone());
            let p = t.matmul(xv, wv).unwrap();
            let l = t.mae_loss(p, yv).unwrap();
            t.value(l)[(0, 0)]
        };
        let mut t = Tape::new();
        let xv = t.constant(x.clone());
        let wv = t.param(w.clone());
        let yv = t.constant(y.clone());
        let p = t.matmul(xv, wv).unwrap();
        let l = t.mae_loss(p, yv).unwrap();
        let g = t.backward(l).unwrap();
        assert_close(g.get(wv).unwrap(), &finite_diff(&w, 1e-5, &loss_of), 1e-5);
    }

    fn elementwise_chain<'g>(t: &mut Tape<'g>, g: &'g Graph, a: Var, target: &Matrix) -> Var {
        let s = t.sigmoid(a);
        let th = t.tanh(a);
        let om = t.one_minus(s);
        let h = t.hadamard(om, th).unwrap();
        let agg = t.aggregate(g, h).unwrap();
        let r = t.relu(agg);
        let sc = t.scale(r, 1.7);
        let sum = t.add(sc, h).unwrap();
        let rows = t.sum_rows(sum);
        let tv = t.constant(target.clone());
        t.mse_loss(rows, tv).unwrap()
    }

    #[test]
    fn elementwise_ops_match_finite_differences() {
        let g = erdos_renyi(8, 0.4, 4).unwrap();
        let a0 = random(8, 3, 5);
        let target = random(1, 3, 6);
        let loss_of = |a: &Matrix| {
            let mut t = Tape::new();
            let v = t.param(a.clone());
            let l = elementwise_chain(&mut t, &g, v, &target);
            t.value(l)[(0, 0)]
        };
        let mut t = Tape::new();
        let v = t.param(a0.clone());
        let l = elementwise_chain(&mut t, &g, v, &target);
        let grads = t.backward(l).unwrap();
        assert_close(grads.get(v).unwrap(), &finite_diff(&a0, 1e-5, &loss_of), 1e-5);
    }

    #[test]
    fn backward_is_deterministic() {
        let build = || {
            let mut t = Tape::new();
            let a = t.param(random(4, 4, 9));
            let b = t.param(random(4, 1, 10));
            let y = t.matmul(a, b).unwrap();
            let s = t.tanh(y);
            let z = t.constant(Matrix::zeros(4, 1));
            let l = t.mae_loss(s, z).unwrap();
            let g = t.backward(l).unwrap();
            g.into_param_grads(&t)
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn squared_loss_gradient_is_homogeneous_in_input() {
        // Linear model, squared error against a zero target:
        // the loss is quadratic in x, so grad_w(αx) = α² grad_w(x).
        let x = random(5, 2, 11);
        let w = random(2, 1, 13);
        let grad = |alpha: f64| {
            let mut t = Tape::new();
            let xv = t.constant(x.scaled(alpha));
            let wv = t.param(w.clone());
            let p = t.matmul(xv, wv).unwrap();
            let zero = t.constant(Matrix::zeros(5, 1));
            let l = t.mse_loss(p, zero).unwrap();
            t.backward(l).unwrap().get(wv).unwrap().clone()
        };
        let g1 = grad(1.0);
        for alpha in [-2.0, 0.5, 3.0] {
            assert!(grad(alpha).max_abs_diff(&g1.scaled(alpha * alpha)) < 1e-12);
        }
    }
}

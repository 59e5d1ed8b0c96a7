//! Convolution network zoo: vanilla, GIN-form, second-order and K-order
//! layers, a shared GRU, embed/readout MLPs, Adam training and evaluation.

mod checkpoint;
mod config;
mod network;
mod train;

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{Activation, LayerKind, NetworkConfig, Readout};
pub use network::{
    activations, gradient_check, layer_forward, loss_and_grads, network_forward, predict, BoundParams, Dense,
    GruParams, LayerParams, NetworkParams, Trace,
};
pub use train::{
    evaluate, evaluate_with, mae, sweep_depth, train, Adam, EpochRecord, SweepRow, TrainOptions,
    TrainOutcome,
};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::poly::PolyFilter;

/// Matrix polynomial `Σ_k A^k C_k` with `C_k` acting on channels from the right.
fn layer_matrix_poly(layer: &LayerParams) -> Vec<Matrix> {
    match layer.kind {
        LayerKind::Vanilla => vec![layer.weights[0].clone(), layer.weights[0].clone()],
        _ => layer.weights.clone(),
    }
}

fn matrix_poly_mul(a: &[Matrix], b: &[Matrix]) -> Result<Vec<Matrix>> {
    let (rows, cols) = (a[0].rows(), b[0].cols());
    let mut out = vec![Matrix::zeros(rows, cols); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i + j].add_assign(&ai.matmul(bj)?);
        }
    }
    Ok(out)
}

/// Scalar polynomial filter realized by a linear single-channel network.
///
/// Layers compose as matrix polynomials; the embed and readout maps collapse
/// to a row and a column vector that contract the coefficients.
pub fn linear_polynomial(config: &NetworkConfig, params: &NetworkParams) -> Result<PolyFilter> {
    if !config.is_linear()
        || config.in_channels != 1
        || config.out_channels != 1
        || config.readout != Readout::NodeMlp
    {
        return Err(Error::Parameter(
            "only linear single-channel node-level networks reduce to a scalar filter".into(),
        ));
    }
    let mut embed = Matrix::identity(1);
    for d in &params.embed {
        embed = embed.matmul(&d.weight)?;
    }
    let mut readout = Matrix::identity(config.hidden);
    for d in &params.readout {
        readout = readout.matmul(&d.weight)?;
    }
    let mut poly = vec![embed];
    for layer in &params.layers {
        poly = matrix_poly_mul(&poly, &layer_matrix_poly(layer))?;
    }
    let coeffs = poly
        .iter()
        .map(|c| Ok(c.matmul(&readout)?[(0, 0)]))
        .collect::<Result<Vec<_>>>()?;
    PolyFilter::new(coeffs)
}

//! Polynomial spectral graph filters and second-order graph convolution.
//!
//! The crate covers graph construction and normalization ([`graph`]),
//! eigendecomposition and the graph Fourier transform ([`spectral`]),
//! polynomial filter algebra and quadratic factorization ([`poly`]),
//! synthetic spectrum datasets ([`sgs`]), a small reverse-mode tape
//! ([`autodiff`]) and the convolution network zoo with its training loop
//! ([`models`]).

pub mod autodiff;
pub mod error;
pub mod graph;
pub mod matrix;
pub mod models;
pub mod poly;
pub mod rng;
pub mod sgs;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{aggregate_once, erdos_renyi, normalize_adjacency, Graph, Signal};
pub use matrix::Matrix;
pub use poly::{
    apply_filter, block_diag_t, compose, factor_quadratics, gin_stack_polynomial, lss_dimension,
    vanilla_stack_polynomial, PolyFilter, QuadraticCascade,
};
pub use models::{LayerKind, NetworkConfig, NetworkParams};
pub use sgs::{FilterKind, SgsSample};
pub use spectral::{
    eigendecompose, gft, graph_basis, igft, spectrum_capacity, spectrum_csv, SpectralBasis,
};

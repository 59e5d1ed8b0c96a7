use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Graph convolution kernel of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum LayerKind {
    /// `(A + I) X Θ`, a single tied weight.
    Vanilla,
    /// `X Θ₀ + A X Θ₁`.
    Gin,
    /// `X Θ₀ + A X Θ₁ + A² X Θ₂`.
    So,
    /// `Σ_{k ≤ K} A^k X Θ_k`.
    KOrder(usize),
}

impl LayerKind {
    /// Polynomial degree of the kernel.
    pub fn order(self) -> usize {
        match self {
            LayerKind::Vanilla | LayerKind::Gin => 1,
            LayerKind::So => 2,
            LayerKind::KOrder(k) => k,
        }
    }

    /// Number of weight matrices per layer.
    pub fn num_weights(self) -> usize {
        match self {
            LayerKind::Vanilla => 1,
            other => other.order() + 1,
        }
    }

    pub fn validate(self) -> Result<()> {
        match self {
            LayerKind::KOrder(k) if ![1, 2, 3, 4, 6].contains(&k) => Err(Error::Parameter(format!(
                "unsupported convolution order {k} (expected 1, 2, 3, 4 or 6)"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerKind::Vanilla => f.write_str("vanilla"),
            LayerKind::Gin => f.write_str("gin"),
            LayerKind::So => f.write_str("so"),
            LayerKind::KOrder(k) => write!(f, "korder{k}"),
        }
    }
}

impl FromStr for LayerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s {
            "vanilla" | "gcn" => LayerKind::Vanilla,
            "gin" => LayerKind::Gin,
            "so" | "sogcn" => LayerKind::So,
            other => {
                let k = other
                    .strip_prefix("korder")
                    .and_then(|k| k.parse().ok())
                    .ok_or_else(|| Error::Parameter(format!("unknown layer kind {other:?}")))?;
                LayerKind::KOrder(k)
            }
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl TryFrom<String> for LayerKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LayerKind> for String {
    fn from(k: LayerKind) -> String {
        k.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// Per-node MLP decoder.
    NodeMlp,
    /// Channel-wise sum over nodes followed by the readout MLP.
    GraphSum,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub layer: LayerKind,
    pub depth: usize,
    pub hidden: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub activation: Activation,
    pub use_gru: bool,
    pub readout: Readout,
    /// Hidden widths of the embedding MLP (empty: a single linear map).
    pub embed_hidden: Vec<usize>,
    /// Hidden widths of the readout MLP.
    pub readout_hidden: Vec<usize>,
    /// Biases in the embedding/readout MLPs.
    pub bias: bool,
    pub seed: u64,
}

impl NetworkConfig {
    /// Fully linear network for filter fitting: single-channel input and
    /// output, linear embed and readout without biases, identity activation.
    pub fn linear(layer: LayerKind, depth: usize, hidden: usize, seed: u64) -> Self {
        Self {
            layer,
            depth,
            hidden,
            in_channels: 1,
            out_channels: 1,
            activation: Activation::Identity,
            use_gru: false,
            readout: Readout::NodeMlp,
            embed_hidden: Vec::new(),
            readout_hidden: Vec::new(),
            bias: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.layer.validate()?;
        if self.depth == 0 || self.hidden == 0 || self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::Parameter(
                "depth, hidden width and channel counts must be positive".into(),
            ));
        }
        if self.embed_hidden.iter().chain(&self.readout_hidden).any(|&w| w == 0) {
            return Err(Error::Parameter("MLP widths must be positive".into()));
        }
        Ok(())
    }

    /// True when the whole network is a linear map of its input.
    pub fn is_linear(&self) -> bool {
        self.activation == Activation::Identity && !self.use_gru && !self.bias
    }
}

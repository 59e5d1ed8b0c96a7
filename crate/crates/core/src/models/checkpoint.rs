//! Versioned JSON checkpoints holding the configuration and every tensor.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::NetworkConfig;
use super::network::NetworkParams;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::sgs::io::write_f64_array;

pub const CHECKPOINT_FORMAT: &str = "sogcn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: NetworkConfig,
    pub params: NetworkParams,
}

#[derive(Deserialize)]
struct TensorRecord {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct CheckpointRecord {
    format: String,
    version: u32,
    config: NetworkConfig,
    tensors: Vec<TensorRecord>,
}

#[derive(Serialize)]
struct Header<'a> {
    format: &'a str,
    version: u32,
    config: &'a NetworkConfig,
}

impl Checkpoint {
    pub fn new(config: NetworkConfig, params: NetworkParams) -> Self {
        Self { config, params }
    }

    /// Serializes with every float written to 17 significant digits.
    pub fn to_json(&self) -> String {
        let header = serde_json::to_string(&Header {
            format: CHECKPOINT_FORMAT,
            version: CHECKPOINT_VERSION,
            config: &self.config,
        })
        .expect("config serializes");
        let mut out = String::new();
        out.push_str(&header[..header.len() - 1]);
        out.push_str(",\"tensors\":[");
        for (i, t) in self.params.tensors().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!("\n{{\"rows\":{},\"cols\":{},\"data\":", t.rows(), t.cols()));
            write_f64_array(&mut out, t.as_slice());
            out.push('}');
        }
        out.push_str("\n]}\n");
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: CheckpointRecord =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("checkpoint: {e}")))?;
        if record.format != CHECKPOINT_FORMAT {
            return Err(Error::Format(format!("not a checkpoint (format {:?})", record.format)));
        }
        if record.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {}",
                record.version
            )));
        }
        let mut params = NetworkParams::init(&record.config)?;
        let tensors = record
            .tensors
            .into_iter()
            .map(|t| Matrix::from_vec(t.rows, t.cols, t.data))
            .collect::<Result<Vec<_>>>()?;
        params.load_tensors(tensors)?;
        Ok(Self {
            config: record.config,
            params,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Activation, LayerKind, Readout};

    fn config() -> NetworkConfig {
        NetworkConfig {
            layer: LayerKind::KOrder(3),
            depth: 2,
            hidden: 3,
            in_channels: 2,
            out_channels: 1,
            activation: Activation::Relu,
            use_gru: true,
            readout: Readout::GraphSum,
            embed_hidden: vec![4],
            readout_hidden: vec![],
            bias: true,
            seed: 17,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let config = config();
        let params = NetworkParams::init(&config).unwrap();
        let ckpt = Checkpoint::new(config.clone(), params.clone());
        let text = ckpt.to_json();
        let back = Checkpoint::from_json(&text).unwrap();
        assert_eq!(back.config, config);
        assert_eq!(back.params, params);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let config = NetworkConfig::linear(LayerKind::So, 3, 2, 4);
        let ckpt = Checkpoint::new(config.clone(), NetworkParams::init(&config).unwrap());
        ckpt.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back.params, ckpt.params);
    }

    #[test]
    fn malformed_checkpoints_are_rejected() {
        let config = NetworkConfig::linear(LayerKind::So, 1, 1, 0);
        let text = Checkpoint::new(config.clone(), NetworkParams::init(&config).unwrap()).to_json();
        let wrong_version = text.replacen("\"version\":1", "\"version\":9", 1);
        assert!(matches!(Checkpoint::from_json(&wrong_version), Err(Error::Format(_))));
        let wrong_depth = text.replacen("\"depth\":1", "\"depth\":2", 1);
        assert!(matches!(Checkpoint::from_json(&wrong_depth), Err(Error::Format(_))));
        assert!(Checkpoint::from_json("{}").is_err());
    }
}

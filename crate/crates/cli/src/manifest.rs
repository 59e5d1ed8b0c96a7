//! Run manifests: the exact command record written beside every artifact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sogcn_core::sgs::GENERATOR_VERSION;
use sogcn_core::{Error, Result};

use crate::args::Command;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub generator_version: u32,
    pub invocation: Command,
}

impl Manifest {
    pub fn new(invocation: Command) -> Self {
        Self {
            tool: "sogcn".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            generator_version: GENERATOR_VERSION,
            invocation,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

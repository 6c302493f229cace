//! Versioned JSON checkpoints.
//!
//! Numbers are written in shortest round-trip decimal form, so reading a
//! checkpoint back yields bit-identical parameters.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GlnError, Result};
use crate::model::{ActivationSchedule, GlnLayerParams, GlnModel, ModelShape};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointDoc {
    format_version: u32,
    dims: Vec<usize>,
    n: usize,
    k: usize,
    #[serde(rename = "L")]
    depth: usize,
    epsilon: f64,
    #[serde(default)]
    activations: ActivationSchedule,
    layers: Vec<GlnLayerParams>,
}

pub fn to_json(model: &GlnModel) -> Result<String> {
    let doc = CheckpointDoc {
        format_version: FORMAT_VERSION,
        dims: model.shape().dims.clone(),
        n: model.n(),
        k: model.k(),
        depth: model.depth(),
        epsilon: model.epsilon(),
        activations: model.activations(),
        layers: model.layers().to_vec(),
    };
    Ok(serde_json::to_string(&doc)?)
}

pub fn from_json(text: &str) -> Result<GlnModel> {
    let doc: CheckpointDoc = serde_json::from_str(text)?;
    if doc.format_version != FORMAT_VERSION {
        return Err(GlnError::Format(format!(
            "unsupported checkpoint version {} (expected {FORMAT_VERSION})",
            doc.format_version
        )));
    }
    if doc.depth + 1 != doc.dims.len() {
        return Err(GlnError::Format(format!(
            "L = {} disagrees with {} dims",
            doc.depth,
            doc.dims.len()
        )));
    }
    let shape = ModelShape {
        dims: doc.dims,
        n: doc.n,
        k: doc.k,
    };
    GlnModel::new(shape, doc.epsilon, doc.activations, doc.layers)
}

pub fn save(model: &GlnModel, path: &Path) -> Result<()> {
    fs::write(path, to_json(model)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<GlnModel> {
    from_json(&fs::read_to_string(path)?)
}

//! Self-describing JSON checkpoints. Parameters are stored as base64 of
//! little-endian IEEE-754 doubles.

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::dqn::DqnModel;
use super::mlp::{Dense, Mlp};
use crate::env::ObsConfig;
use crate::error::{Error, Result};
use crate::model::QuantityMode;

pub const FORMAT: &str = "dqvrp-dqn-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    inputs: usize,
    outputs: usize,
    weights: String,
    bias: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointDoc {
    format: String,
    version: u32,
    config_hash: String,
    num_vehicles: usize,
    quantity_mode: QuantityMode,
    obs: ObsConfig,
    input_scale: Vec<f64>,
    layers: Vec<LayerDoc>,
}

fn encode(values: impl Iterator<Item = f64>) -> String {
    let bytes: Vec<u8> = values.flat_map(f64::to_le_bytes).collect();
    STANDARD.encode(bytes)
}

fn decode(text: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let bytes = STANDARD.decode(text).map_err(|e| Error::Checkpoint(format!("{what}: {e}")))?;
    if bytes.len() != expected * 8 {
        return Err(Error::Checkpoint(format!("{what}: {} bytes, expected {}", bytes.len(), expected * 8)));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
}

pub fn to_json(model: &DqnModel) -> Result<String> {
    let doc = CheckpointDoc {
        format: FORMAT.into(),
        version: VERSION,
        config_hash: model.config_hash.clone(),
        num_vehicles: model.num_vehicles,
        quantity_mode: model.quantity_mode,
        obs: model.obs,
        input_scale: model.input_scale.clone(),
        layers: model
            .net
            .layers()
            .iter()
            .map(|l| LayerDoc {
                inputs: l.w.nrows(),
                outputs: l.w.ncols(),
                weights: encode(l.w.iter().copied()),
                bias: encode(l.b.iter().copied()),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn from_json(text: &str) -> Result<DqnModel> {
    let doc: CheckpointDoc = serde_json::from_str(text).map_err(|e| Error::Checkpoint(format!("malformed checkpoint: {e}")))?;
    if doc.format != FORMAT {
        return Err(Error::Checkpoint(format!("not a model checkpoint (format {:?})", doc.format)));
    }
    if doc.version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {}", doc.version)));
    }
    let mut layers = Vec::with_capacity(doc.layers.len());
    for (i, l) in doc.layers.iter().enumerate() {
        let w = decode(&l.weights, l.inputs * l.outputs, &format!("layers[{i}].weights"))?;
        let b = decode(&l.bias, l.outputs, &format!("layers[{i}].bias"))?;
        layers.push(Dense {
            w: Array2::from_shape_vec((l.inputs, l.outputs), w).expect("length checked"),
            b: Array1::from(b),
        });
    }
    let net = Mlp::from_layers(layers).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let expected_len = doc.obs.len(doc.num_vehicles, doc.quantity_mode);
    if net.input_dim() != expected_len || doc.input_scale.len() != expected_len {
        return Err(Error::Checkpoint(format!(
            "network input {} / scale length {} do not match the observation length {expected_len}",
            net.input_dim(),
            doc.input_scale.len()
        )));
    }
    if net.output_dim() != doc.num_vehicles + 1 {
        return Err(Error::Checkpoint(format!("network has {} outputs for {} vehicles", net.output_dim(), doc.num_vehicles)));
    }
    Ok(DqnModel {
        net,
        obs: doc.obs,
        num_vehicles: doc.num_vehicles,
        quantity_mode: doc.quantity_mode,
        input_scale: doc.input_scale,
        config_hash: doc.config_hash,
    })
}

pub fn save(model: &DqnModel, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(model)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<DqnModel> {
    from_json(&std::fs::read_to_string(path)?)
}

//! Binary checkpoint container.
//!
//! Layout: the 8-byte magic `RDMPCKPT`, a little-endian `u32` format
//! version, a little-endian `u64` header length, the JSON header, then the
//! parameters as little-endian `f64` in header order.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::network::{ModelConfig, ParamView, VisionDmpModel};
use crate::LearnerError;

pub const MAGIC: &[u8; 8] = b"RDMPCKPT";
pub const VERSION: u32 = 1;

/// How images and trajectories must be prepared for the stored model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessingHeader {
    pub crop: String,
    pub resize: String,
    pub input_size: usize,
    pub pixel_scale: String,
    /// Trajectory normalization: each axis divided by its own image side.
    pub normalization: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub model: ModelConfig,
    pub preprocessing: PreprocessingHeader,
    pub params: Vec<ParamView>,
    pub num_params: usize,
}

impl CheckpointHeader {
    fn for_model(model: &VisionDmpModel) -> Self {
        Self {
            model: model.config().clone(),
            preprocessing: PreprocessingHeader {
                crop: "center_square".into(),
                resize: "triangle".into(),
                input_size: model.config().input_size,
                pixel_scale: "unit".into(),
                normalization: "per_axis".into(),
            },
            params: model.views().to_vec(),
            num_params: model.num_params(),
        }
    }
}

pub fn write_checkpoint(model: &VisionDmpModel, mut w: impl Write) -> Result<(), LearnerError> {
    let header = serde_json::to_vec(&CheckpointHeader::for_model(model)).expect("header serializes");
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u64).to_le_bytes())?;
    w.write_all(&header)?;
    for p in model.params() {
        w.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_checkpoint(mut r: impl Read) -> Result<VisionDmpModel, LearnerError> {
    let corrupt = |m: &str| LearnerError::Checkpoint(m.into());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(LearnerError::Checkpoint(format!("unsupported version {version}")));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len);
    if len > 16 << 20 {
        return Err(corrupt("header too large"));
    }
    let mut header = vec![0u8; len as usize];
    r.read_exact(&mut header)?;
    let header: CheckpointHeader =
        serde_json::from_slice(&header).map_err(|e| LearnerError::Checkpoint(format!("header: {e}")))?;
    let mut model = VisionDmpModel::zeroed(header.model.clone())?;
    if model.views() != header.params.as_slice() || model.num_params() != header.num_params {
        return Err(corrupt("parameter layout does not match the model config"));
    }
    let mut buf = vec![0u8; 8 * header.num_params];
    r.read_exact(&mut buf)?;
    let params: Vec<f64> = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if params.iter().any(|p| !p.is_finite()) {
        return Err(corrupt("non-finite parameter"));
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(corrupt("trailing bytes"));
    }
    model.set_params(&params)?;
    Ok(model)
}

pub fn save_checkpoint(model: &VisionDmpModel, path: &Path) -> Result<(), LearnerError> {
    let mut bytes = Vec::new();
    write_checkpoint(model, &mut bytes)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<VisionDmpModel, LearnerError> {
    read_checkpoint(std::io::BufReader::new(std::fs::File::open(path)?))
}

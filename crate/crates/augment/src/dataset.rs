use image::RgbImage;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vinedmp_core::Trajectory;

use crate::transform::{apply, sample_transform};
use crate::{AugmentError, AugmentationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?} (expected train, dev or test)")),
        }
    }
}

/// An image with its demonstration in that image's pixel frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub split: Split,
    pub image: RgbImage,
    pub trajectory: Trajectory,
}

/// Seed of replica `replica` of sample `id`: `base_seed` plus a hash of the
/// pair that does not depend on iteration order.
pub fn replica_seed(base_seed: u64, id: &str, replica: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(id.as_bytes());
    h.update([0u8]);
    h.update((replica as u64).to_le_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    base_seed.wrapping_add(u64::from_le_bytes(bytes))
}

pub fn replica_id(id: &str, replica: usize) -> String {
    format!("{id}_aug{replica:03}")
}

/// Replica `replica` (1-based) of `sample`, keeping its split.
pub fn augment_sample(
    sample: &Sample,
    config: &AugmentationConfig,
    base_seed: u64,
    replica: usize,
) -> Result<Sample, AugmentError> {
    let (w, h) = sample.image.dimensions();
    let params = sample_transform(config, replica_seed(base_seed, &sample.id, replica), (h, w));
    let (image, trajectory) = apply(&sample.image, &sample.trajectory, &params)?;
    Ok(Sample {
        id: replica_id(&sample.id, replica),
        split: sample.split,
        image,
        trajectory,
    })
}

/// Every original followed by its `config.factor` replicas.
pub fn augment_dataset(
    samples: &[Sample],
    config: &AugmentationConfig,
    base_seed: u64,
) -> Result<Vec<Sample>, AugmentError> {
    config.validate()?;
    let mut out = Vec::with_capacity(samples.len() * (config.factor + 1));
    for s in samples {
        out.push(s.clone());
        for replica in 1..=config.factor {
            out.push(augment_sample(s, config, base_seed, replica)?);
        }
    }
    Ok(out)
}

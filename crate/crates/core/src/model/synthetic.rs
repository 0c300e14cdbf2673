//! Deterministic random checkpoints for fixtures and smoke tests.

use std::path::Path;

use safetensors::tensor::{Dtype, TensorView};

use super::config::ModelConfig;
use super::weights::{expected_shape, required_tensor_names};
use crate::error::{Error, Result};

/// A named tensor as (name, shape, values).
pub type NamedTensor = (String, Vec<usize>, Vec<f32>);

/// Every tensor a checkpoint for `config` needs, filled from a seeded
/// generator. LayerNorm gains start near 1, everything else near 0.
pub fn random_tensors(config: &ModelConfig, seed: u64, scale: f32) -> Vec<NamedTensor> {
    let mut rng = SplitMix64(seed);
    required_tensor_names(config.n_layers)
        .into_iter()
        .map(|name| {
            let shape = expected_shape(&name, config);
            let len: usize = shape.iter().product();
            let is_gain = name.contains("ln_") && name.ends_with(".weight");
            let values = (0..len)
                .map(|_| {
                    let u = rng.next_unit() * 2.0 - 1.0;
                    if is_gain {
                        1.0 + 0.1 * u
                    } else {
                        scale * u
                    }
                })
                .collect();
            (name, shape, values)
        })
        .collect()
}

/// Writes f32 tensors to a safetensors archive.
pub fn write_safetensors(path: impl AsRef<Path>, tensors: &[NamedTensor]) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<Vec<u8>> = tensors
        .iter()
        .map(|(_, _, v)| v.iter().flat_map(|x| x.to_le_bytes()).collect())
        .collect();
    let views = tensors
        .iter()
        .zip(&bytes)
        .map(|((name, shape, _), b)| {
            TensorView::new(Dtype::F32, shape.clone(), b)
                .map(|view| (name.clone(), view))
                .map_err(|e| Error::Archive {
                    path: path.to_path_buf(),
                    reason: e.to_string(),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    safetensors::serialize_to_file(views, None, path).map_err(|e| Error::Archive {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

struct SplitMix64(u64);

impl SplitMix64 {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn next_unit(&mut self) -> f32 {
        (self.next_u64() >> 40) as f32 / (1u64 << 24) as f32
    }
}

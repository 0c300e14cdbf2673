use std::collections::HashMap;
use std::path::Path;

use safetensors::{Dtype, SafeTensors};

use super::config::ModelConfig;
use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub weight: Vec<f32>,
    pub bias: Vec<f32>,
}

/// GPT-2 "Conv1D" projection: `y = x W + b` with `W` stored `[in, out]`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: Matrix,
    pub bias: Vec<f32>,
}

#[derive(Debug, Clone)]
pub struct Block {
    pub ln_1: LayerNorm,
    pub attn_qkv: Linear,
    pub attn_proj: Linear,
    pub ln_2: LayerNorm,
    pub mlp_fc: Linear,
    pub mlp_proj: Linear,
}

/// Loaded GPT-2 weights. Immutable once constructed; share freely across threads.
///
/// The output projection is tied to the token embedding, as in the published
/// GPT-2 checkpoints.
#[derive(Debug, Clone)]
pub struct Model {
    pub(crate) config: ModelConfig,
    pub(crate) token_embedding: Matrix,
    pub(crate) position_embedding: Matrix,
    pub(crate) blocks: Vec<Block>,
    pub(crate) ln_f: LayerNorm,
}

/// Tensor names a checkpoint must contain for the given number of layers,
/// in the published GPT-2 convention. A `transformer.` prefix on every name
/// is also accepted when loading.
pub fn required_tensor_names(n_layers: usize) -> Vec<String> {
    let mut names = vec!["wte.weight".to_string(), "wpe.weight".to_string()];
    for l in 0..n_layers {
        for suffix in LAYER_TENSORS {
            names.push(format!("h.{l}.{suffix}"));
        }
    }
    names.push("ln_f.weight".into());
    names.push("ln_f.bias".into());
    names
}

const LAYER_TENSORS: [&str; 12] = [
    "ln_1.weight",
    "ln_1.bias",
    "attn.c_attn.weight",
    "attn.c_attn.bias",
    "attn.c_proj.weight",
    "attn.c_proj.bias",
    "ln_2.weight",
    "ln_2.bias",
    "mlp.c_fc.weight",
    "mlp.c_fc.bias",
    "mlp.c_proj.weight",
    "mlp.c_proj.bias",
];

pub(crate) fn expected_shape(name: &str, cfg: &ModelConfig) -> Vec<usize> {
    let d = cfg.d_model;
    match name {
        "wte.weight" => vec![cfg.vocab_size, d],
        "wpe.weight" => vec![cfg.max_context, d],
        "ln_f.weight" | "ln_f.bias" => vec![d],
        _ => {
            let suffix = name.splitn(3, '.').nth(2).unwrap_or_default();
            match suffix {
                "attn.c_attn.weight" => vec![d, 3 * d],
                "attn.c_attn.bias" => vec![3 * d],
                "attn.c_proj.weight" => vec![d, d],
                "mlp.c_fc.weight" => vec![d, cfg.d_mlp()],
                "mlp.c_fc.bias" => vec![cfg.d_mlp()],
                "mlp.c_proj.weight" => vec![cfg.d_mlp(), d],
                _ => vec![d],
            }
        }
    }
}

/// Named tensors decoded to f32, keyed by canonical (unprefixed) name.
pub struct TensorStore {
    tensors: HashMap<String, (Vec<usize>, Vec<f32>)>,
}

impl TensorStore {
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let archive = SafeTensors::deserialize(bytes).map_err(|e| Error::Archive {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let mut tensors = HashMap::new();
        for (name, view) in archive.iter() {
            let canonical = name.strip_prefix("transformer.").unwrap_or(name);
            // causal-mask buffers; the output head is tied to wte
            if canonical.ends_with(".attn.bias")
                || canonical.ends_with(".attn.masked_bias")
                || canonical == "lm_head.weight"
            {
                continue;
            }
            let values = decode_f32(name, view.dtype(), view.data())?;
            tensors.insert(canonical.to_string(), (view.shape().to_vec(), values));
        }
        Ok(TensorStore { tensors })
    }

    pub fn get(&self, name: &str) -> Option<(&[usize], &[f32])> {
        self.tensors
            .get(name)
            .map(|(s, v)| (s.as_slice(), v.as_slice()))
    }

    fn take(&mut self, name: &str, cfg: &ModelConfig) -> Result<Vec<f32>> {
        let (shape, values) = self
            .tensors
            .remove(name)
            .ok_or_else(|| Error::MissingTensor(name.to_string()))?;
        let expected = expected_shape(name, cfg);
        if shape != expected {
            return Err(Error::ShapeMismatch {
                name: name.to_string(),
                expected,
                found: shape,
            });
        }
        Ok(values)
    }
}

fn decode_f32(name: &str, dtype: Dtype, data: &[u8]) -> Result<Vec<f32>> {
    let values = match dtype {
        Dtype::F32 => data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect(),
        Dtype::F16 => data
            .chunks_exact(2)
            .map(|c| half::f16::from_le_bytes([c[0], c[1]]).to_f32())
            .collect(),
        Dtype::BF16 => data
            .chunks_exact(2)
            .map(|c| half::bf16::from_le_bytes([c[0], c[1]]).to_f32())
            .collect(),
        Dtype::F64 => data
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()) as f32)
            .collect(),
        other => {
            return Err(Error::UnsupportedDtype {
                name: name.to_string(),
                dtype: format!("{other:?}"),
            })
        }
    };
    Ok(values)
}

impl Model {
    /// Loads a safetensors checkpoint and checks every tensor against `config`.
    pub fn load(path: impl AsRef<Path>, config: ModelConfig) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let store = TensorStore::from_bytes(&bytes, path)?;
        Model::from_store(store, config)
    }

    pub fn from_store(mut store: TensorStore, config: ModelConfig) -> Result<Self> {
        config.validate()?;
        // report the first absent name before any shape problem
        if let Some(missing) = required_tensor_names(config.n_layers)
            .into_iter()
            .find(|n| !store.tensors.contains_key(n))
        {
            return Err(Error::MissingTensor(missing));
        }
        let d = config.d_model;
        let token_embedding = Matrix::new(
            config.vocab_size,
            d,
            store.take("wte.weight", &config)?,
        );
        let position_embedding = Matrix::new(
            config.max_context,
            d,
            store.take("wpe.weight", &config)?,
        );
        let mut blocks = Vec::with_capacity(config.n_layers);
        for l in 0..config.n_layers {
            let mut t = |suffix: &str| store.take(&format!("h.{l}.{suffix}"), &config);
            let ln_1 = LayerNorm {
                weight: t("ln_1.weight")?,
                bias: t("ln_1.bias")?,
            };
            let attn_qkv = Linear {
                weight: Matrix::new(d, 3 * d, t("attn.c_attn.weight")?),
                bias: t("attn.c_attn.bias")?,
            };
            let attn_proj = Linear {
                weight: Matrix::new(d, d, t("attn.c_proj.weight")?),
                bias: t("attn.c_proj.bias")?,
            };
            let ln_2 = LayerNorm {
                weight: t("ln_2.weight")?,
                bias: t("ln_2.bias")?,
            };
            let mlp_fc = Linear {
                weight: Matrix::new(d, config.d_mlp(), t("mlp.c_fc.weight")?),
                bias: t("mlp.c_fc.bias")?,
            };
            let mlp_proj = Linear {
                weight: Matrix::new(config.d_mlp(), d, t("mlp.c_proj.weight")?),
                bias: t("mlp.c_proj.bias")?,
            };
            blocks.push(Block {
                ln_1,
                attn_qkv,
                attn_proj,
                ln_2,
                mlp_fc,
                mlp_proj,
            });
        }
        let ln_f = LayerNorm {
            weight: store.take("ln_f.weight", &config)?,
            bias: store.take("ln_f.bias", &config)?,
        };
        Ok(Model {
            config,
            token_embedding,
            position_embedding,
            blocks,
            ln_f,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn token_embedding(&self) -> &Matrix {
        &self.token_embedding
    }
}

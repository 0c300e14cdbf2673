use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of a GPT-2-style decoder.
///
/// Deserializes from the toolkit's own field names or from a Hugging Face
/// `config.json` (`n_layer`, `n_head`, `n_embd`, `n_positions`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(alias = "n_layer")]
    pub n_layers: usize,
    #[serde(alias = "n_head")]
    pub n_heads: usize,
    #[serde(alias = "n_embd")]
    pub d_model: usize,
    pub vocab_size: usize,
    #[serde(alias = "n_positions", alias = "n_ctx")]
    pub max_context: usize,
    #[serde(default = "default_eps")]
    pub layer_norm_epsilon: f32,
}

fn default_eps() -> f32 {
    1e-5
}

impl Default for ModelConfig {
    /// The 12-layer, 12-head, 768-wide GPT-2 (124M parameters).
    fn default() -> Self {
        ModelConfig {
            n_layers: 12,
            n_heads: 12,
            d_model: 768,
            vocab_size: 50257,
            max_context: 1024,
            layer_norm_epsilon: 1e-5,
        }
    }
}

impl ModelConfig {
    pub fn d_head(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn d_mlp(&self) -> usize {
        4 * self.d_model
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_layers", self.n_layers),
            ("n_heads", self.n_heads),
            ("d_model", self.d_model),
            ("vocab_size", self.vocab_size),
            ("max_context", self.max_context),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return Err(Error::Config(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if !(self.layer_norm_epsilon > 0.0 && self.layer_norm_epsilon.is_finite()) {
            return Err(Error::Config("layer_norm_epsilon must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ModelConfig::from_json_str(&text)
    }

    /// Parses and validates a config. When both `n_positions` and `n_ctx`
    /// are present, `n_positions` wins.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        if let Some(obj) = value.as_object_mut() {
            if obj.contains_key("n_positions") || obj.contains_key("max_context") {
                obj.remove("n_ctx");
            }
        }
        let cfg: ModelConfig = serde_json::from_value(value)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

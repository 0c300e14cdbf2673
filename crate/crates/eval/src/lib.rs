//! Helpers for checking the toolkit against reference data: locating a
//! pretrained checkpoint, reading reference logits, and attention models
//! with hand-placed patterns.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use interfere_core::{
    ActivationTrace, AttentionModel, HeadId, Model, ModelConfig, Result, Tokenizer,
};
use safetensors::SafeTensors;

/// Directory holding a pretrained GPT-2: `model.safetensors`, optionally
/// `config.json`, `vocab.json`, `merges.txt` and `golden_124m.safetensors`.
pub const CHECKPOINT_ENV: &str = "INTERFERE_GPT2_DIR";

/// Stimulus file with full experimental materials, if available.
pub const FULL_STIMULI_ENV: &str = "INTERFERE_FULL_STIMULI";

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn bundled_tokenizer() -> Result<Tokenizer> {
    let dir = workspace_root().join("data/gpt2");
    Tokenizer::from_files(dir.join("vocab.json"), dir.join("merges.txt"))
}

pub fn parity_sentences() -> Vec<String> {
    std::fs::read_to_string(workspace_root().join("data/parity_sentences.txt"))
        .expect("data/parity_sentences.txt")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect()
}

/// A pretrained checkpoint found through [`CHECKPOINT_ENV`].
#[derive(Debug, Clone)]
pub struct ReferenceCheckpoint {
    pub dir: PathBuf,
}

impl ReferenceCheckpoint {
    pub fn from_env() -> std::result::Result<Self, String> {
        let dir = std::env::var_os(CHECKPOINT_ENV)
            .map(PathBuf::from)
            .ok_or_else(|| format!("pretrained checkpoint unavailable ({CHECKPOINT_ENV} not set)"))?;
        if !dir.join("model.safetensors").is_file() {
            return Err(format!("no model.safetensors in {}", dir.display()));
        }
        Ok(ReferenceCheckpoint { dir })
    }

    pub fn config(&self) -> Result<ModelConfig> {
        let p = self.dir.join("config.json");
        if p.is_file() {
            ModelConfig::from_json_file(p)
        } else {
            Ok(ModelConfig::default())
        }
    }

    pub fn model(&self) -> Result<Model> {
        Model::load(self.dir.join("model.safetensors"), self.config()?)
    }

    pub fn tokenizer(&self) -> Result<Tokenizer> {
        let (v, m) = (self.dir.join("vocab.json"), self.dir.join("merges.txt"));
        if v.is_file() && m.is_file() {
            Tokenizer::from_files(v, m)
        } else {
            bundled_tokenizer()
        }
    }

    pub fn golden_path(&self) -> PathBuf {
        self.dir.join("golden_124m.safetensors")
    }
}

/// Reference outputs for one sentence.
pub struct GoldenSeq {
    pub tokens: Vec<u32>,
    /// `[position][vocab]`, row-major.
    pub logits: Vec<f32>,
    pub surprisal_bits: Vec<f64>,
}

/// Reads `seq{k}.tokens` / `.logits` / `.surprisal_bits` for k = 0, 1, ...
pub fn read_golden(path: &Path) -> std::result::Result<Vec<GoldenSeq>, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let st = SafeTensors::deserialize(&bytes).map_err(|e| format!("{}: {e}", path.display()))?;
    let raw = |name: &str| -> std::result::Result<Vec<u8>, String> {
        Ok(st.tensor(name).map_err(|e| format!("{name}: {e}"))?.data().to_vec())
    };
    let mut out = Vec::new();
    for k in 0.. {
        if st.tensor(&format!("seq{k}.tokens")).is_err() {
            break;
        }
        let tokens = raw(&format!("seq{k}.tokens"))?
            .chunks_exact(8)
            .map(|c| i64::from_le_bytes(c.try_into().unwrap()) as u32)
            .collect();
        let logits = raw(&format!("seq{k}.logits"))?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let surprisal_bits = raw(&format!("seq{k}.surprisal_bits"))?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        out.push(GoldenSeq {
            tokens,
            logits,
            surprisal_bits,
        });
    }
    Ok(out)
}

/// Attention model with one-hot rows placed by hand for specific token
/// sequences. Other rows are uniform over the causal window; logits are
/// zero over a one-entry vocabulary.
pub struct PlantedModel {
    config: ModelConfig,
    plans: HashMap<Vec<u32>, Vec<(HeadId, usize, usize)>>,
}

impl PlantedModel {
    pub fn new(n_layers: usize, n_heads: usize, max_context: usize) -> Self {
        PlantedModel {
            config: ModelConfig {
                n_layers,
                n_heads,
                d_model: n_heads,
                vocab_size: 1,
                max_context,
                layer_norm_epsilon: 1e-5,
            },
            plans: HashMap::new(),
        }
    }

    /// Makes `head` at `query` attend only to `key` when run on `tokens`.
    pub fn plant(&mut self, tokens: Vec<u32>, head: HeadId, query: usize, key: usize) {
        assert!(key <= query, "attention must be causal");
        self.plans.entry(tokens).or_default().push((head, query, key));
    }
}

impl AttentionModel for PlantedModel {
    fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn forward(&self, tokens: &[u32]) -> Result<ActivationTrace> {
        let n = tokens.len();
        let (l, h) = (self.config.n_layers, self.config.n_heads);
        let mut attn = vec![0.0f32; l * h * n * n];
        for block in attn.chunks_mut(n * n) {
            for q in 0..n {
                block[q * n..=q * n + q].fill(1.0 / (q + 1) as f32);
            }
        }
        for &(head, q, k) in self.plans.get(tokens).into_iter().flatten() {
            let off = (head.layer * h + head.head) * n * n + q * n;
            let row = &mut attn[off..off + n];
            row.fill(0.0);
            row[k] = 1.0;
        }
        ActivationTrace::from_parts(l, h, 1, tokens.to_vec(), vec![0.0; n], attn)
    }
}

#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use interfere_core::{ActivationTrace, AttentionModel, HeadId, Model, ModelConfig, Tokenizer};
use safetensors::SafeTensors;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn gpt2_tokenizer() -> &'static Tokenizer {
    static TOKENIZER: OnceLock<Tokenizer> = OnceLock::new();
    TOKENIZER.get_or_init(|| {
        let dir = workspace_root().join("data/gpt2");
        Tokenizer::from_files(dir.join("vocab.json"), dir.join("merges.txt")).unwrap()
    })
}

pub fn tiny_config() -> ModelConfig {
    ModelConfig::from_json_file(data_dir().join("tiny_gpt2_config.json")).unwrap()
}

pub fn tiny_model() -> &'static Model {
    static MODEL: OnceLock<Model> = OnceLock::new();
    MODEL.get_or_init(|| {
        Model::load(data_dir().join("tiny_gpt2.safetensors"), tiny_config()).unwrap()
    })
}

/// Reference outputs for one token sequence, produced by the PyTorch GPT-2
/// implementation (scripts/make_fixtures.py).
pub struct GoldenSeq {
    pub tokens: Vec<u32>,
    pub logits: Vec<f32>,
    /// [layer][head][query][key]
    pub attn: Vec<f32>,
    pub surprisal_bits: Vec<f64>,
}

pub fn tiny_golden() -> Vec<GoldenSeq> {
    let bytes = std::fs::read(data_dir().join("tiny_gpt2_golden.safetensors")).unwrap();
    let st = SafeTensors::deserialize(&bytes).unwrap();
    let mut out = Vec::new();
    for k in 0.. {
        let Ok(tok) = st.tensor(&format!("seq{k}.tokens")) else {
            break;
        };
        let tokens = tok
            .data()
            .chunks_exact(8)
            .map(|c| i64::from_le_bytes(c.try_into().unwrap()) as u32)
            .collect();
        let f32s = |name: &str| -> Vec<f32> {
            st.tensor(name)
                .unwrap()
                .data()
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect()
        };
        let surprisal_bits = st
            .tensor(&format!("seq{k}.surprisal_bits"))
            .unwrap()
            .data()
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        out.push(GoldenSeq {
            tokens,
            logits: f32s(&format!("seq{k}.logits")),
            attn: f32s(&format!("seq{k}.attn")),
            surprisal_bits,
        });
    }
    out
}

/// Attention model with hand-placed attention rows. Unplanned rows are
/// uniform over the causal window; logits are all zero over a one-entry
/// vocabulary.
pub struct PlantedModel {
    pub config: ModelConfig,
    /// token sequence -> (head, query, key) one-hot rows
    pub plans: std::collections::HashMap<Vec<u32>, Vec<(HeadId, usize, usize)>>,
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
            plans: Default::default(),
        }
    }

    pub fn plant(&mut self, tokens: Vec<u32>, head: HeadId, query: usize, key: usize) {
        assert!(key <= query);
        self.plans.entry(tokens).or_default().push((head, query, key));
    }
}

impl AttentionModel for PlantedModel {
    fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn forward(&self, tokens: &[u32]) -> interfere_core::Result<ActivationTrace> {
        let n = tokens.len();
        let (l, h) = (self.config.n_layers, self.config.n_heads);
        let mut attn = vec![0.0f32; l * h * n * n];
        for block in attn.chunks_mut(n * n) {
            for q in 0..n {
                block[q * n..q * n + q + 1].fill(1.0 / (q + 1) as f32);
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

/// Random-weight model over the full GPT-2 vocabulary, small enough to run
/// fast. Context is 40 tokens.
pub fn random_gpt2_vocab_model() -> &'static Model {
    static MODEL: OnceLock<Model> = OnceLock::new();
    MODEL.get_or_init(|| {
        let cfg = ModelConfig {
            n_layers: 5,
            n_heads: 6,
            d_model: 24,
            vocab_size: 50257,
            max_context: 40,
            layer_norm_epsilon: 1e-5,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.safetensors");
        interfere_core::model::synthetic::write_safetensors(
            &path,
            &interfere_core::model::synthetic::random_tensors(&cfg, 11, 0.3),
        )
        .unwrap();
        Model::load(&path, cfg).unwrap()
    })
}

pub fn stimuli_dir() -> PathBuf {
    workspace_root().join("data/stimuli")
}

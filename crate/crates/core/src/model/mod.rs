//! GPT-2 checkpoint loading and a CPU forward pass that keeps every
//! attention pattern.
//!
//! Accepted checkpoint tensor names (an optional `transformer.` prefix is
//! stripped; `h.N.attn.bias`, `h.N.attn.masked_bias` and `lm_head.weight`
//! are ignored):
//!
//! ```text
//! wte.weight                [vocab_size, d_model]
//! wpe.weight                [max_context, d_model]
//! h.N.ln_1.weight / .bias   [d_model]
//! h.N.attn.c_attn.weight    [d_model, 3 * d_model]
//! h.N.attn.c_attn.bias      [3 * d_model]
//! h.N.attn.c_proj.weight    [d_model, d_model]
//! h.N.attn.c_proj.bias      [d_model]
//! h.N.ln_2.weight / .bias   [d_model]
//! h.N.mlp.c_fc.weight       [d_model, 4 * d_model]
//! h.N.mlp.c_fc.bias         [4 * d_model]
//! h.N.mlp.c_proj.weight     [4 * d_model, d_model]
//! h.N.mlp.c_proj.bias       [d_model]
//! ln_f.weight / .bias       [d_model]
//! ```
//!
//! The unembedding reuses `wte.weight` (tied weights).

mod config;
mod forward;
pub mod synthetic;
mod trace;
mod weights;

pub use config::ModelConfig;
pub use forward::{validate_tokens, AttentionModel};
pub use trace::{ActivationTrace, HeadId};
pub use weights::{required_tensor_names, Matrix, Model, TensorStore};

use rayon::prelude::*;

use super::trace::ActivationTrace;
use super::weights::{LayerNorm, Linear, Model};
use super::ModelConfig;
use crate::error::{Error, Result};

/// Anything that maps a token sequence to a full activation trace.
///
/// [`Model`] is the real implementation; tests plant synthetic ones.
pub trait AttentionModel: Sync {
    fn config(&self) -> &ModelConfig;
    fn forward(&self, tokens: &[u32]) -> Result<ActivationTrace>;
}

impl AttentionModel for Model {
    fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn forward(&self, tokens: &[u32]) -> Result<ActivationTrace> {
        Model::forward(self, tokens)
    }
}

/// Checks the input contract shared by every forward implementation.
pub fn validate_tokens(config: &ModelConfig, tokens: &[u32]) -> Result<()> {
    if tokens.is_empty() {
        return Err(Error::EmptyInput);
    }
    if tokens.len() > config.max_context {
        return Err(Error::InputTooLong {
            len: tokens.len(),
            max: config.max_context,
        });
    }
    if let Some(&id) = tokens.iter().find(|&&t| t as usize >= config.vocab_size) {
        return Err(Error::TokenOutOfRange {
            id,
            vocab_size: config.vocab_size,
        });
    }
    Ok(())
}

// Every row of every intermediate is computed independently with a fixed
// accumulation order, so row i is bit-identical whatever follows it.
impl Model {
    pub fn forward(&self, tokens: &[u32]) -> Result<ActivationTrace> {
        let cfg = &self.config;
        validate_tokens(cfg, tokens)?;
        let n = tokens.len();
        let d = cfg.d_model;
        let n_heads = cfg.n_heads;
        let d_head = cfg.d_head();
        let eps = cfg.layer_norm_epsilon;

        let mut x = vec![0.0f32; n * d];
        for (i, &t) in tokens.iter().enumerate() {
            let te = self.token_embedding.row(t as usize);
            let pe = self.position_embedding.row(i);
            for (o, (a, b)) in x[i * d..(i + 1) * d].iter_mut().zip(te.iter().zip(pe)) {
                *o = a + b;
            }
        }

        let mut attentions = vec![0.0f32; cfg.n_layers * n_heads * n * n];
        let scale = 1.0 / (d_head as f32).sqrt();

        for (l, block) in self.blocks.iter().enumerate() {
            let h = layer_norm(&x, d, &block.ln_1, eps);
            let qkv = linear(&h, n, &block.attn_qkv);
            let mut mixed = vec![0.0f32; n * d];
            let layer_attn = &mut attentions[l * n_heads * n * n..(l + 1) * n_heads * n * n];

            let per_head: Vec<(Vec<f32>, Vec<f32>)> = (0..n_heads)
                .into_par_iter()
                .map(|hd| head_attention(&qkv, n, d, hd, d_head, scale))
                .collect();
            for (hd, (pattern, out)) in per_head.into_iter().enumerate() {
                layer_attn[hd * n * n..(hd + 1) * n * n].copy_from_slice(&pattern);
                for i in 0..n {
                    mixed[i * d + hd * d_head..i * d + (hd + 1) * d_head]
                        .copy_from_slice(&out[i * d_head..(i + 1) * d_head]);
                }
            }

            let proj = linear(&mixed, n, &block.attn_proj);
            add_assign(&mut x, &proj);

            let h = layer_norm(&x, d, &block.ln_2, eps);
            let mut fc = linear(&h, n, &block.mlp_fc);
            fc.iter_mut().for_each(|v| *v = gelu(*v));
            let mlp = linear(&fc, n, &block.mlp_proj);
            add_assign(&mut x, &mlp);
        }

        let h = layer_norm(&x, d, &self.ln_f, eps);
        let logits = unembed(&h, n, d, self.token_embedding.as_slice(), cfg.vocab_size);

        ActivationTrace::from_parts(
            cfg.n_layers,
            n_heads,
            cfg.vocab_size,
            tokens.to_vec(),
            logits,
            attentions,
        )
    }
}

/// Causal softmax attention for one head. Returns the `n x n` pattern and
/// the `n x d_head` mixed values.
fn head_attention(
    qkv: &[f32],
    n: usize,
    d: usize,
    hd: usize,
    d_head: usize,
    scale: f32,
) -> (Vec<f32>, Vec<f32>) {
    let q = |i: usize| &qkv[i * 3 * d + hd * d_head..i * 3 * d + (hd + 1) * d_head];
    let k = |j: usize| &qkv[i_k(j, d) + hd * d_head..i_k(j, d) + (hd + 1) * d_head];
    let v = |j: usize| &qkv[i_v(j, d) + hd * d_head..i_v(j, d) + (hd + 1) * d_head];

    let mut pattern = vec![0.0f32; n * n];
    let mut out = vec![0.0f32; n * d_head];
    for i in 0..n {
        let row = &mut pattern[i * n..i * n + i + 1];
        let qi = q(i);
        for (j, s) in row.iter_mut().enumerate() {
            *s = dot(qi, k(j)) * scale;
        }
        let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        let mut sum = 0.0f32;
        for s in row.iter_mut() {
            *s = (*s - max).exp();
            sum += *s;
        }
        for s in row.iter_mut() {
            *s /= sum;
        }
        let o = &mut out[i * d_head..(i + 1) * d_head];
        for (j, &a) in row.iter().enumerate() {
            for (oo, &vv) in o.iter_mut().zip(v(j)) {
                *oo += a * vv;
            }
        }
    }
    (pattern, out)
}

#[inline]
fn i_k(j: usize, d: usize) -> usize {
    j * 3 * d + d
}

#[inline]
fn i_v(j: usize, d: usize) -> usize {
    j * 3 * d + 2 * d
}

#[inline]
fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add_assign(x: &mut [f32], y: &[f32]) {
    x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
}

fn layer_norm(x: &[f32], d: usize, ln: &LayerNorm, eps: f32) -> Vec<f32> {
    let mut out = vec![0.0f32; x.len()];
    for (row, o) in x.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
        let mean = row.iter().sum::<f32>() / d as f32;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f32>() / d as f32;
        let inv = 1.0 / (var + eps).sqrt();
        for (((o, &v), &w), &b) in o.iter_mut().zip(row).zip(&ln.weight).zip(&ln.bias) {
            *o = (v - mean) * inv * w + b;
        }
    }
    out
}

/// `x [n, in] * W [in, out] + b`. Rows are processed in blocks so each
/// weight row is read once per block; per-element summation order does not
/// depend on the block size.
fn linear(x: &[f32], n: usize, lin: &Linear) -> Vec<f32> {
    const BLOCK: usize = 32;
    let d_in = lin.weight.rows();
    let d_out = lin.weight.cols();
    debug_assert_eq!(x.len(), n * d_in);
    let mut out = vec![0.0f32; n * d_out];
    out.par_chunks_mut(d_out * BLOCK)
        .zip(x.par_chunks(d_in * BLOCK))
        .for_each(|(o, rows)| {
            for oi in o.chunks_mut(d_out) {
                oi.copy_from_slice(&lin.bias);
            }
            for k in 0..d_in {
                let w = lin.weight.row(k);
                for (oi, row) in o.chunks_mut(d_out).zip(rows.chunks(d_in)) {
                    let xv = row[k];
                    for (oo, &wv) in oi.iter_mut().zip(w) {
                        *oo += xv * wv;
                    }
                }
            }
        });
    out
}

/// Logits against the tied token embedding `[vocab, d]`. Each embedding row
/// is read once for all positions.
fn unembed(h: &[f32], n: usize, d: usize, wte: &[f32], vocab: usize) -> Vec<f32> {
    const CHUNK: usize = 1024;
    let mut by_token = vec![0.0f32; vocab * n];
    by_token
        .par_chunks_mut(CHUNK * n)
        .enumerate()
        .for_each(|(c, chunk)| {
            for (off, col) in chunk.chunks_mut(n).enumerate() {
                let t = c * CHUNK + off;
                let e = &wte[t * d..(t + 1) * d];
                for (i, o) in col.iter_mut().enumerate() {
                    *o = dot(&h[i * d..(i + 1) * d], e);
                }
            }
        });
    let mut logits = vec![0.0f32; n * vocab];
    for (t, col) in by_token.chunks(n).enumerate() {
        for (i, &v) in col.iter().enumerate() {
            logits[i * vocab + t] = v;
        }
    }
    logits
}

/// The tanh approximation of GELU used by GPT-2.
#[inline]
fn gelu(x: f32) -> f32 {
    const C: f32 = 0.797_884_6; // sqrt(2 / pi)
    0.5 * x * (1.0 + (C * (x + 0.044_715 * x * x * x)).tanh())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gelu_reference_points() {
        assert_eq!(gelu(0.0), 0.0);
        // values from the tanh formula evaluated in f64
        assert!((gelu(1.0) - 0.841_192).abs() < 1e-5);
        assert!((gelu(-1.0) + 0.158_808).abs() < 1e-5);
    }

    #[test]
    fn layer_norm_standardizes() {
        let ln = LayerNorm {
            weight: vec![1.0; 4],
            bias: vec![0.0; 4],
        };
        let out = layer_norm(&[1.0, 2.0, 3.0, 4.0], 4, &ln, 0.0);
        let mean: f32 = out.iter().sum::<f32>() / 4.0;
        let var: f32 = out.iter().map(|v| v * v).sum::<f32>() / 4.0;
        assert!(mean.abs() < 1e-6);
        assert!((var - 1.0).abs() < 1e-5);
    }
}

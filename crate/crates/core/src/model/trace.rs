use serde::Serialize;

use crate::error::{Error, Result};

/// Everything one forward pass exposes: next-token logits at every position
/// and the post-softmax attention pattern of every head.
///
/// Attention is stored `[layer][head][query][key]`, each query row of length
/// `n_tokens` with exact zeros above the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTrace {
    tokens: Vec<u32>,
    n_tokens: usize,
    vocab_size: usize,
    n_layers: usize,
    n_heads: usize,
    logits: Vec<f32>,
    attentions: Vec<f32>,
}

/// A (layer, head) pair, both zero-based. Displays as `head<layer>_<head>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct HeadId {
    pub layer: usize,
    pub head: usize,
}

impl HeadId {
    pub const fn new(layer: usize, head: usize) -> Self {
        HeadId { layer, head }
    }
}

impl std::fmt::Display for HeadId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "head{}_{}", self.layer, self.head)
    }
}

impl ActivationTrace {
    /// Assembles a trace from flat buffers, checking only their lengths.
    pub fn from_parts(
        n_layers: usize,
        n_heads: usize,
        vocab_size: usize,
        tokens: Vec<u32>,
        logits: Vec<f32>,
        attentions: Vec<f32>,
    ) -> Result<Self> {
        let n_tokens = tokens.len();
        if n_tokens == 0 {
            return Err(Error::EmptyInput);
        }
        if logits.len() != n_tokens * vocab_size {
            return Err(Error::Config(format!(
                "logits buffer has {} values, expected {}",
                logits.len(),
                n_tokens * vocab_size
            )));
        }
        if attentions.len() != n_layers * n_heads * n_tokens * n_tokens {
            return Err(Error::Config(format!(
                "attention buffer has {} values, expected {}",
                attentions.len(),
                n_layers * n_heads * n_tokens * n_tokens
            )));
        }
        Ok(ActivationTrace {
            tokens,
            n_tokens,
            vocab_size,
            n_layers,
            n_heads,
            logits,
            attentions,
        })
    }

    /// Input token ids the trace was computed from.
    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    pub fn n_tokens(&self) -> usize {
        self.n_tokens
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn n_heads(&self) -> usize {
        self.n_heads
    }

    pub fn logits(&self, position: usize) -> Result<&[f32]> {
        self.check_position(position)?;
        let v = self.vocab_size;
        Ok(&self.logits[position * v..(position + 1) * v])
    }

    /// Attention row of `query` for one head, over all `n_tokens` keys.
    pub fn attention_row(&self, head: HeadId, query: usize) -> Result<&[f32]> {
        self.check_head(head)?;
        self.check_position(query)?;
        let n = self.n_tokens;
        let start = ((head.layer * self.n_heads + head.head) * n + query) * n;
        Ok(&self.attentions[start..start + n])
    }

    /// Full `n_tokens x n_tokens` pattern of one head, row-major.
    pub fn attention_matrix(&self, head: HeadId) -> Result<&[f32]> {
        self.check_head(head)?;
        let n = self.n_tokens;
        let start = (head.layer * self.n_heads + head.head) * n * n;
        Ok(&self.attentions[start..start + n * n])
    }

    pub fn check_head(&self, head: HeadId) -> Result<()> {
        if head.layer >= self.n_layers || head.head >= self.n_heads {
            return Err(Error::HeadOutOfRange {
                layer: head.layer,
                head: head.head,
                n_layers: self.n_layers,
                n_heads: self.n_heads,
            });
        }
        Ok(())
    }

    fn check_position(&self, position: usize) -> Result<()> {
        if position >= self.n_tokens {
            return Err(Error::PositionOutOfRange {
                position,
                n_tokens: self.n_tokens,
            });
        }
        Ok(())
    }

    pub fn heads(&self) -> impl Iterator<Item = HeadId> + '_ {
        (0..self.n_layers)
            .flat_map(move |layer| (0..self.n_heads).map(move |head| HeadId { layer, head }))
    }

    /// Softmax of the logits row at `position`, computed in f64.
    pub fn next_token_distribution(&self, position: usize) -> Result<Vec<f64>> {
        Ok(softmax(self.logits(position)?))
    }

    /// `log2 P(token | tokens[..=position])`, i.e. the log-probability the
    /// model assigns at `position` to the token that follows it.
    pub fn log2_prob(&self, position: usize, token: u32) -> Result<f64> {
        let row = self.logits(position)?;
        let t = token as usize;
        if t >= self.vocab_size {
            return Err(Error::TokenOutOfRange {
                id: token,
                vocab_size: self.vocab_size,
            });
        }
        Ok((row[t] as f64 - log_sum_exp(row)) / std::f64::consts::LN_2)
    }
}

fn log_sum_exp(row: &[f32]) -> f64 {
    let max = row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x as f64));
    let sum: f64 = row.iter().map(|&x| (x as f64 - max).exp()).sum();
    max + sum.ln()
}

fn softmax(row: &[f32]) -> Vec<f64> {
    let max = row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x as f64));
    let exps: Vec<f64> = row.iter().map(|&x| (x as f64 - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

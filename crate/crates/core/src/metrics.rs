//! Surprisal, attention entropy and attention-to-target at a critical word.
//!
//! All quantities are in bits. Ranges are token index ranges into the
//! trace (use [`crate::tokenizer::locate_span`] to get them from byte spans).

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ActivationTrace, HeadId};

/// Which subtoken of a multi-token critical word anchors the attention metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Anchor {
    #[default]
    First,
    Last,
}

impl Anchor {
    pub fn position(self, range: &Range<usize>) -> usize {
        match self {
            Anchor::First => range.start,
            Anchor::Last => range.end - 1,
        }
    }
}

/// Token ranges of the critical word and, optionally, the target and
/// distractor words it is measured against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalRegion {
    pub critical: Range<usize>,
    pub target: Option<Range<usize>>,
    pub distractor: Option<Range<usize>>,
}

impl CriticalRegion {
    pub fn new(
        critical: Range<usize>,
        target: Option<Range<usize>>,
        distractor: Option<Range<usize>>,
    ) -> Result<Self> {
        if critical.is_empty() {
            return Err(Error::Region("critical region is empty".into()));
        }
        for (name, r) in [("target", &target), ("distractor", &distractor)] {
            if let Some(r) = r {
                if r.is_empty() {
                    return Err(Error::Region(format!("{name} region is empty")));
                }
                if r.end > critical.start {
                    return Err(Error::Region(format!(
                        "{name} tokens {r:?} do not precede critical tokens {critical:?}"
                    )));
                }
            }
        }
        Ok(CriticalRegion {
            critical,
            target,
            distractor,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricRecord {
    pub surprisal_bits: f64,
    pub attention_entropy_bits: f64,
    pub attention_to_target: Option<f64>,
    pub attention_to_distractor: Option<f64>,
    pub head_used: HeadId,
}

/// Sum over the region's subtokens of `-log2 P(token | everything before it)`.
pub fn surprisal(trace: &ActivationTrace, region: Range<usize>) -> Result<f64> {
    if region.is_empty() || region.end > trace.n_tokens() {
        return Err(Error::Region(format!(
            "token range {region:?} not within {} tokens",
            trace.n_tokens()
        )));
    }
    if region.start == 0 {
        return Err(Error::Region(
            "region starts at the first token and has no left context".into(),
        ));
    }
    let tokens = trace.tokens();
    let mut bits = 0.0;
    for p in region {
        bits -= trace.log2_prob(p - 1, tokens[p])?;
    }
    Ok(bits)
}

/// `-sum_{j < i} a_ij log2 a_ij` for one head's row at `position`.
///
/// Self-attention is left out and the remaining mass is not renormalized.
pub fn attention_entropy(trace: &ActivationTrace, head: HeadId, position: usize) -> Result<f64> {
    if position == 0 {
        return Err(Error::Region(
            "attention entropy needs at least one prior token".into(),
        ));
    }
    let row = trace.attention_row(head, position)?;
    Ok(row_entropy(&row[..position]))
}

pub(crate) fn row_entropy(prior: &[f32]) -> f64 {
    prior
        .iter()
        .map(|&a| a as f64)
        .filter(|&a| a > 0.0)
        .map(|a| -a * a.log2())
        .sum()
}

/// Attention mass flowing from `position` onto the tokens of `target`.
pub fn attention_to_target(
    trace: &ActivationTrace,
    head: HeadId,
    position: usize,
    target: Range<usize>,
) -> Result<f64> {
    if target.is_empty() || target.end > position {
        return Err(Error::Region(format!(
            "target tokens {target:?} are not strictly before position {position}"
        )));
    }
    let row = trace.attention_row(head, position)?;
    Ok(row[target].iter().map(|&a| a as f64).sum())
}

/// All metrics for one region at one head.
pub fn measure(
    trace: &ActivationTrace,
    region: &CriticalRegion,
    head: HeadId,
    anchor: Anchor,
) -> Result<MetricRecord> {
    let position = anchor.position(&region.critical);
    Ok(MetricRecord {
        surprisal_bits: surprisal(trace, region.critical.clone())?,
        attention_entropy_bits: attention_entropy(trace, head, position)?,
        attention_to_target: region
            .target
            .clone()
            .map(|t| attention_to_target(trace, head, position, t))
            .transpose()?,
        attention_to_distractor: region
            .distractor
            .clone()
            .map(|t| attention_to_target(trace, head, position, t))
            .transpose()?,
        head_used: head,
    })
}

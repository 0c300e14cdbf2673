//! GPT-2 byte-level BPE.
//!
//! Loads the published two-file vocabulary (`vocab.json` id map plus ranked
//! `merges.txt`). Text is split by the GPT-2 pre-tokenizer pattern, each
//! piece is mapped byte-by-byte onto printable code points, and merges are
//! applied lowest rank first. Special tokens such as `<|endoftext|>` are not
//! recognized inside text; the string is encoded like any other.

mod bytes;

use std::collections::HashMap;
use std::ops::Range;
use std::path::Path;

use fancy_regex::Regex;
use serde::Serialize;

use crate::error::{Error, Result};
use bytes::{byte_to_char, char_to_byte};

const PRETOKENIZE: &str =
    r"'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+";

/// One subtoken and the bytes of the source text it covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TokenSpan {
    pub token_id: u32,
    pub byte_start: usize,
    pub byte_end: usize,
}

pub struct Tokenizer {
    encoder: HashMap<String, u32>,
    decoder: Vec<Vec<u8>>,
    merge_ranks: HashMap<(String, String), usize>,
    pattern: Regex,
}

impl std::fmt::Debug for Tokenizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tokenizer")
            .field("vocab_size", &self.decoder.len())
            .field("merges", &self.merge_ranks.len())
            .finish()
    }
}

impl Tokenizer {
    pub fn from_files(vocab: impl AsRef<Path>, merges: impl AsRef<Path>) -> Result<Self> {
        let (vocab, merges) = (vocab.as_ref(), merges.as_ref());
        let vocab_text = std::fs::read_to_string(vocab).map_err(|e| Error::io(vocab, e))?;
        let merges_text = std::fs::read_to_string(merges).map_err(|e| Error::io(merges, e))?;
        Tokenizer::from_strs(&vocab_text, &merges_text)
    }

    pub fn from_strs(vocab_json: &str, merges_txt: &str) -> Result<Self> {
        let encoder: HashMap<String, u32> = serde_json::from_str(vocab_json)?;
        let size = encoder.len();
        let mut decoder: Vec<Option<Vec<u8>>> = vec![None; size];
        for (piece, &id) in &encoder {
            let slot = decoder.get_mut(id as usize).ok_or_else(|| {
                Error::Vocabulary(format!("id {id} for {piece:?} exceeds vocabulary size {size}"))
            })?;
            if slot.is_some() {
                return Err(Error::Vocabulary(format!("id {id} assigned twice")));
            }
            let bytes = piece
                .chars()
                .map(|c| {
                    char_to_byte(c).ok_or_else(|| {
                        Error::Vocabulary(format!("entry {piece:?} has unmapped char {c:?}"))
                    })
                })
                .collect::<Result<Vec<u8>>>()?;
            *slot = Some(bytes);
        }
        let decoder = decoder
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Vocabulary("ids are not contiguous".into()))?;

        let mut merge_ranks = HashMap::new();
        for (n, line) in merges_txt.lines().enumerate() {
            if line.starts_with("#version") || line.trim().is_empty() {
                continue;
            }
            let (a, b) = line.split_once(' ').ok_or_else(|| Error::Parse {
                path: "merges".into(),
                line: n + 1,
                reason: format!("expected two space-separated symbols, got {line:?}"),
            })?;
            let joined = format!("{a}{b}");
            if !encoder.contains_key(&joined) {
                return Err(Error::Vocabulary(format!(
                    "merge {a:?} + {b:?} produces {joined:?}, which is not in the vocabulary"
                )));
            }
            let rank = merge_ranks.len();
            merge_ranks.entry((a.to_string(), b.to_string())).or_insert(rank);
        }

        for b in 0..=255u8 {
            let s = byte_to_char(b).to_string();
            if !encoder.contains_key(&s) {
                return Err(Error::Vocabulary(format!("byte {b} has no base token")));
            }
        }

        Ok(Tokenizer {
            encoder,
            decoder,
            merge_ranks,
            pattern: Regex::new(PRETOKENIZE).expect("static pattern"),
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.decoder.len()
    }

    pub fn token_bytes(&self, id: u32) -> Option<&[u8]> {
        self.decoder.get(id as usize).map(Vec::as_slice)
    }

    pub fn encode(&self, text: &str) -> Vec<TokenSpan> {
        let mut spans = Vec::new();
        for m in self.pattern.find_iter(text) {
            // the pattern is a total alternation over any char, so it cannot fail to match
            let m = m.expect("pre-tokenizer pattern");
            self.encode_piece(&text[m.start()..m.end()], m.start(), &mut spans);
        }
        spans
    }

    pub fn encode_ids(&self, text: &str) -> Vec<u32> {
        self.encode(text).into_iter().map(|s| s.token_id).collect()
    }

    fn encode_piece(&self, piece: &str, offset: usize, out: &mut Vec<TokenSpan>) {
        let mut symbols: Vec<String> = piece.bytes().map(|b| byte_to_char(b).to_string()).collect();
        while symbols.len() > 1 {
            let best = symbols
                .windows(2)
                .enumerate()
                .filter_map(|(i, w)| {
                    self.merge_ranks
                        .get(&(w[0].clone(), w[1].clone()))
                        .map(|&r| (r, i))
                })
                .min();
            let Some((_, first)) = best else { break };
            let (left, right) = (symbols[first].clone(), symbols[first + 1].clone());
            let mut merged = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && symbols[i] == left && symbols[i + 1] == right {
                    merged.push(format!("{left}{right}"));
                    i += 2;
                } else {
                    merged.push(std::mem::take(&mut symbols[i]));
                    i += 1;
                }
            }
            symbols = merged;
        }
        let mut pos = offset;
        for sym in symbols {
            let len = sym.chars().count();
            out.push(TokenSpan {
                token_id: self.encoder[&sym],
                byte_start: pos,
                byte_end: pos + len,
            });
            pos += len;
        }
    }

    pub fn decode_bytes(&self, ids: &[u32]) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for &id in ids {
            let bytes = self.token_bytes(id).ok_or(Error::TokenOutOfRange {
                id,
                vocab_size: self.vocab_size(),
            })?;
            out.extend_from_slice(bytes);
        }
        Ok(out)
    }

    /// Decodes ids to text. Byte sequences that are not valid UTF-8 on their
    /// own (a split multibyte character) are replaced with U+FFFD.
    pub fn decode(&self, ids: &[u32]) -> Result<String> {
        let bytes = self.decode_bytes(ids)?;
        Ok(match String::from_utf8(bytes) {
            Ok(s) => s,
            Err(e) => String::from_utf8_lossy(e.as_bytes()).into_owned(),
        })
    }
}

/// Smallest contiguous run of tokens whose bytes cover `range`.
///
/// Annotated words normally exclude the leading space that GPT-2 folds into
/// the token; the covering token is returned either way.
pub fn locate_span(spans: &[TokenSpan], range: Range<usize>) -> Result<Range<usize>> {
    let text_len = spans.last().map_or(0, |s| s.byte_end);
    if range.start >= range.end || range.end > text_len {
        return Err(Error::RangeOutsideText {
            start: range.start,
            end: range.end,
            len: text_len,
        });
    }
    let first = spans.partition_point(|s| s.byte_end <= range.start);
    let last = spans.partition_point(|s| s.byte_start < range.end);
    Ok(first..last)
}

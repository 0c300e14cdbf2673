//! Search for attention heads specialized for a dependency relation.
//!
//! The baseline for a relation is the share of its most frequent relative
//! word offset (dependent minus governor). A head counts as specialized when,
//! at the governor, its strongest attention to a prior token lands on the
//! dependent at least 10% (relative) more often than that baseline share.

pub mod conllu;

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AttentionModel, HeadId};
use crate::tokenizer::{locate_span, Tokenizer};
use crate::util::{read_jsonl, word_spans};
pub use conllu::{parse_conllu, read_conllu_file, ConllSentence, ConllWord};

pub const REFLEXIVE_RELATION: &str = "reflexive-antecedent";

/// A sentence as whitespace-level words with their byte ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub text: String,
    pub words: Vec<Range<usize>>,
    pub is_punct: Vec<bool>,
}

impl Sentence {
    /// Splits on whitespace. Each word's range drops leading and trailing
    /// punctuation, so `themselves.` covers only `themselves`; all-punctuation
    /// words keep their full range and are marked as punctuation.
    pub fn from_text(text: &str) -> Self {
        let mut words = Vec::new();
        let mut is_punct = Vec::new();
        for r in word_spans(text) {
            let w = &text[r.clone()];
            let trimmed = w.trim_matches(|c: char| !c.is_alphanumeric());
            if trimmed.is_empty() {
                words.push(r);
                is_punct.push(true);
            } else {
                let start = r.start + (w.len() - w.trim_start_matches(|c: char| !c.is_alphanumeric()).len());
                words.push(start..start + trimmed.len());
                is_punct.push(false);
            }
        }
        Sentence {
            text: text.to_string(),
            words,
            is_punct,
        }
    }
}

/// One dependency arc. Word indices are 0-based into the sentence's words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyInstance {
    pub sentence: usize,
    pub dependent: usize,
    pub governor: usize,
    pub relation: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencyCorpus {
    pub sentences: Vec<Sentence>,
    pub instances: Vec<DependencyInstance>,
}

#[derive(Debug, Deserialize)]
struct ReflexiveRecord {
    text: String,
    antecedent_word_index: usize,
    anaphor_word_index: usize,
}

impl DependencyCorpus {
    /// Every non-root arc of the parsed sentences, labeled by DEPREL.
    pub fn from_conllu(sentences: &[ConllSentence]) -> Self {
        let mut corpus = DependencyCorpus::default();
        for s in sentences {
            let (text, words) = s.surface();
            let is_punct = s.words.iter().map(|w| w.upos == "PUNCT").collect();
            let idx = corpus.sentences.len();
            corpus.sentences.push(Sentence {
                text,
                words,
                is_punct,
            });
            for w in &s.words {
                if w.head == 0 || w.head == w.id {
                    continue;
                }
                corpus.instances.push(DependencyInstance {
                    sentence: idx,
                    dependent: w.id - 1,
                    governor: w.head - 1,
                    relation: w.deprel.clone(),
                });
            }
        }
        corpus
    }

    pub fn from_conllu_file(path: impl AsRef<Path>) -> Result<Self> {
        Ok(DependencyCorpus::from_conllu(&read_conllu_file(path)?))
    }

    /// Reads `{text, antecedent_word_index, anaphor_word_index}` lines. The
    /// antecedent is the dependent and the reflexive its governor; indices
    /// are 0-based over whitespace-delimited words.
    pub fn from_reflexive_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let records: Vec<ReflexiveRecord> = read_jsonl(path)?;
        let mut corpus = DependencyCorpus::default();
        for (i, r) in records.into_iter().enumerate() {
            let sentence = Sentence::from_text(&r.text);
            let n = sentence.words.len();
            let bad = |reason: String| Error::Parse {
                path: path.display().to_string(),
                line: i + 1,
                reason,
            };
            if r.antecedent_word_index >= n || r.anaphor_word_index >= n {
                return Err(bad(format!("word index out of range for {n} words")));
            }
            if r.antecedent_word_index == r.anaphor_word_index {
                return Err(bad("antecedent and anaphor are the same word".into()));
            }
            let idx = corpus.sentences.len();
            corpus.sentences.push(sentence);
            corpus.instances.push(DependencyInstance {
                sentence: idx,
                dependent: r.antecedent_word_index,
                governor: r.anaphor_word_index,
                relation: REFLEXIVE_RELATION.to_string(),
            });
        }
        Ok(corpus)
    }

    pub fn instances_of<'a>(
        &'a self,
        relation: &'a str,
    ) -> impl Iterator<Item = &'a DependencyInstance> + 'a {
        self.instances.iter().filter(move |i| i.relation == relation)
    }
}

/// Switches for the choices the head-identification method leaves open.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ScoringOptions {
    /// Let the argmax land on the governor's own position.
    pub include_self: bool,
    /// Count relative offsets over non-punctuation words only.
    pub skip_punct: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelativePositionBaseline {
    pub relation: String,
    pub offset: i64,
    pub count: usize,
    pub total: usize,
}

impl RelativePositionBaseline {
    pub fn proportion(&self) -> f64 {
        self.count as f64 / self.total as f64
    }

    pub fn threshold(&self) -> Threshold {
        Threshold::exact(self.count as u64, self.total as u64)
    }
}

/// Minimum accuracy a head needs: 1.1 times the baseline share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub value: f64,
    #[serde(skip)]
    ratio: Option<(u128, u128)>,
}

impl Threshold {
    /// From a baseline share given as `count / total`; comparisons are exact.
    pub fn exact(count: u64, total: u64) -> Self {
        let num = 11 * count as u128;
        let den = 10 * total as u128;
        Threshold {
            value: num as f64 / den as f64,
            ratio: Some((num, den)),
        }
    }

    /// From a baseline share given as a real number.
    pub fn from_proportion(proportion: f64) -> Self {
        Threshold {
            value: proportion * 11.0 / 10.0,
            ratio: None,
        }
    }

    /// A head with no hits is never admitted, even at a zero threshold.
    pub fn admits(&self, hits: u64, n: u64) -> bool {
        if n == 0 || hits == 0 {
            return false;
        }
        match self.ratio {
            Some((num, den)) => hits as u128 * den >= num * n as u128,
            None => hits as f64 / n as f64 >= self.value,
        }
    }
}

fn word_position(sentence: &Sentence, word: usize, skip_punct: bool) -> i64 {
    if skip_punct {
        sentence.is_punct[..word].iter().filter(|&&p| !p).count() as i64
    } else {
        word as i64
    }
}

/// Modal (dependent - governor) word offset of `relation` and its share.
/// Ties go to the smaller absolute offset, then to the negative one.
pub fn compute_baseline(
    corpus: &DependencyCorpus,
    relation: &str,
    options: ScoringOptions,
) -> Result<RelativePositionBaseline> {
    let mut histogram: BTreeMap<i64, usize> = BTreeMap::new();
    let mut total = 0;
    for inst in corpus.instances_of(relation) {
        let s = &corpus.sentences[inst.sentence];
        let offset = word_position(s, inst.dependent, options.skip_punct)
            - word_position(s, inst.governor, options.skip_punct);
        *histogram.entry(offset).or_default() += 1;
        total += 1;
    }
    let (&offset, &count) = histogram
        .iter()
        .max_by(|(oa, ca), (ob, cb)| {
            ca.cmp(cb)
                .then(ob.abs().cmp(&oa.abs()))
                .then(ob.cmp(oa))
        })
        .ok_or_else(|| Error::RelationAbsent(relation.to_string()))?;
    Ok(RelativePositionBaseline {
        relation: relation.to_string(),
        offset,
        count,
        total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeadScore {
    pub layer: usize,
    pub head: usize,
    pub relation: String,
    pub accuracy: f64,
    pub hits: u64,
    pub n_instances: u64,
}

impl HeadScore {
    pub fn head_id(&self) -> HeadId {
        HeadId::new(self.layer, self.head)
    }
}

/// Per-head hit counts over a corpus, plus how many instances were skipped
/// because their sentence did not fit the model context.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusScores {
    pub relation: String,
    pub scores: Vec<HeadScore>,
    pub skipped_sentences: usize,
    pub skipped_instances: usize,
}

/// Index of the largest value; the first one wins ties.
fn argmax(values: &[f32]) -> Option<usize> {
    let mut best: Option<(usize, f32)> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

struct SentenceTally {
    hits: Vec<u64>,
    instances: u64,
    skipped: bool,
}

fn score_sentence<M: AttentionModel>(
    model: &M,
    tokenizer: &Tokenizer,
    sentence: &Sentence,
    instances: &[&DependencyInstance],
    heads: &[HeadId],
    options: ScoringOptions,
) -> Result<SentenceTally> {
    let spans = tokenizer.encode(&sentence.text);
    let max = model.config().max_context;
    if spans.is_empty() || spans.len() > max {
        return Ok(SentenceTally {
            hits: vec![0; heads.len()],
            instances: 0,
            skipped: true,
        });
    }
    let tokens: Vec<u32> = spans.iter().map(|s| s.token_id).collect();
    let trace = model.forward(&tokens)?;
    let mut hits = vec![0u64; heads.len()];
    for inst in instances {
        let gov = locate_span(&spans, sentence.words[inst.governor].clone())?;
        let dep = locate_span(&spans, sentence.words[inst.dependent].clone())?;
        // governor anchor: the subtoken that has seen the whole word
        let anchor = gov.end - 1;
        let domain = if options.include_self { anchor + 1 } else { anchor };
        for (h, head) in heads.iter().enumerate() {
            let row = trace.attention_row(*head, anchor)?;
            if let Some(j) = argmax(&row[..domain]) {
                if dep.contains(&j) {
                    hits[h] += 1;
                }
            }
        }
    }
    Ok(SentenceTally {
        hits,
        instances: instances.len() as u64,
        skipped: false,
    })
}

/// Accuracy of each of `heads` on every instance of `relation`.
///
/// Sentences are scored in parallel on the current rayon pool; counts are
/// reduced by summation, so the result does not depend on corpus order or
/// worker count.
pub fn score_heads<M: AttentionModel>(
    model: &M,
    tokenizer: &Tokenizer,
    corpus: &DependencyCorpus,
    relation: &str,
    heads: &[HeadId],
    options: ScoringOptions,
) -> Result<CorpusScores> {
    let cfg = model.config();
    for h in heads {
        if h.layer >= cfg.n_layers || h.head >= cfg.n_heads {
            return Err(Error::HeadOutOfRange {
                layer: h.layer,
                head: h.head,
                n_layers: cfg.n_layers,
                n_heads: cfg.n_heads,
            });
        }
    }
    let mut by_sentence: HashMap<usize, Vec<&DependencyInstance>> = HashMap::new();
    for inst in corpus.instances_of(relation) {
        by_sentence.entry(inst.sentence).or_default().push(inst);
    }
    if by_sentence.is_empty() {
        return Err(Error::RelationAbsent(relation.to_string()));
    }
    let mut groups: Vec<(usize, Vec<&DependencyInstance>)> = by_sentence.into_iter().collect();
    groups.sort_by_key(|(s, _)| *s);

    let tallies = groups
        .par_iter()
        .map(|(s, insts)| {
            score_sentence(model, tokenizer, &corpus.sentences[*s], insts, heads, options)
                .map(|t| (t, insts.len()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut hits = vec![0u64; heads.len()];
    let mut n_instances = 0u64;
    let mut skipped_sentences = 0;
    let mut skipped_instances = 0;
    for (t, n) in tallies {
        if t.skipped {
            skipped_sentences += 1;
            skipped_instances += n;
            continue;
        }
        n_instances += t.instances;
        hits.iter_mut().zip(&t.hits).for_each(|(a, b)| *a += b);
    }
    let scores = heads
        .iter()
        .zip(hits)
        .map(|(h, hits)| HeadScore {
            layer: h.layer,
            head: h.head,
            relation: relation.to_string(),
            accuracy: if n_instances == 0 {
                0.0
            } else {
                hits as f64 / n_instances as f64
            },
            hits,
            n_instances,
        })
        .collect();
    Ok(CorpusScores {
        relation: relation.to_string(),
        scores,
        skipped_sentences,
        skipped_instances,
    })
}

pub fn head_accuracy<M: AttentionModel>(
    model: &M,
    tokenizer: &Tokenizer,
    corpus: &DependencyCorpus,
    relation: &str,
    head: HeadId,
    options: ScoringOptions,
) -> Result<HeadScore> {
    let mut s = score_heads(model, tokenizer, corpus, relation, &[head], options)?;
    Ok(s.scores.remove(0))
}

pub fn all_heads(model: &impl AttentionModel) -> Vec<HeadId> {
    let cfg = model.config();
    (0..cfg.n_layers)
        .flat_map(|l| (0..cfg.n_heads).map(move |h| HeadId::new(l, h)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Specialization {
    pub threshold: Threshold,
    /// Heads at or above the threshold, by descending accuracy.
    pub specialized: Vec<HeadScore>,
    pub all: CorpusScores,
}

/// Heads whose accuracy is at least `threshold`, sorted by descending
/// accuracy (ties by layer, then head).
pub fn select_specialized(scores: &[HeadScore], threshold: Threshold) -> Vec<HeadScore> {
    let mut picked: Vec<HeadScore> = scores
        .iter()
        .filter(|s| threshold.admits(s.hits, s.n_instances))
        .cloned()
        .collect();
    picked.sort_by(|a, b| {
        b.accuracy
            .total_cmp(&a.accuracy)
            .then(a.layer.cmp(&b.layer))
            .then(a.head.cmp(&b.head))
    });
    picked
}

/// Scores every head and keeps those beating the threshold.
pub fn find_specialized<M: AttentionModel>(
    model: &M,
    tokenizer: &Tokenizer,
    corpus: &DependencyCorpus,
    relation: &str,
    threshold: Threshold,
    options: ScoringOptions,
) -> Result<Specialization> {
    let all = score_heads(model, tokenizer, corpus, relation, &all_heads(model), options)?;
    Ok(Specialization {
        threshold,
        specialized: select_specialized(&all.scores, threshold),
        all,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(offsets: &[(usize, usize)]) -> DependencyCorpus {
        let mut c = DependencyCorpus::default();
        for &(dep, gov) in offsets {
            c.sentences
                .push(Sentence::from_text("w0 w1 w2 w3 w4 w5 w6 w7 w8 w9"));
            c.instances.push(DependencyInstance {
                sentence: c.sentences.len() - 1,
                dependent: dep,
                governor: gov,
                relation: "nsubj".into(),
            });
        }
        c
    }

    #[test]
    fn baseline_all_same_offset() {
        let c = corpus(&[(1, 2), (3, 4), (5, 6)]);
        let b = compute_baseline(&c, "nsubj", ScoringOptions::default()).unwrap();
        assert_eq!((b.offset, b.proportion()), (-1, 1.0));
    }

    #[test]
    fn baseline_prefers_nearer_offset_on_tie() {
        let c = corpus(&[(1, 3), (1, 3), (4, 5), (4, 5), (6, 5)]);
        let b = compute_baseline(&c, "nsubj", ScoringOptions::default()).unwrap();
        assert_eq!(b.offset, -1);
        assert_eq!((b.count, b.total), (2, 5));
        let c = corpus(&[(6, 5), (4, 5)]);
        let b = compute_baseline(&c, "nsubj", ScoringOptions::default()).unwrap();
        assert_eq!(b.offset, -1);
    }

    #[test]
    fn baseline_missing_relation() {
        let c = corpus(&[(1, 2)]);
        assert!(matches!(
            compute_baseline(&c, "obj", ScoringOptions::default()),
            Err(Error::RelationAbsent(_))
        ));
    }

    #[test]
    fn punctuation_can_be_skipped() {
        let mut c = DependencyCorpus::default();
        c.sentences.push(Sentence::from_text("dogs , cats bark"));
        c.instances.push(DependencyInstance {
            sentence: 0,
            dependent: 0,
            governor: 3,
            relation: "nsubj".into(),
        });
        let with = compute_baseline(&c, "nsubj", ScoringOptions::default()).unwrap();
        let without = compute_baseline(
            &c,
            "nsubj",
            ScoringOptions {
                skip_punct: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(with.offset, -3);
        assert_eq!(without.offset, -2);
    }

    #[test]
    fn words_drop_edge_punctuation() {
        let s = Sentence::from_text("\"Coaches\" blamed themselves . ok");
        let words: Vec<_> = s.words.iter().map(|r| &s.text[r.clone()]).collect();
        assert_eq!(words, ["Coaches", "blamed", "themselves", ".", "ok"]);
        assert_eq!(s.is_punct, [false, false, false, true, false]);
    }

    #[test]
    fn threshold_values() {
        assert_eq!(Threshold::from_proportion(0.22).value, 0.242);
        assert_eq!(Threshold::from_proportion(0.42).value, 0.462);
        assert_eq!(Threshold::exact(22, 100).value, 0.242);
        assert_eq!(Threshold::exact(42, 100).value, 0.462);
        let t = Threshold::exact(22, 100);
        assert!(t.admits(242, 1000));
        assert!(!t.admits(241, 1000));
        assert!(!Threshold::from_proportion(0.0).admits(0, 10));
        assert!(Threshold::from_proportion(0.0).admits(1, 10));
    }

    #[test]
    fn argmax_first_on_ties() {
        assert_eq!(argmax(&[0.25, 0.5, 0.5]), Some(1));
        assert_eq!(argmax(&[]), None);
    }
}

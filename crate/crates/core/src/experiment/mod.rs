//! Factorial agreement-interference experiments.
//!
//! Stimuli come in sets sharing a `set_id`; each set covers every cell of
//! interference (int / non-int) by grammaticality (gram / ungram), optionally
//! crossed with subject number. Each item is scored at its critical word,
//! then summarized per condition and contrasted within sets.

mod output;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{measure, Anchor, CriticalRegion, MetricRecord};
use crate::model::{AttentionModel, HeadId};
use crate::stats::{describe, Describe};
use crate::tokenizer::{locate_span, Tokenizer};
use crate::util::{read_jsonl, word_spans};
pub use output::{plot_data, write_effects_csv, write_items_csv, write_plot_data, write_summary_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Interference {
    #[serde(rename = "int")]
    Int,
    #[serde(rename = "non-int")]
    NonInt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grammaticality {
    Gram,
    Ungram,
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum SubjectNumber {
    Sg,
    Pl,
    #[default]
    Absent,
}

impl Interference {
    pub fn label(self) -> &'static str {
        match self {
            Interference::Int => "int",
            Interference::NonInt => "non-int",
        }
    }
}

impl Grammaticality {
    pub fn label(self) -> &'static str {
        match self {
            Grammaticality::Gram => "gram",
            Grammaticality::Ungram => "ungram",
        }
    }
}

impl SubjectNumber {
    pub fn label(self) -> &'static str {
        match self {
            SubjectNumber::Sg => "sg",
            SubjectNumber::Pl => "pl",
            SubjectNumber::Absent => "absent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Condition {
    pub interference: Interference,
    pub grammaticality: Grammaticality,
    #[serde(default)]
    pub subject_number: SubjectNumber,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.interference.label(), self.grammaticality.label())?;
        if self.subject_number != SubjectNumber::Absent {
            write!(f, "/{}", self.subject_number.label())?;
        }
        Ok(())
    }
}

/// One stimulus sentence. Spans are `[start, end)` byte offsets into `text`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StimulusItem {
    pub item_id: String,
    pub set_id: String,
    #[serde(flatten)]
    pub condition: Condition,
    pub text: String,
    #[serde(with = "span")]
    pub critical: Range<usize>,
    #[serde(with = "span")]
    pub target: Range<usize>,
    #[serde(with = "span")]
    pub distractor: Range<usize>,
}

mod span {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::ops::Range;

    pub fn serialize<S: Serializer>(r: &Range<usize>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq([r.start, r.end])
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Range<usize>, D::Error> {
        let [start, end] = <[usize; 2]>::deserialize(d)?;
        Ok(start..end)
    }
}

impl StimulusItem {
    fn check_spans(&self) -> Result<()> {
        let bad = |reason: String| Error::Item {
            item_id: self.item_id.clone(),
            reason,
        };
        let spans = [
            ("critical", &self.critical),
            ("target", &self.target),
            ("distractor", &self.distractor),
        ];
        for (name, r) in spans {
            if r.start >= r.end || r.end > self.text.len() {
                return Err(bad(format!(
                    "{name} span {}..{} is empty or outside the text ({} bytes)",
                    r.start,
                    r.end,
                    self.text.len()
                )));
            }
            if !self.text.is_char_boundary(r.start) || !self.text.is_char_boundary(r.end) {
                return Err(bad(format!("{name} span {}..{} splits a character", r.start, r.end)));
            }
        }
        for (i, (a, ra)) in spans.iter().enumerate() {
            for (b, rb) in &spans[i + 1..] {
                if ra.start < rb.end && rb.start < ra.end {
                    return Err(bad(format!("{a} and {b} spans overlap")));
                }
            }
        }
        for (name, r) in &spans[1..] {
            if r.end > self.critical.start {
                return Err(bad(format!("{name} span does not precede the critical word")));
            }
        }
        Ok(())
    }
}

/// Checks spans, unique item ids, and that every set is a complete
/// factorial design with each cell exactly once.
pub fn validate_stimuli(items: &[StimulusItem]) -> Result<()> {
    let mut ids = HashSet::new();
    for item in items {
        item.check_spans()?;
        if !ids.insert(item.item_id.as_str()) {
            return Err(Error::Item {
                item_id: item.item_id.clone(),
                reason: "duplicate item_id".into(),
            });
        }
    }
    let mut sets: BTreeMap<&str, Vec<Condition>> = BTreeMap::new();
    for item in items {
        sets.entry(&item.set_id).or_default().push(item.condition);
    }
    for (set_id, cells) in sets {
        let incomplete = |reason: String| Error::IncompleteSet {
            set_id: set_id.to_string(),
            reason,
        };
        let unique: BTreeSet<Condition> = cells.iter().copied().collect();
        if unique.len() != cells.len() {
            return Err(incomplete("a condition cell appears more than once".into()));
        }
        let numbers: BTreeSet<SubjectNumber> = cells.iter().map(|c| c.subject_number).collect();
        if numbers.contains(&SubjectNumber::Absent) && numbers.len() > 1 {
            return Err(incomplete("subject_number given for some cells only".into()));
        }
        if numbers.len() > 2 {
            return Err(incomplete("more than two subject numbers".into()));
        }
        for &n in &numbers {
            for i in [Interference::Int, Interference::NonInt] {
                for g in [Grammaticality::Gram, Grammaticality::Ungram] {
                    let c = Condition {
                        interference: i,
                        grammaticality: g,
                        subject_number: n,
                    };
                    if !unique.contains(&c) {
                        return Err(incomplete(format!("missing cell {c}")));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Reads and validates a JSON-lines stimulus file. An empty file yields no items.
pub fn load_stimuli(path: impl AsRef<Path>) -> Result<Vec<StimulusItem>> {
    let items: Vec<StimulusItem> = read_jsonl(path)?;
    validate_stimuli(&items)?;
    Ok(items)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RunOptions {
    pub anchor: Anchor,
    /// Add the word after the critical word to the surprisal region.
    pub spillover: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemRecord {
    pub item_id: String,
    pub set_id: String,
    pub condition: Condition,
    pub metrics: MetricRecord,
}

fn run_item<M: AttentionModel>(
    model: &M,
    tokenizer: &Tokenizer,
    item: &StimulusItem,
    head: HeadId,
    options: RunOptions,
) -> Result<ItemRecord> {
    let fail = |reason: String| Error::Item {
        item_id: item.item_id.clone(),
        reason,
    };
    item.check_spans()?;
    let mut region_end = item.critical.end;
    if options.spillover {
        if let Some(next) = word_spans(&item.text)
            .into_iter()
            .find(|w| w.start >= item.critical.end)
        {
            region_end = next.end;
        }
    }
    let spans = tokenizer.encode(&item.text[..region_end]);
    let max = model.config().max_context;
    if spans.len() > max {
        return Err(fail(format!(
            "{} tokens up to the critical region exceed the context of {max}",
            spans.len()
        )));
    }
    let locate = |r: &Range<usize>, name: &str| {
        locate_span(&spans, r.clone()).map_err(|e| fail(format!("{name} span: {e}")))
    };
    let critical = locate(&item.critical, "critical")?;
    let surprisal_region = locate(&(item.critical.start..region_end), "critical")?;
    let target = locate(&item.target, "target")?;
    let distractor = locate(&item.distractor, "distractor")?;
    if critical.start == 0 {
        return Err(fail("critical word is the first token and has no context".into()));
    }
    let tokens: Vec<u32> = spans.iter().map(|s| s.token_id).collect();
    let trace = model.forward(&tokens)?;
    let region = CriticalRegion::new(critical, Some(target), Some(distractor))
        .map_err(|e| fail(e.to_string()))?;
    let mut metrics = measure(&trace, &region, head, options.anchor)?;
    if surprisal_region != region.critical {
        metrics.surprisal_bits = crate::metrics::surprisal(&trace, surprisal_region)?;
    }
    Ok(ItemRecord {
        item_id: item.item_id.clone(),
        set_id: item.set_id.clone(),
        condition: item.condition,
        metrics,
    })
}

/// Scores every item at its critical word. Items run in parallel; the output
/// keeps input order.
pub fn run_experiment<M: AttentionModel>(
    model: &M,
    tokenizer: &Tokenizer,
    items: &[StimulusItem],
    head: HeadId,
    options: RunOptions,
) -> Result<Vec<ItemRecord>> {
    let cfg = model.config();
    if head.layer >= cfg.n_layers || head.head >= cfg.n_heads {
        return Err(Error::HeadOutOfRange {
            layer: head.layer,
            head: head.head,
            n_layers: cfg.n_layers,
            n_heads: cfg.n_heads,
        });
    }
    items
        .par_iter()
        .map(|item| run_item(model, tokenizer, item, head, options))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Surprisal,
    AttentionEntropy,
    AttentionToTarget,
    AttentionToDistractor,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Surprisal,
        Metric::AttentionEntropy,
        Metric::AttentionToTarget,
        Metric::AttentionToDistractor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Surprisal => "surprisal",
            Metric::AttentionEntropy => "attention_entropy",
            Metric::AttentionToTarget => "attention_to_target",
            Metric::AttentionToDistractor => "attention_to_distractor",
        }
    }

    pub fn value(self, r: &MetricRecord) -> Option<f64> {
        match self {
            Metric::Surprisal => Some(r.surprisal_bits),
            Metric::AttentionEntropy => Some(r.attention_entropy_bits),
            Metric::AttentionToTarget => r.attention_to_target,
            Metric::AttentionToDistractor => r.attention_to_distractor,
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMetric(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub condition: Condition,
    pub metric: Metric,
    pub stats: Describe,
}

/// Per-condition mean, spread and t interval of `metric`, in condition order.
/// Items without a value for the metric are left out.
pub fn summarize(records: &[ItemRecord], metric: &str) -> Result<Vec<ConditionSummary>> {
    let metric: Metric = metric.parse()?;
    let mut groups: BTreeMap<Condition, Vec<f64>> = BTreeMap::new();
    for r in records {
        if let Some(v) = metric.value(&r.metrics) {
            groups.entry(r.condition).or_default().push(v);
        }
    }
    Ok(groups
        .into_iter()
        .map(|(condition, values)| ConditionSummary {
            condition,
            metric,
            stats: describe(&values),
        })
        .collect())
}

/// Interfering minus non-interfering, paired within sets, for one
/// grammaticality level (and subject number).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Effect {
    pub grammaticality: Grammaticality,
    pub subject_number: SubjectNumber,
    pub metric: Metric,
    /// Statistics of the per-set differences; `stats.mean` is the effect.
    pub stats: Describe,
}

impl Effect {
    pub fn effect(&self) -> f64 {
        self.stats.mean
    }
}

pub fn interference_effects(records: &[ItemRecord], metric: &str) -> Result<Vec<Effect>> {
    let metric: Metric = metric.parse()?;
    type Key<'a> = (Grammaticality, SubjectNumber, &'a str);
    let mut pairs: BTreeMap<Key, [Option<f64>; 2]> = BTreeMap::new();
    for r in records {
        let Some(v) = metric.value(&r.metrics) else {
            continue;
        };
        let c = r.condition;
        let slot = &mut pairs
            .entry((c.grammaticality, c.subject_number, r.set_id.as_str()))
            .or_default()[c.interference as usize];
        if slot.is_some() {
            return Err(Error::Unpaired(r.set_id.clone()));
        }
        *slot = Some(v);
    }
    let mut diffs: BTreeMap<(Grammaticality, SubjectNumber), Vec<f64>> = BTreeMap::new();
    for ((g, n, set), pair) in pairs {
        match pair {
            [Some(int), Some(non)] => diffs.entry((g, n)).or_default().push(int - non),
            _ => return Err(Error::Unpaired(set.to_string())),
        }
    }
    Ok(diffs
        .into_iter()
        .map(|((grammaticality, subject_number), d)| Effect {
            grammaticality,
            subject_number,
            metric,
            stats: describe(&d),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(set: &str, i: Interference, g: Grammaticality, s: f64) -> ItemRecord {
        ItemRecord {
            item_id: format!("{set}-{i:?}-{g:?}"),
            set_id: set.into(),
            condition: Condition {
                interference: i,
                grammaticality: g,
                subject_number: SubjectNumber::Absent,
            },
            metrics: MetricRecord {
                surprisal_bits: s,
                attention_entropy_bits: 0.0,
                attention_to_target: None,
                attention_to_distractor: None,
                head_used: HeadId::new(0, 0),
            },
        }
    }

    use Grammaticality::*;
    use Interference::*;

    #[test]
    fn summary_of_one_two_three() {
        let recs: Vec<_> = [1.0, 2.0, 3.0]
            .iter()
            .enumerate()
            .map(|(k, &v)| record(&k.to_string(), Int, Gram, v))
            .collect();
        let s = summarize(&recs, "surprisal").unwrap();
        assert_eq!(s.len(), 1);
        let d = s[0].stats;
        assert_eq!(d.mean, 2.0);
        assert!((d.se.unwrap() - 0.5774).abs() < 1e-4);
        assert!((d.ci95_high.unwrap() - 2.0 - 2.484).abs() < 1e-3);
        assert!((2.0 - d.ci95_low.unwrap() - 2.484).abs() < 1e-3);
    }

    #[test]
    fn constant_condition_has_zero_width() {
        let recs: Vec<_> = (0..3).map(|k| record(&k.to_string(), Int, Gram, 1.0)).collect();
        let d = summarize(&recs, "surprisal").unwrap()[0].stats;
        assert_eq!((d.mean, d.sd, d.ci95_low, d.ci95_high), (1.0, Some(0.0), Some(1.0), Some(1.0)));
    }

    #[test]
    fn unknown_metric() {
        assert!(matches!(summarize(&[], "reading_time"), Err(Error::UnknownMetric(_))));
    }

    #[test]
    fn paired_differences() {
        let mut recs = Vec::new();
        for (k, d) in [-2.0, -3.0, -4.0].into_iter().enumerate() {
            let set = format!("s{k}");
            recs.push(record(&set, Int, Ungram, 10.0 + d));
            recs.push(record(&set, NonInt, Ungram, 10.0));
            recs.push(record(&set, Int, Gram, 5.0));
            recs.push(record(&set, NonInt, Gram, 5.0));
        }
        let e = interference_effects(&recs, "surprisal").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].grammaticality, Gram);
        assert_eq!(e[0].effect(), 0.0);
        assert_eq!(e[0].stats.ci95_low, e[0].stats.ci95_high);
        assert_eq!(e[1].effect(), -3.0);
    }

    #[test]
    fn unpaired_set() {
        let recs = vec![record("a", Int, Gram, 1.0)];
        assert!(matches!(
            interference_effects(&recs, "surprisal"),
            Err(Error::Unpaired(s)) if s == "a"
        ));
    }

    #[test]
    fn condition_json_shape() {
        let line = r#"{"item_id":"1","set_id":"s","interference":"non-int","grammaticality":"ungram","text":"The keys is","critical":[9,11],"target":[4,8],"distractor":[0,3]}"#;
        let item: StimulusItem = serde_json::from_str(line).unwrap();
        assert_eq!(item.condition.interference, NonInt);
        assert_eq!(item.condition.subject_number, SubjectNumber::Absent);
        assert_eq!(item.critical, 9..11);
        assert_eq!(item.condition.to_string(), "non-int/ungram");
    }
}

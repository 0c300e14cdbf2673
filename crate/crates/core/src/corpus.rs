//! Counting naturally occurring agreement errors by distractor type.
//!
//! Each input sentence is annotated with subject number, verb number and the
//! numbers of the nouns between them. A sentence is interfering when any of
//! those nouns matches the (wrong) verb number.

use std::ops::Add;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Number {
    Sg,
    Pl,
}

impl Number {
    pub fn label(self) -> &'static str {
        match self {
            Number::Sg => "sg",
            Number::Pl => "pl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedAgreementSentence {
    #[serde(default)]
    pub text: String,
    pub subject_number: Number,
    pub verb_number: Number,
    #[serde(default, alias = "distractor_numbers")]
    pub intervening_distractor_numbers: Vec<Number>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pattern {
    Interfering,
    NonInterfering,
    Excluded,
}

/// Depends only on the number annotations. Multiple distractors count as
/// interfering if any one of them matches the verb.
pub fn classify(s: &AnnotatedAgreementSentence) -> Result<Pattern> {
    if s.subject_number == s.verb_number {
        return Err(Error::NotUngrammatical(s.subject_number.label().into()));
    }
    let d = &s.intervening_distractor_numbers;
    Ok(if d.is_empty() {
        Pattern::Excluded
    } else if d.contains(&s.verb_number) {
        Pattern::Interfering
    } else {
        Pattern::NonInterfering
    })
}

/// Subject number by interference counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CountTable {
    pub sg_interfering: usize,
    pub sg_non_interfering: usize,
    pub pl_interfering: usize,
    pub pl_non_interfering: usize,
    pub excluded: usize,
    /// Counted sentences with more than one intervening distractor.
    pub multi_distractor: usize,
}

impl Add for CountTable {
    type Output = CountTable;

    fn add(self, o: CountTable) -> CountTable {
        CountTable {
            sg_interfering: self.sg_interfering + o.sg_interfering,
            sg_non_interfering: self.sg_non_interfering + o.sg_non_interfering,
            pl_interfering: self.pl_interfering + o.pl_interfering,
            pl_non_interfering: self.pl_non_interfering + o.pl_non_interfering,
            excluded: self.excluded + o.excluded,
            multi_distractor: self.multi_distractor + o.multi_distractor,
        }
    }
}

impl CountTable {
    pub fn get(&self, subject: Number, pattern: Pattern) -> usize {
        match (subject, pattern) {
            (Number::Sg, Pattern::Interfering) => self.sg_interfering,
            (Number::Sg, Pattern::NonInterfering) => self.sg_non_interfering,
            (Number::Pl, Pattern::Interfering) => self.pl_interfering,
            (Number::Pl, Pattern::NonInterfering) => self.pl_non_interfering,
            (_, Pattern::Excluded) => self.excluded,
        }
    }

    pub fn counted(&self) -> usize {
        self.sg_interfering + self.sg_non_interfering + self.pl_interfering + self.pl_non_interfering
    }

    /// Interfering over non-interfering for one subject number; `None` when
    /// there are no non-interfering sentences.
    pub fn ratio(&self, subject: Number) -> Option<f64> {
        let non = self.get(subject, Pattern::NonInterfering);
        (non > 0).then(|| self.get(subject, Pattern::Interfering) as f64 / non as f64)
    }

    fn single(s: &AnnotatedAgreementSentence) -> Result<CountTable> {
        let mut t = CountTable::default();
        let pattern = classify(s)?;
        let cell = match (s.subject_number, pattern) {
            (_, Pattern::Excluded) => &mut t.excluded,
            (Number::Sg, Pattern::Interfering) => &mut t.sg_interfering,
            (Number::Sg, Pattern::NonInterfering) => &mut t.sg_non_interfering,
            (Number::Pl, Pattern::Interfering) => &mut t.pl_interfering,
            (Number::Pl, Pattern::NonInterfering) => &mut t.pl_non_interfering,
        };
        *cell += 1;
        if pattern != Pattern::Excluded && s.intervening_distractor_numbers.len() > 1 {
            t.multi_distractor += 1;
        }
        Ok(t)
    }
}

pub fn count_patterns(sentences: &[AnnotatedAgreementSentence]) -> Result<CountTable> {
    sentences
        .par_iter()
        .map(CountTable::single)
        .try_reduce(CountTable::default, |a, b| Ok(a + b))
}

pub fn load_annotated(path: impl AsRef<Path>) -> Result<Vec<AnnotatedAgreementSentence>> {
    crate::util::read_jsonl(path)
}

/// Two rows (sg, pl) with both counts and their ratio.
pub fn write_counts_csv(path: impl AsRef<Path>, table: &CountTable) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["subject_number", "interfering", "non_interfering", "ratio"])?;
    for n in [Number::Sg, Number::Pl] {
        w.write_record([
            n.label().to_string(),
            table.get(n, Pattern::Interfering).to_string(),
            table.get(n, Pattern::NonInterfering).to_string(),
            table.ratio(n).map(|r| r.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

//! Minimal CoNLL-U reader: ID, FORM, UPOS, HEAD, DEPREL and the
//! `SpaceAfter=No` flag of MISC. Multiword-token ranges (`3-4`) and empty
//! nodes (`5.1`) are skipped.

use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConllWord {
    /// 1-based word id within the sentence.
    pub id: usize,
    pub form: String,
    pub upos: String,
    /// 0 for the root.
    pub head: usize,
    pub deprel: String,
    pub space_after: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConllSentence {
    pub words: Vec<ConllWord>,
}

impl ConllSentence {
    /// Surface text: forms joined by single spaces, honoring `SpaceAfter=No`.
    /// Returns the text and each word's byte range in it.
    pub fn surface(&self) -> (String, Vec<std::ops::Range<usize>>) {
        let mut text = String::new();
        let mut spans = Vec::with_capacity(self.words.len());
        for (i, w) in self.words.iter().enumerate() {
            let start = text.len();
            text.push_str(&w.form);
            spans.push(start..text.len());
            if w.space_after && i + 1 < self.words.len() {
                text.push(' ');
            }
        }
        (text, spans)
    }
}

pub fn read_conllu_file(path: impl AsRef<Path>) -> Result<Vec<ConllSentence>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_conllu(std::io::BufReader::new(file), &path.display().to_string())
}

pub fn parse_conllu(reader: impl BufRead, source: &str) -> Result<Vec<ConllSentence>> {
    let mut sentences = Vec::new();
    let mut current = ConllSentence::default();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !current.words.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let err = |reason: String| Error::Parse {
            path: source.to_string(),
            line: n + 1,
            reason,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(err(format!("expected 10 tab-separated columns, found {}", cols.len())));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0]
            .parse()
            .map_err(|_| err(format!("bad ID {:?}", cols[0])))?;
        if id != current.words.len() + 1 {
            return Err(err(format!(
                "word id {id} out of sequence (expected {})",
                current.words.len() + 1
            )));
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| err(format!("bad HEAD {:?}", cols[6])))?;
        let space_after = !cols[9].split('|').any(|f| f == "SpaceAfter=No");
        current.words.push(ConllWord {
            id,
            form: cols[1].to_string(),
            upos: cols[3].to_string(),
            head,
            deprel: cols[7].to_string(),
            space_after,
        });
    }
    if !current.words.is_empty() {
        sentences.push(current);
    }
    for (k, s) in sentences.iter().enumerate() {
        if let Some(w) = s.words.iter().find(|w| w.head > s.words.len()) {
            return Err(Error::Parse {
                path: source.to_string(),
                line: 0,
                reason: format!("sentence {}: word {} has HEAD {} beyond sentence", k + 1, w.id, w.head),
            });
        }
    }
    Ok(sentences)
}

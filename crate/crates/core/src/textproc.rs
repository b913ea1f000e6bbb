//! Tokenization and n-gram machinery shared by every metric.
//!
//! Tokenization rules: lowercase, split on Unicode whitespace, peel leading
//! and trailing ASCII punctuation off each chunk as single-character tokens.
//! Punctuation inside a chunk stays put, so `third-quarter` and `don't`
//! remain one token each.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};
use std::ops::Deref;

use crate::corpus::QuestionType;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TextError {
    #[error("n-gram order must be >= 1 (got {0})")]
    InvalidN(usize),
    #[error("leading n-gram order must be 1 or 2 (got {0})")]
    UnsupportedLeadingN(usize),
    #[error("question #{0} is empty")]
    EmptyQuestion(usize),
}

/// Lowercased token sequence. Tokens are non-empty and whitespace-free.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// Space-joined form; tokenizing it again yields the same sequence.
    pub fn joined(&self) -> String {
        self.0.join(" ")
    }
}

impl Deref for TokenSeq {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSeq {
    /// Builds a sequence from pre-split tokens, dropping empty ones.
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenSeq(
            iter.into_iter()
                .map(Into::into)
                .filter(|t: &String| !t.is_empty())
                .collect(),
        )
    }
}

pub fn tokenize(text: &str) -> TokenSeq {
    let lowered = text.to_lowercase();
    let mut out = Vec::new();
    for chunk in lowered.split_whitespace() {
        let start = chunk
            .char_indices()
            .find(|(_, c)| !c.is_ascii_punctuation())
            .map(|(i, _)| i)
            .unwrap_or(chunk.len());
        let end = chunk
            .char_indices()
            .rev()
            .find(|(_, c)| !c.is_ascii_punctuation())
            .map(|(i, c)| i + c.len_utf8())
            .unwrap_or(start);
        out.extend(chunk[..start].chars().map(String::from));
        if start < end {
            out.push(chunk[start..end].to_string());
        }
        out.extend(chunk[end.max(start)..].chars().map(String::from));
    }
    TokenSeq(out)
}

/// Multiset of contiguous n-token windows borrowed from a [`TokenSeq`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramBag<'a> {
    n: usize,
    windows: Vec<&'a [String]>,
}

impl<'a> NgramBag<'a> {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of windows, multiplicity included.
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &'a [String]> + '_ {
        self.windows.iter().copied()
    }

    pub fn counts(&self) -> HashMap<&'a [String], usize> {
        let mut m = HashMap::new();
        for w in &self.windows {
            *m.entry(*w).or_insert(0) += 1;
        }
        m
    }
}

pub fn ngrams(tokens: &[String], n: usize) -> Result<NgramBag<'_>, TextError> {
    if n < 1 {
        return Err(TextError::InvalidN(n));
    }
    Ok(NgramBag {
        n,
        windows: tokens.windows(n).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeadingNgramRow {
    pub qtype: QuestionType,
    pub ngram: String,
    pub count: usize,
}

/// Leading n-gram counts grouped by type. Rows appear in type order, then by
/// descending count, then lexicographically by n-gram.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LeadingNgramTable {
    pub n: usize,
    pub rows: Vec<LeadingNgramRow>,
}

impl LeadingNgramTable {
    pub fn for_type(&self, t: QuestionType) -> impl Iterator<Item = &LeadingNgramRow> {
        self.rows.iter().filter(move |r| r.qtype == t)
    }

    pub fn count(&self, t: QuestionType, ngram: &str) -> usize {
        self.for_type(t)
            .find(|r| r.ngram == ngram)
            .map_or(0, |r| r.count)
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "type\tngram\tcount")?;
        for r in &self.rows {
            writeln!(w, "{}\t{}\t{}", r.qtype, r.ngram, r.count)?;
        }
        Ok(())
    }

    /// Side-by-side layout: one column per type, `top` rows of `ngram (count)`.
    pub fn to_markdown(&self, top: usize) -> String {
        let types: Vec<QuestionType> = QuestionType::ALL
            .into_iter()
            .filter(|t| self.for_type(*t).next().is_some())
            .collect();
        let mut s = String::new();
        s.push('|');
        for t in &types {
            s.push_str(&format!(" {t} |"));
        }
        s.push_str("\n|");
        for _ in &types {
            s.push_str("---|");
        }
        s.push('\n');
        let cols: Vec<Vec<&LeadingNgramRow>> =
            types.iter().map(|t| self.for_type(*t).take(top).collect()).collect();
        let depth = cols.iter().map(Vec::len).max().unwrap_or(0);
        for i in 0..depth {
            s.push('|');
            for col in &cols {
                match col.get(i) {
                    Some(r) => s.push_str(&format!(" {} ({}) |", r.ngram, r.count)),
                    None => s.push_str("  |"),
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Counts the first `n` tokens of each question per type. A question shorter
/// than `n` tokens contributes its whole token sequence, so per-type counts
/// always sum to the number of questions of that type.
pub fn leading_ngram_table<S: AsRef<str>>(
    labeled_questions: &[(QuestionType, S)],
    n: usize,
) -> Result<LeadingNgramTable, TextError> {
    if !(1..=2).contains(&n) {
        return Err(TextError::UnsupportedLeadingN(n));
    }
    let mut counts: BTreeMap<(QuestionType, String), usize> = BTreeMap::new();
    for (i, (t, q)) in labeled_questions.iter().enumerate() {
        let toks = tokenize(q.as_ref());
        if toks.is_empty() {
            return Err(TextError::EmptyQuestion(i));
        }
        let lead = toks[..n.min(toks.len())].join(" ");
        *counts.entry((*t, lead)).or_insert(0) += 1;
    }
    let mut rows: Vec<LeadingNgramRow> = counts
        .into_iter()
        .map(|((qtype, ngram), count)| LeadingNgramRow { qtype, ngram, count })
        .collect();
    rows.sort_by(|a, b| {
        a.qtype
            .cmp(&b.qtype)
            .then(b.count.cmp(&a.count))
            .then_with(|| a.ngram.cmp(&b.ngram))
    });
    Ok(LeadingNgramTable { n, rows })
}

//! Automatic evaluation metrics.
//!
//! Reference-overlap scores (corpus BLEU, ROUGE-L, an exact-match METEOR),
//! copying scores (Train-n, Article-n, Span), type-distribution entropy,
//! perplexity from externally supplied log-probabilities, type
//! controllability, and mean/std aggregation over repeated runs.
//!
//! Ratios whose denominator is zero evaluate to 0 and log a warning so that
//! corpus means stay defined.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{self, Write};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::{Instance, QuestionType};
use crate::textproc::{ngrams, tokenize, TextError, TokenSeq};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("n-gram order must be >= 1 (got {0})")]
    InvalidN(usize),
    #[error("span has no tokens")]
    EmptySpan,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("log-probability sequence is empty")]
    EmptySequence,
    #[error("length mismatch: {0} requested vs {1} predicted")]
    LengthMismatch(usize, usize),
    #[error("requested type {0} is not generatable")]
    NotGeneratable(QuestionType),
    #[error("no values to aggregate")]
    EmptyList,
}

impl From<TextError> for MetricError {
    fn from(e: TextError) -> Self {
        match e {
            TextError::InvalidN(n) | TextError::UnsupportedLeadingN(n) => MetricError::InvalidN(n),
            TextError::EmptyQuestion(_) => MetricError::EmptySpan,
        }
    }
}

fn ratio(num: usize, den: usize, what: &str) -> f64 {
    if den == 0 {
        warn!("{what}: 0/0 ratio treated as 0");
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Corpus-level BLEU with one reference per candidate and no smoothing.
pub fn corpus_bleu(pairs: &[(TokenSeq, TokenSeq)], max_n: usize) -> Result<f64, MetricError> {
    if max_n < 1 {
        return Err(MetricError::InvalidN(max_n));
    }
    if pairs.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let mut matched = vec![0usize; max_n];
    let mut total = vec![0usize; max_n];
    let (mut cand_len, mut ref_len) = (0usize, 0usize);
    for (cand, reference) in pairs {
        cand_len += cand.len();
        ref_len += reference.len();
        for n in 1..=max_n {
            let c = ngrams(cand, n)?.counts();
            let r = ngrams(reference, n)?.counts();
            for (g, k) in c {
                matched[n - 1] += k.min(r.get(g).copied().unwrap_or(0));
                total[n - 1] += k;
            }
        }
    }
    let mut log_sum = 0.0;
    for n in 0..max_n {
        if matched[n] == 0 {
            return Ok(0.0);
        }
        log_sum += (matched[n] as f64 / total[n] as f64).ln();
    }
    let bp = if cand_len < ref_len {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    } else {
        1.0
    };
    Ok(bp * (log_sum / max_n as f64).exp())
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L F1 between a candidate and a reference.
pub fn rouge_l(candidate: &[String], reference: &[String]) -> f64 {
    let l = lcs_len(candidate, reference);
    if l == 0 {
        return 0.0;
    }
    let p = l as f64 / candidate.len() as f64;
    let r = l as f64 / reference.len() as f64;
    2.0 * p * r / (p + r)
}

/// Exact-match unigram alignment. Repeatedly links the longest common run
/// of still-unaligned tokens (earliest in the candidate, then earliest in
/// the reference) until no shared token remains. Returns (cand, ref) index
/// pairs sorted by candidate position.
fn align_exact(cand: &[String], reference: &[String]) -> Vec<(usize, usize)> {
    let mut used_c = vec![false; cand.len()];
    let mut used_r = vec![false; reference.len()];
    let mut links = Vec::new();
    loop {
        // (length, cand_end, ref_end); run ends are exclusive
        let mut best: Option<(usize, usize, usize)> = None;
        let mut prev = vec![0usize; reference.len() + 1];
        let mut cur = vec![0usize; reference.len() + 1];
        for i in 0..cand.len() {
            for j in 0..reference.len() {
                cur[j + 1] = if !used_c[i] && !used_r[j] && cand[i] == reference[j] {
                    prev[j] + 1
                } else {
                    0
                };
                let len = cur[j + 1];
                if len > 0 {
                    let start_c = i + 1 - len;
                    let start_r = j + 1 - len;
                    let better = match best {
                        None => true,
                        Some((bl, bc, br)) => {
                            len > bl
                                || (len == bl && (start_c, start_r) < (bc - bl, br - bl))
                        }
                    };
                    if better {
                        best = Some((len, i + 1, j + 1));
                    }
                }
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        let Some((len, ce, re)) = best else { break };
        for k in 0..len {
            used_c[ce - len + k] = true;
            used_r[re - len + k] = true;
            links.push((ce - len + k, re - len + k));
        }
    }
    links.sort_unstable();
    links
}

/// METEOR restricted to exact matches: `Fmean = 10PR/(R+9P)`, fragmentation
/// penalty `0.5 * (chunks/m)^3`.
pub fn meteor_lite(candidate: &[String], reference: &[String]) -> f64 {
    let links = align_exact(candidate, reference);
    let m = links.len();
    if m == 0 {
        return 0.0;
    }
    let mut chunks = 1;
    for w in links.windows(2) {
        if w[1].0 != w[0].0 + 1 || w[1].1 != w[0].1 + 1 {
            chunks += 1;
        }
    }
    let p = m as f64 / candidate.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let fmean = 10.0 * p * r / (r + 9.0 * p);
    let penalty = 0.5 * (chunks as f64 / m as f64).powi(3);
    fmean * (1.0 - penalty)
}

fn ngram_set<'a>(seqs: impl IntoIterator<Item = &'a [String]>, n: usize) -> HashSet<&'a [String]> {
    let mut set = HashSet::new();
    for s in seqs {
        set.extend(s.windows(n));
    }
    set
}

/// Share of generated n-gram occurrences that appear anywhere among the
/// training questions' n-grams.
pub fn train_n(
    generated: &[TokenSeq],
    train_questions: &[TokenSeq],
    n: usize,
) -> Result<f64, MetricError> {
    if n < 1 {
        return Err(MetricError::InvalidN(n));
    }
    let reference = ngram_set(train_questions.iter().map(|t| &t[..]), n);
    let (mut hit, mut total) = (0, 0);
    for g in generated {
        for w in g.windows(n) {
            total += 1;
            if reference.contains(w) {
                hit += 1;
            }
        }
    }
    Ok(ratio(hit, total, "train_n"))
}

/// Share of the question's n-grams found in its own article text. Context
/// and source n-grams are pooled, without windows crossing between them.
pub fn article_n(generated: &[String], instance: &Instance, n: usize) -> Result<f64, MetricError> {
    if n < 1 {
        return Err(MetricError::InvalidN(n));
    }
    let context = tokenize(&instance.context);
    let source = tokenize(&instance.source);
    let reference = ngram_set([&context[..], &source[..]], n);
    let total = generated.len().saturating_sub(n - 1);
    let hit = generated.windows(n).filter(|w| reference.contains(w)).count();
    Ok(ratio(hit, total, "article_n"))
}

/// Share of distinct span tokens that occur in the generated question.
pub fn span_overlap(generated: &[String], span_text: &str) -> Result<f64, MetricError> {
    let span = tokenize(span_text);
    let span_set: HashSet<&String> = span.iter().collect();
    if span_set.is_empty() {
        return Err(MetricError::EmptySpan);
    }
    let q: HashSet<&String> = generated.iter().collect();
    let present = span_set.iter().filter(|t| q.contains(*t)).count();
    Ok(present as f64 / span_set.len() as f64)
}

/// Seven-way distribution over [`QuestionType`], indexed by
/// [`QuestionType::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbDist([f64; 7]);

impl ProbDist {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(probabilities: [f64; 7]) -> Result<Self, MetricError> {
        for (i, p) in probabilities.iter().enumerate() {
            if !(0.0..=1.0).contains(p) {
                return Err(MetricError::InvalidDistribution(format!(
                    "entry {} = {p} outside [0,1]",
                    QuestionType::ALL[i]
                )));
            }
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(MetricError::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(ProbDist(probabilities))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self, MetricError> {
        let arr: [f64; 7] = values.try_into().map_err(|_| {
            MetricError::InvalidDistribution(format!("expected 7 entries, got {}", values.len()))
        })?;
        Self::new(arr)
    }

    pub fn one_hot(t: QuestionType) -> Self {
        let mut p = [0.0; 7];
        p[t.index()] = 1.0;
        ProbDist(p)
    }

    pub fn uniform() -> Self {
        ProbDist([1.0 / 7.0; 7])
    }

    pub fn get(&self, t: QuestionType) -> f64 {
        self.0[t.index()]
    }

    pub fn as_array(&self) -> &[f64; 7] {
        &self.0
    }

    /// Most probable type; ties go to the lexicographically first name.
    pub fn argmax(&self) -> QuestionType {
        let mut best = QuestionType::ALL[0];
        for t in QuestionType::ALL {
            if self.get(t) > self.get(best) {
                best = t;
            }
        }
        best
    }
}

impl<'de> Deserialize<'de> for ProbDist {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        ProbDist::from_slice(&v).map_err(serde::de::Error::custom)
    }
}

/// Shannon entropy in nats.
pub fn type_entropy(dist: &ProbDist) -> f64 {
    let s: f64 = dist.0.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum();
    // Adding zero turns the -0.0 of a one-hot distribution into 0.0.
    -s + 0.0
}

/// `exp(-mean(logprobs))` over natural-log token probabilities.
pub fn perplexity(token_logprobs: &[f64]) -> Result<f64, MetricError> {
    if token_logprobs.is_empty() {
        return Err(MetricError::EmptySequence);
    }
    let mean = token_logprobs.iter().sum::<f64>() / token_logprobs.len() as f64;
    Ok((-mean).exp())
}

/// Requested (rows, six generatable types) by predicted (columns, all seven
/// types). `Other` predictions land in the last column.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    counts: [[u64; 7]; 6],
}

impl ConfusionMatrix {
    pub fn get(&self, requested: QuestionType, predicted: QuestionType) -> u64 {
        self.counts[requested.index()][predicted.index()]
    }

    pub fn row_total(&self, requested: QuestionType) -> u64 {
        self.counts[requested.index()].iter().sum()
    }

    /// Diagonal over row sum; `None` for a type never requested.
    pub fn accuracy(&self, requested: QuestionType) -> Option<f64> {
        let total = self.row_total(requested);
        (total > 0).then(|| self.get(requested, requested) as f64 / total as f64)
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "requested")?;
        for p in QuestionType::ALL {
            write!(w, "\t{p}")?;
        }
        writeln!(w, "\taccuracy")?;
        for r in QuestionType::GENERATABLE {
            write!(w, "{r}")?;
            for p in QuestionType::ALL {
                write!(w, "\t{}", self.get(r, p))?;
            }
            match self.accuracy(r) {
                Some(a) => writeln!(w, "\t{:.2}", a * 100.0)?,
                None => writeln!(w, "\t-")?,
            }
        }
        Ok(())
    }
}

pub fn controllability(
    requested: &[QuestionType],
    predicted: &[QuestionType],
) -> Result<ConfusionMatrix, MetricError> {
    if requested.len() != predicted.len() {
        return Err(MetricError::LengthMismatch(requested.len(), predicted.len()));
    }
    let mut m = ConfusionMatrix::default();
    for (&r, &p) in requested.iter().zip(predicted) {
        if !r.is_generatable() {
            return Err(MetricError::NotGeneratable(r));
        }
        m.counts[r.index()][p.index()] += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single run.
    pub std: f64,
}

pub fn aggregate_runs(per_run_values: &[f64]) -> Result<RunSummary, MetricError> {
    if per_run_values.is_empty() {
        return Err(MetricError::EmptyList);
    }
    let n = per_run_values.len() as f64;
    let mean = per_run_values.iter().sum::<f64>() / n;
    let std = if per_run_values.len() < 2 {
        0.0
    } else {
        (per_run_values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok(RunSummary { mean, std })
}

/// One row of the automatic-metrics table. Overlap scores are percentages
/// and are absent for the reference (human) row; copying scores are
/// fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub model: String,
    pub count: usize,
    pub bleu: Option<[f64; 4]>,
    pub meteor: Option<f64>,
    pub rouge_l: Option<f64>,
    pub f_bert: Option<f64>,
    pub gpt2_ppl: f64,
    pub entropy: f64,
    pub train_2: f64,
    pub article_2: f64,
    pub span: f64,
}

pub const REPORT_COLUMNS: [&str; 13] = [
    "model", "bleu_1", "bleu_2", "bleu_3", "bleu_4", "meteor", "rouge_l", "f_bert", "gpt2_ppl",
    "entropy", "train_2", "article_2", "span",
];

impl MetricReport {
    /// Values in [`REPORT_COLUMNS`] order after the model name.
    pub fn values(&self) -> [Option<f64>; 12] {
        let b = self.bleu.map(|b| b.map(Some)).unwrap_or([None; 4]);
        [
            b[0],
            b[1],
            b[2],
            b[3],
            self.meteor,
            self.rouge_l,
            self.f_bert,
            Some(self.gpt2_ppl),
            Some(self.entropy),
            Some(self.train_2),
            Some(self.article_2),
            Some(self.span),
        ]
    }
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

pub fn write_reports_tsv<W: Write>(reports: &[MetricReport], mut w: W) -> io::Result<()> {
    writeln!(w, "{}\tcount", REPORT_COLUMNS.join("\t"))?;
    for r in reports {
        write!(w, "{}", r.model)?;
        for v in r.values() {
            write!(w, "\t{}", fmt_opt(v, 6))?;
        }
        writeln!(w, "\t{}", r.count)?;
    }
    Ok(())
}

/// Aligned text table in the published column order (BLEU shown is BLEU-4).
pub fn format_reports_table(reports: &[MetricReport]) -> String {
    let header = [
        "Model", "%BLEU", "%METEOR", "%ROUGE-L", "%F_BERT", "GPT2 ppl", "Entropy", "Train-2",
        "Article-2", "Span",
    ];
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.model.clone(),
                fmt_opt(r.bleu.map(|b| b[3]), 1),
                fmt_opt(r.meteor, 1),
                fmt_opt(r.rouge_l, 1),
                fmt_opt(r.f_bert, 1),
                format!("{:.0}", r.gpt2_ppl),
                format!("{:.3}", r.entropy),
                format!("{:.3}", r.train_2),
                format!("{:.3}", r.article_2),
                format!("{:.3}", r.span),
            ]
        })
        .collect();
    align(&header, &rows)
}

pub(crate) fn align(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(header.to_vec(), &mut out);
    for row in rows {
        line(row.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

/// Inputs for one question when building a [`MetricReport`].
#[derive(Debug, Clone)]
pub struct ScoredQuestion<'a> {
    pub instance: &'a Instance,
    pub question: &'a str,
    pub type_dist: ProbDist,
    pub token_logprobs: &'a [f64],
}

/// Builds a report row. When `with_overlap` is false (reference questions
/// scored against themselves), the BLEU/METEOR/ROUGE-L columns are left
/// empty.
pub fn build_report(
    model: &str,
    questions: &[ScoredQuestion<'_>],
    train_questions: &[TokenSeq],
    with_overlap: bool,
    f_bert: Option<f64>,
) -> Result<MetricReport, MetricError> {
    if questions.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let n = questions.len() as f64;
    let generated: Vec<TokenSeq> = questions.iter().map(|q| tokenize(q.question)).collect();
    let (mut bleu, mut meteor, mut rouge) = (None, None, None);
    if with_overlap {
        let pairs: Vec<(TokenSeq, TokenSeq)> = generated
            .iter()
            .zip(questions)
            .map(|(g, q)| (g.clone(), tokenize(&q.instance.question)))
            .collect();
        let mut b = [0.0; 4];
        for (i, slot) in b.iter_mut().enumerate() {
            *slot = corpus_bleu(&pairs, i + 1)? * 100.0;
        }
        bleu = Some(b);
        meteor = Some(pairs.iter().map(|(c, r)| meteor_lite(c, r)).sum::<f64>() / n * 100.0);
        rouge = Some(pairs.iter().map(|(c, r)| rouge_l(c, r)).sum::<f64>() / n * 100.0);
    }
    let mut ppl = 0.0;
    let mut entropy = 0.0;
    let mut article = 0.0;
    let mut span = 0.0;
    for (g, q) in generated.iter().zip(questions) {
        ppl += perplexity(q.token_logprobs)?;
        entropy += type_entropy(&q.type_dist);
        article += article_n(g, q.instance, 2)?;
        span += span_overlap(g, q.instance.span())?;
    }
    Ok(MetricReport {
        model: model.to_string(),
        count: questions.len(),
        bleu,
        meteor,
        rouge_l: rouge,
        f_bert,
        gpt2_ppl: ppl / n,
        entropy: entropy / n,
        train_2: train_n(&generated, train_questions, 2)?,
        article_2: article / n,
        span: span / n,
    })
}

/// Column-wise mean and std over several runs of the same model.
pub fn summarize_reports(runs: &[MetricReport]) -> Result<Vec<(&'static str, Option<RunSummary>)>, MetricError> {
    if runs.is_empty() {
        return Err(MetricError::EmptyList);
    }
    let mut out = Vec::new();
    for (c, col) in REPORT_COLUMNS[1..].iter().enumerate() {
        let vals: Vec<f64> = runs.iter().filter_map(|r| r.values()[c]).collect();
        let summary = if vals.len() == runs.len() {
            Some(aggregate_runs(&vals)?)
        } else {
            None
        };
        out.push((*col, summary));
    }
    Ok(out)
}

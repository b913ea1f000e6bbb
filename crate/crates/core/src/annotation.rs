//! Annotation analytics: type-label resolution, Cohen's kappa, ranking
//! precision@k between annotators, and human-judgment aggregation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::Hash;
use std::io::{self, Write};
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::QuestionType;
use crate::ranking::RankingAnnotation;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnotationError {
    #[error("label lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no items to compare")]
    EmptyInput,
    #[error("annotations cover different instances ({0} vs {1})")]
    InstanceMismatch(String, String),
    #[error("k must be >= 1")]
    InvalidK,
    #[error("malformed response {0:?} (expected yes, somewhat or no)")]
    MalformedResponse(String),
    #[error("record {0}: {1}")]
    InvalidRecord(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeLabel {
    pub annotator_id: String,
    #[serde(rename = "type")]
    pub qtype: QuestionType,
}

/// Type labels for one question from one or more annotators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeLabelRecord {
    pub question_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    pub labels: Vec<TypeLabel>,
}

impl TypeLabelRecord {
    pub fn validate(&self) -> Result<(), AnnotationError> {
        if self.labels.is_empty() {
            return Err(AnnotationError::InvalidRecord(self.question_id.clone(), "no labels".into()));
        }
        let ids: BTreeSet<&str> = self.labels.iter().map(|l| l.annotator_id.as_str()).collect();
        if ids.len() != self.labels.len() {
            return Err(AnnotationError::InvalidRecord(
                self.question_id.clone(),
                "duplicate annotator".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MajorityOutcome {
    Resolved(QuestionType),
    /// No strict majority; needs adjudication.
    Unresolved,
}

/// Strict-majority label.
pub fn majority_vote(record: &TypeLabelRecord) -> MajorityOutcome {
    let mut counts: BTreeMap<QuestionType, usize> = BTreeMap::new();
    for l in &record.labels {
        *counts.entry(l.qtype).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .find(|(_, c)| 2 * c > record.labels.len())
        .map_or(MajorityOutcome::Unresolved, |(t, _)| MajorityOutcome::Resolved(t))
}

/// Cohen's kappa for two aligned labelings. When both labelings are the same
/// constant (chance agreement 1) the result is 1 and a warning is logged.
pub fn cohen_kappa<T: Eq + Hash>(labels_a: &[T], labels_b: &[T]) -> Result<f64, AnnotationError> {
    if labels_a.len() != labels_b.len() {
        return Err(AnnotationError::LengthMismatch(labels_a.len(), labels_b.len()));
    }
    if labels_a.is_empty() {
        return Err(AnnotationError::EmptyInput);
    }
    let n = labels_a.len() as f64;
    let agree = labels_a.iter().zip(labels_b).filter(|(a, b)| a == b).count() as f64;
    let p_o = agree / n;
    let mut ma: HashMap<&T, usize> = HashMap::new();
    let mut mb: HashMap<&T, usize> = HashMap::new();
    for a in labels_a {
        *ma.entry(a).or_insert(0) += 1;
    }
    for b in labels_b {
        *mb.entry(b).or_insert(0) += 1;
    }
    let p_e: f64 = ma
        .iter()
        .map(|(k, ca)| *ca as f64 * mb.get(k).copied().unwrap_or(0) as f64)
        .sum::<f64>()
        / (n * n);
    if (1.0 - p_e).abs() < f64::EPSILON {
        warn!("cohen_kappa: both labelings are constant and identical; returning 1");
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaRow {
    pub annotator_a: String,
    pub annotator_b: String,
    pub items: usize,
    pub kappa: f64,
}

/// Kappa for every annotator pair over the questions both labeled.
pub fn pairwise_kappa(records: &[TypeLabelRecord]) -> Vec<KappaRow> {
    let mut by_annotator: BTreeMap<&str, HashMap<&str, QuestionType>> = BTreeMap::new();
    for r in records {
        for l in &r.labels {
            by_annotator
                .entry(&l.annotator_id)
                .or_default()
                .insert(&r.question_id, l.qtype);
        }
    }
    let annotators: Vec<&str> = by_annotator.keys().copied().collect();
    let mut rows = Vec::new();
    for (i, a) in annotators.iter().enumerate() {
        for b in &annotators[i + 1..] {
            let (la, lb) = (&by_annotator[a], &by_annotator[b]);
            let mut shared: Vec<&str> = la.keys().filter(|q| lb.contains_key(*q)).copied().collect();
            shared.sort_unstable();
            let xa: Vec<QuestionType> = shared.iter().map(|q| la[q]).collect();
            let xb: Vec<QuestionType> = shared.iter().map(|q| lb[q]).collect();
            if let Ok(kappa) = cohen_kappa(&xa, &xb) {
                rows.push(KappaRow {
                    annotator_a: a.to_string(),
                    annotator_b: b.to_string(),
                    items: shared.len(),
                    kappa,
                });
            }
        }
    }
    rows
}

/// 1 if any of `a`'s top-`k` types is in `b`'s top three, else 0.
pub fn precision_at_k(a: &RankingAnnotation, b: &RankingAnnotation, k: u32) -> Result<u8, AnnotationError> {
    if k < 1 {
        return Err(AnnotationError::InvalidK);
    }
    if a.instance_id != b.instance_id {
        return Err(AnnotationError::InstanceMismatch(a.instance_id.clone(), b.instance_id.clone()));
    }
    let b_top = b.top(3);
    Ok(u8::from(a.top(k).iter().any(|t| b_top.contains(t))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionalPrecision {
    pub from: String,
    pub to: String,
    pub instances: usize,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrecisionReport {
    pub k: u32,
    pub directions: Vec<DirectionalPrecision>,
    /// Mean of the directional values.
    pub mean: f64,
}

/// Corpus precision@k for each ordered annotator pair, averaged over the
/// instances both annotated.
pub fn precision_at_k_report(annotations: &[RankingAnnotation], k: u32) -> Result<PrecisionReport, AnnotationError> {
    if k < 1 {
        return Err(AnnotationError::InvalidK);
    }
    let mut by_annotator: BTreeMap<&str, BTreeMap<&str, &RankingAnnotation>> = BTreeMap::new();
    for a in annotations {
        by_annotator.entry(&a.annotator_id).or_default().insert(&a.instance_id, a);
    }
    let mut directions = Vec::new();
    for (from, fa) in &by_annotator {
        for (to, ta) in &by_annotator {
            if from == to {
                continue;
            }
            let mut hits = 0usize;
            let mut n = 0usize;
            for (inst, a) in fa {
                if let Some(b) = ta.get(inst) {
                    hits += precision_at_k(a, b, k)? as usize;
                    n += 1;
                }
            }
            if n > 0 {
                directions.push(DirectionalPrecision {
                    from: from.to_string(),
                    to: to.to_string(),
                    instances: n,
                    precision: hits as f64 / n as f64,
                });
            }
        }
    }
    if directions.is_empty() {
        return Err(AnnotationError::EmptyInput);
    }
    let mean = directions.iter().map(|d| d.precision).sum::<f64>() / directions.len() as f64;
    Ok(PrecisionReport { k, directions, mean })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aspect {
    Syntax,
    Semantics,
    Relevancy,
    Inquisitiveness,
}

impl Aspect {
    pub const ALL: [Aspect; 4] = [Aspect::Syntax, Aspect::Semantics, Aspect::Relevancy, Aspect::Inquisitiveness];

    pub fn title(self) -> &'static str {
        match self {
            Aspect::Syntax => "Syntax",
            Aspect::Semantics => "Semantics",
            Aspect::Relevancy => "Relevancy",
            Aspect::Inquisitiveness => "Inquisitive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Response {
    Yes,
    Somewhat,
    No,
}

impl Response {
    pub fn score(self) -> u8 {
        match self {
            Response::Yes => 5,
            Response::Somewhat => 3,
            Response::No => 1,
        }
    }
}

impl FromStr for Response {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "yes" => Ok(Response::Yes),
            "somewhat" => Ok(Response::Somewhat),
            "no" => Ok(Response::No),
            _ => Err(AnnotationError::MalformedResponse(s.to_string())),
        }
    }
}

impl<'de> Deserialize<'de> for Response {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Response::Yes => "yes",
            Response::Somewhat => "somewhat",
            Response::No => "no",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanJudgment {
    pub instance_id: String,
    pub model: String,
    pub aspect: Aspect,
    pub response: Response,
    pub annotator_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LowRated {
    pub instance_id: String,
    pub model: String,
    pub aspect: Aspect,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct HumanEvalTable {
    /// model -> aspect -> mean score over all judgments.
    pub means: BTreeMap<String, BTreeMap<Aspect, f64>>,
    /// Questions whose majority of annotators answered "no" (score 1).
    pub low_rated: Vec<LowRated>,
}

impl HumanEvalTable {
    pub fn mean(&self, model: &str, aspect: Aspect) -> Option<f64> {
        self.means.get(model)?.get(&aspect).copied()
    }

    pub fn low_rated_count(&self, model: &str, aspect: Aspect) -> usize {
        self.low_rated
            .iter()
            .filter(|l| l.model == model && l.aspect == aspect)
            .count()
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "model")?;
        for a in Aspect::ALL {
            write!(w, "\t{}", a.title())?;
        }
        writeln!(w)?;
        for (model, row) in &self.means {
            write!(w, "{model}")?;
            for a in Aspect::ALL {
                match row.get(&a) {
                    Some(v) => write!(w, "\t{v:.2}")?,
                    None => write!(w, "\t-")?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Maps yes/somewhat/no to 5/3/1 and averages per (model, aspect) over all
/// judgments.
pub fn aggregate_human_eval(judgments: &[HumanJudgment]) -> HumanEvalTable {
    let mut sums: BTreeMap<(&str, Aspect), (u64, u64)> = BTreeMap::new();
    let mut groups: BTreeMap<(&str, &str, Aspect), (usize, usize)> = BTreeMap::new();
    for j in judgments {
        let e = sums.entry((&j.model, j.aspect)).or_default();
        e.0 += j.response.score() as u64;
        e.1 += 1;
        let g = groups.entry((&j.instance_id, &j.model, j.aspect)).or_default();
        g.0 += usize::from(j.response == Response::No);
        g.1 += 1;
    }
    let mut table = HumanEvalTable::default();
    for ((model, aspect), (sum, n)) in sums {
        table
            .means
            .entry(model.to_string())
            .or_default()
            .insert(aspect, sum as f64 / n as f64);
    }
    for ((inst, model, aspect), (no, n)) in groups {
        if 2 * no > n {
            table.low_rated.push(LowRated {
                instance_id: inst.to_string(),
                model: model.to_string(),
                aspect,
            });
        }
    }
    table
}

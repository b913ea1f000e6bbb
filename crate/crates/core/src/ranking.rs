//! Question selection among the six typed generations of an instance.
//!
//! * Pairwise-ranker training data built from partial expert rankings.
//! * Max-vote selection over all 30 ordered pairs (`type_r`).
//! * Inquisitiveness-classifier argmax (`type_s`).
//! * Oracle type read off the reference question (`type_o`).
//!
//! Oracles are plain closures so that the in-process stubs and the HTTP
//! client in [`crate::modelio`] plug in the same way.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::error::Error as StdError;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{build_classifier_input, CorpusError, Instance, QuestionType, SEP};
use crate::metrics::ProbDist;

pub type OracleError = Box<dyn StdError + Send + Sync>;

#[derive(Debug, thiserror::Error)]
pub enum RankingError {
    #[error("instance {instance_id}: no {qtype} question available")]
    MissingQuestion {
        instance_id: String,
        qtype: QuestionType,
    },
    #[error("instance {instance_id}: no source sentence available")]
    MissingSource { instance_id: String },
    #[error("duplicate {0} question")]
    DuplicateQuestion(QuestionType),
    #[error("{0} has no generated question")]
    MissingType(QuestionType),
    #[error("{0} is not a generatable type")]
    NotGeneratable(QuestionType),
    #[error("invalid ranks for instance {instance_id} (annotator {annotator_id}): {reason}")]
    InvalidRanks {
        instance_id: String,
        annotator_id: String,
        reason: String,
    },
    #[error("oracle returned {0}, outside [0,1]")]
    OutOfRange(f64),
    #[error("oracle failure: {0}")]
    OracleFailure(#[source] OracleError),
    #[error("requested {requested} training examples but only {available} exist")]
    CountTooLarge { requested: usize, available: usize },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// One annotator's partial ranking of an instance's six typed questions.
/// Ranked types form the relevant set; the rest are non-relevant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingAnnotation {
    pub instance_id: String,
    pub annotator_id: String,
    pub ranks: BTreeMap<QuestionType, u32>,
}

impl RankingAnnotation {
    pub const MIN_RANKED: usize = 3;
    pub const MAX_RANKED: usize = 5;

    /// Checks 3..=5 ranked generatable types with ranks exactly 1..=n.
    pub fn validate(&self) -> Result<(), RankingError> {
        let invalid = |reason: String| RankingError::InvalidRanks {
            instance_id: self.instance_id.clone(),
            annotator_id: self.annotator_id.clone(),
            reason,
        };
        let n = self.ranks.len();
        if !(Self::MIN_RANKED..=Self::MAX_RANKED).contains(&n) {
            return Err(invalid(format!("{n} ranked questions, expected 3 to 5")));
        }
        if self.ranks.contains_key(&QuestionType::Other) {
            return Err(invalid("Other cannot be ranked".into()));
        }
        let mut rs: Vec<u32> = self.ranks.values().copied().collect();
        rs.sort_unstable();
        if rs.iter().enumerate().any(|(i, &r)| r as usize != i + 1) {
            return Err(invalid(format!("ranks {rs:?} are not 1..={n}")));
        }
        Ok(())
    }

    /// Ranked types, best first.
    pub fn relevant(&self) -> Vec<(QuestionType, u32)> {
        let mut v: Vec<_> = self.ranks.iter().map(|(t, r)| (*t, *r)).collect();
        v.sort_by_key(|(_, r)| *r);
        v
    }

    /// Unranked generatable types, in type order.
    pub fn non_relevant(&self) -> Vec<QuestionType> {
        QuestionType::GENERATABLE
            .into_iter()
            .filter(|t| !self.ranks.contains_key(t))
            .collect()
    }

    /// Types ranked within the top `k`.
    pub fn top(&self, k: u32) -> HashSet<QuestionType> {
        self.ranks
            .iter()
            .filter(|(_, r)| **r <= k)
            .map(|(t, _)| *t)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairLabel {
    Positive,
    Negative,
}

/// Ordered ranker example: positive iff `first` is ranked strictly better.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairExample {
    pub source: String,
    pub first: String,
    pub second: String,
    pub label: PairLabel,
}

impl PairExample {
    /// `source [SEP] first [SEP] second`.
    pub fn input_text(&self) -> String {
        preference_input(&self.source, &self.first, &self.second)
    }

    fn twin_key(&self) -> (&str, &str, &str) {
        let (a, b) = if self.first <= self.second {
            (&self.first, &self.second)
        } else {
            (&self.second, &self.first)
        };
        (&self.source, a, b)
    }
}

pub fn preference_input(source: &str, first: &str, second: &str) -> String {
    [source, first, second].join(SEP)
}

/// Unordered pairs (better, worse) selected from one annotation:
/// every relevant/non-relevant combination, then relevant pairs at least two
/// ranks apart. The second part walks `k` from `j + 2`, so adjacent ranks
/// are never paired.
pub fn select_pairs(annotation: &RankingAnnotation) -> Vec<(QuestionType, QuestionType)> {
    let rel = annotation.relevant();
    let nrel = annotation.non_relevant();
    let mut pairs = Vec::new();
    for (q_rel, _) in &rel {
        for q_nrel in &nrel {
            pairs.push((*q_rel, *q_nrel));
        }
    }
    for j in 0..rel.len() {
        for k in (j + 2)..rel.len() {
            if rel[k].1 - rel[j].1 >= 2 {
                pairs.push((rel[j].0, rel[k].0));
            }
        }
    }
    pairs
}

/// Expands every annotation into ordered ranker examples, two per selected
/// pair (one per presentation order, opposite labels).
pub fn build_pair_dataset(
    annotations: &[RankingAnnotation],
    questions: &HashMap<(String, QuestionType), String>,
    sources: &HashMap<String, String>,
) -> Result<Vec<PairExample>, RankingError> {
    let mut out = Vec::new();
    for ann in annotations {
        ann.validate()?;
        let source = sources
            .get(&ann.instance_id)
            .ok_or_else(|| RankingError::MissingSource {
                instance_id: ann.instance_id.clone(),
            })?;
        let text = |t: QuestionType| {
            questions
                .get(&(ann.instance_id.clone(), t))
                .ok_or_else(|| RankingError::MissingQuestion {
                    instance_id: ann.instance_id.clone(),
                    qtype: t,
                })
        };
        for t in QuestionType::GENERATABLE {
            text(t)?;
        }
        for (better, worse) in select_pairs(ann) {
            let (b, w) = (text(better)?, text(worse)?);
            out.push(PairExample {
                source: source.clone(),
                first: b.clone(),
                second: w.clone(),
                label: PairLabel::Positive,
            });
            out.push(PairExample {
                source: source.clone(),
                first: w.clone(),
                second: b.clone(),
                label: PairLabel::Negative,
            });
        }
    }
    Ok(out)
}

/// Seeded train/validation split that keeps both presentation orders of a
/// pair on the same side. `train` receives exactly `train_count` examples;
/// a twin group is only broken when no combination of whole groups reaches
/// the count, and that is logged.
pub fn split_pairs(
    examples: &[PairExample],
    train_count: usize,
    seed: u64,
) -> Result<(Vec<PairExample>, Vec<PairExample>), RankingError> {
    if train_count > examples.len() {
        return Err(RankingError::CountTooLarge {
            requested: train_count,
            available: examples.len(),
        });
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index: HashMap<(&str, &str, &str), usize> = HashMap::new();
    for (i, ex) in examples.iter().enumerate() {
        let g = *index.entry(ex.twin_key()).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups.shuffle(&mut rng);

    let mut in_train = vec![false; examples.len()];
    let mut remaining = train_count;
    let mut leftovers = Vec::new();
    for g in &groups {
        if g.len() <= remaining {
            for &i in g {
                in_train[i] = true;
            }
            remaining -= g.len();
        } else {
            leftovers.push(g);
        }
    }
    if remaining > 0 {
        let g = leftovers
            .into_iter()
            .next()
            .expect("remaining > 0 implies an unplaced group");
        warn!(
            "split_pairs: splitting one twin group of {} to reach exactly {train_count} training examples",
            g.len()
        );
        for &i in &g[..remaining] {
            in_train[i] = true;
        }
    }
    let (mut train, mut dev) = (Vec::new(), Vec::new());
    for (ex, t) in examples.iter().zip(in_train) {
        if t {
            train.push(ex.clone());
        } else {
            dev.push(ex.clone());
        }
    }
    Ok((train, dev))
}

/// The six typed generations of one instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedQuestions(BTreeMap<QuestionType, String>);

impl TypedQuestions {
    /// Requires exactly one question for each generatable type; presentation
    /// order is irrelevant.
    pub fn new<I, S>(items: I) -> Result<Self, RankingError>
    where
        I: IntoIterator<Item = (QuestionType, S)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (t, q) in items {
            if !t.is_generatable() {
                return Err(RankingError::NotGeneratable(t));
            }
            if map.insert(t, q.into()).is_some() {
                return Err(RankingError::DuplicateQuestion(t));
            }
        }
        for t in QuestionType::GENERATABLE {
            if !map.contains_key(&t) {
                return Err(RankingError::MissingType(t));
            }
        }
        Ok(TypedQuestions(map))
    }

    pub fn get(&self, t: QuestionType) -> &str {
        &self.0[&t]
    }

    pub fn iter(&self) -> impl Iterator<Item = (QuestionType, &str)> {
        self.0.iter().map(|(t, q)| (*t, q.as_str()))
    }
}

/// Result of the 30 ordered comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteTally {
    pub wins: BTreeMap<QuestionType, u32>,
    /// Per type: summed probability that the type's question is the better
    /// one, over the 10 ordered examples it appears in.
    pub score: BTreeMap<QuestionType, f64>,
}

impl VoteTally {
    pub fn total(&self) -> u32 {
        self.wins.values().sum()
    }
}

fn check_prob(p: f64) -> Result<f64, RankingError> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(RankingError::OutOfRange(p))
    }
}

/// Max-vote selection. Every ordered pair (a, b) of distinct types is scored
/// by `preference(source, q_a, q_b)`; a probability of at least 0.5 counts as
/// a vote for the first question. The winner has the most votes, then the
/// highest summed preference score, then the lexicographically first name.
pub fn select_type_r<F, E>(
    source: &str,
    questions: &TypedQuestions,
    mut preference: F,
) -> Result<(QuestionType, VoteTally), RankingError>
where
    F: FnMut(&str, &str, &str) -> Result<f64, E>,
    E: Into<OracleError>,
{
    let mut wins: BTreeMap<QuestionType, u32> = QuestionType::GENERATABLE.iter().map(|t| (*t, 0)).collect();
    let mut score: BTreeMap<QuestionType, f64> =
        QuestionType::GENERATABLE.iter().map(|t| (*t, 0.0)).collect();
    for a in QuestionType::GENERATABLE {
        for b in QuestionType::GENERATABLE {
            if a == b {
                continue;
            }
            let p = preference(source, questions.get(a), questions.get(b))
                .map_err(|e| RankingError::OracleFailure(e.into()))?;
            let p = check_prob(p)?;
            let winner = if p >= 0.5 { a } else { b };
            *wins.get_mut(&winner).unwrap() += 1;
            *score.get_mut(&a).unwrap() += p;
            *score.get_mut(&b).unwrap() += 1.0 - p;
        }
    }
    let best = QuestionType::GENERATABLE
        .into_iter()
        .reduce(|best, t| {
            let key = |x: QuestionType| (wins[&x], score[&x]);
            let (bw, bs) = key(best);
            let (tw, ts) = key(t);
            if tw > bw || (tw == bw && ts > bs) {
                t
            } else {
                best
            }
        })
        .expect("six types");
    Ok((best, VoteTally { wins, score }))
}

/// Inquisitiveness argmax; ties go to the lexicographically first type.
pub fn select_type_s<F, E>(questions: &TypedQuestions, mut inquisitiveness: F) -> Result<QuestionType, RankingError>
where
    F: FnMut(&str) -> Result<f64, E>,
    E: Into<OracleError>,
{
    let mut best: Option<(QuestionType, f64)> = None;
    for (t, q) in questions.iter() {
        let p = check_prob(inquisitiveness(q).map_err(|e| RankingError::OracleFailure(e.into()))?)?;
        if best.is_none_or(|(_, bp)| p > bp) {
            best = Some((t, p));
        }
    }
    Ok(best.expect("six types").0)
}

/// Type used as the control code for the oracle strategy.
pub const TYPE_O_FALLBACK: QuestionType = QuestionType::Explanation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeOSelection {
    pub chosen: QuestionType,
    pub predicted: QuestionType,
}

/// Classifies the reference question in its instance context and uses the
/// predicted type; `Other` falls back to [`TYPE_O_FALLBACK`].
pub fn select_type_o<F, E>(
    instance: &Instance,
    reference_question: &str,
    mut type_classifier: F,
) -> Result<TypeOSelection, RankingError>
where
    F: FnMut(&str) -> Result<ProbDist, E>,
    E: Into<OracleError>,
{
    let input = build_classifier_input(instance, reference_question)?;
    let dist = type_classifier(&input).map_err(|e| RankingError::OracleFailure(e.into()))?;
    let predicted = dist.argmax();
    let chosen = if predicted.is_generatable() {
        predicted
    } else {
        warn!(
            "instance {}: reference classified as Other, using {TYPE_O_FALLBACK}",
            instance.instance_id
        );
        TYPE_O_FALLBACK
    };
    Ok(TypeOSelection { chosen, predicted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;
    use QuestionType::*;

    fn ann(ranks: &[(QuestionType, u32)]) -> RankingAnnotation {
        RankingAnnotation {
            instance_id: "i1".into(),
            annotator_id: "A".into(),
            ranks: ranks.iter().copied().collect(),
        }
    }

    fn fixtures() -> (HashMap<(String, QuestionType), String>, HashMap<String, String>) {
        let q = QuestionType::GENERATABLE
            .iter()
            .map(|t| (("i1".to_string(), *t), format!("{t} question?")))
            .collect();
        let s = [("i1".to_string(), "The source.".to_string())].into_iter().collect();
        (q, s)
    }

    #[test]
    fn three_ranked_fixture() {
        let a = ann(&[(Explanation, 1), (Background, 2), (Definition, 3)]);
        let pairs = select_pairs(&a);
        assert_eq!(pairs.len(), 10);
        assert_eq!(pairs[9], (Explanation, Definition));
        let (q, s) = fixtures();
        let ex = build_pair_dataset(&[a], &q, &s).unwrap();
        assert_eq!(ex.len(), 20);
        assert_eq!(ex.iter().filter(|e| e.label == PairLabel::Positive).count(), 10);
        assert_eq!(
            ex[0].input_text(),
            "The source. [SEP] Explanation question? [SEP] Elaboration question?"
        );
    }

    #[test]
    fn five_ranked_fixture() {
        let a = ann(&[(Explanation, 1), (Background, 2), (Definition, 3), (Elaboration, 4), (Instantiation, 5)]);
        let pairs = select_pairs(&a);
        let rel_pairs: Vec<_> = pairs[5..].to_vec();
        assert_eq!(
            rel_pairs,
            vec![
                (Explanation, Definition),
                (Explanation, Elaboration),
                (Explanation, Instantiation),
                (Background, Elaboration),
                (Background, Instantiation),
                (Definition, Instantiation),
            ]
        );
        let (q, s) = fixtures();
        assert_eq!(build_pair_dataset(&[a], &q, &s).unwrap().len(), 22);
    }

    #[test]
    fn pair_dataset_errors() {
        let (mut q, s) = fixtures();
        let bad = ann(&[(Explanation, 1), (Background, 2)]);
        assert!(matches!(build_pair_dataset(&[bad], &q, &s), Err(RankingError::InvalidRanks { .. })));
        let gap = ann(&[(Explanation, 1), (Background, 2), (Definition, 4)]);
        assert!(gap.validate().is_err());
        q.remove(&("i1".to_string(), ForwardLooking));
        let good = ann(&[(Explanation, 1), (Background, 2), (Definition, 3)]);
        assert!(matches!(
            build_pair_dataset(&[good], &q, &s),
            Err(RankingError::MissingQuestion { qtype: ForwardLooking, .. })
        ));
    }

    fn synthetic_examples(pairs: usize) -> Vec<PairExample> {
        let mut v = Vec::new();
        for i in 0..pairs {
            for (f, s, l) in [("a", "b", PairLabel::Positive), ("b", "a", PairLabel::Negative)] {
                v.push(PairExample {
                    source: format!("src {i}"),
                    first: f.into(),
                    second: s.into(),
                    label: l,
                });
            }
        }
        v
    }

    #[test]
    fn split_keeps_twins_together() {
        let ex = synthetic_examples(50);
        let (train, dev) = split_pairs(&ex, 60, 3).unwrap();
        assert_eq!((train.len(), dev.len()), (60, 40));
        let train_sources: HashSet<_> = train.iter().map(|e| &e.source).collect();
        assert!(dev.iter().all(|e| !train_sources.contains(&e.source)));
        assert_eq!(split_pairs(&ex, 60, 3).unwrap().0, train);

        let (all, none) = split_pairs(&ex, 100, 3).unwrap();
        assert_eq!((all.len(), none.len()), (100, 0));
        let (none, all) = split_pairs(&ex, 0, 3).unwrap();
        assert_eq!((none.len(), all.len()), (0, 100));
        assert!(matches!(split_pairs(&ex, 101, 3), Err(RankingError::CountTooLarge { .. })));
    }

    #[test]
    fn split_odd_count_is_exact() {
        let mut ex = synthetic_examples(1433);
        ex.push(PairExample {
            source: "lone".into(),
            first: "x".into(),
            second: "y".into(),
            label: PairLabel::Positive,
        });
        assert_eq!(ex.len(), 2867);
        let (train, dev) = split_pairs(&ex, 2581, 11).unwrap();
        assert_eq!((train.len(), dev.len()), (2581, 286));
    }

    fn typed() -> TypedQuestions {
        TypedQuestions::new(QuestionType::GENERATABLE.iter().map(|t| (*t, format!("q {t}")))).unwrap()
    }

    #[test]
    fn type_r_total_order() {
        let order = [Definition, Explanation, Background, Instantiation, ForwardLooking, Elaboration];
        let rank = |q: &str| order.iter().position(|t| q == format!("q {t}")).unwrap();
        let (best, tally) = select_type_r("s", &typed(), |_, a, b| {
            Ok::<_, Infallible>(if rank(a) < rank(b) { 0.9 } else { 0.1 })
        })
        .unwrap();
        assert_eq!(best, Definition);
        assert_eq!(tally.wins[&Definition], 10);
        assert_eq!(tally.total(), 30);
    }

    #[test]
    fn type_r_constant_oracle_ties() {
        let (best, tally) = select_type_r("s", &typed(), |_, _, _| Ok::<_, Infallible>(0.5)).unwrap();
        assert!(tally.wins.values().all(|&w| w == 5));
        assert!(tally.score.values().all(|&s| s == 5.0));
        assert_eq!(best, Background);
    }

    #[test]
    fn type_r_score_breaks_vote_ties() {
        // every comparison favours the first question, so wins tie at 5;
        // Instantiation's question gets more confident votes
        let (best, tally) = select_type_r("s", &typed(), |_, a, _| {
            Ok::<_, Infallible>(if a == "q Instantiation" { 0.9 } else { 0.6 })
        })
        .unwrap();
        assert!(tally.wins.values().all(|&w| w == 5));
        assert_eq!(best, Instantiation);
    }

    #[test]
    fn type_r_oracle_errors() {
        let r = select_type_r("s", &typed(), |_, _, _| Ok::<_, Infallible>(1.3));
        assert!(matches!(r, Err(RankingError::OutOfRange(_))));
        let r = select_type_r("s", &typed(), |_, _, _| Err::<f64, _>("down"));
        assert!(matches!(r, Err(RankingError::OracleFailure(_))));
    }

    #[test]
    fn typed_questions_must_be_complete() {
        let five = QuestionType::GENERATABLE[..5].iter().map(|t| (*t, "q"));
        assert!(matches!(TypedQuestions::new(five), Err(RankingError::MissingType(Instantiation))));
        let with_other = QuestionType::ALL.iter().map(|t| (*t, "q"));
        assert!(TypedQuestions::new(with_other).is_err());
    }

    #[test]
    fn type_s_argmax_and_ties() {
        let probs: HashMap<String, f64> = QuestionType::GENERATABLE
            .iter()
            .zip([0.1, 0.2, 0.9, 0.3, 0.4, 0.5])
            .map(|(t, p)| (format!("q {t}"), p))
            .collect();
        assert_eq!(select_type_s(&typed(), |q| Ok::<_, Infallible>(probs[q])).unwrap(), Elaboration);
        assert_eq!(select_type_s(&typed(), |_| Ok::<_, Infallible>(0.7)).unwrap(), Background);
        assert!(select_type_s(&typed(), |_| Ok::<_, Infallible>(-0.1)).is_err());
    }

    #[test]
    fn type_o_cases() {
        let inst = crate::corpus::tests::santa_fe();
        let sel = select_type_o(&inst, "why?", |_| Ok::<_, Infallible>(ProbDist::one_hot(Instantiation))).unwrap();
        assert_eq!(sel.chosen, Instantiation);
        let sel = select_type_o(&inst, "why?", |_| Ok::<_, Infallible>(ProbDist::uniform())).unwrap();
        assert_eq!(sel.chosen, Background);
        let sel = select_type_o(&inst, "why?", |_| Ok::<_, Infallible>(ProbDist::one_hot(Other))).unwrap();
        assert_eq!((sel.chosen, sel.predicted), (Explanation, Other));
        let mut seen = String::new();
        select_type_o(&inst, "why?", |input| {
            seen = input.to_string();
            Ok::<_, Infallible>(ProbDist::uniform())
        })
        .unwrap();
        assert!(seen.ends_with(" [SEP] review [SEP] why?"));
    }
}

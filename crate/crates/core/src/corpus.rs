//! Corpus data model, JSONL ingestion, holdout splitting and model-input
//! assembly.
//!
//! A corpus file holds one JSON object per line with the fields
//! `instance_id`, `article_id`, `sentence_index`, `context`, `source`,
//! `span_start`, `span_end`, `span` (optional on input), `question`, `split`
//! and `type_label`. Span offsets are character (Unicode scalar) offsets into
//! `source`; [`char_span_from_token_span`] converts whitespace-token offsets.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Segment delimiter used in every assembled model input.
pub const SEP: &str = " [SEP] ";
/// The bare delimiter token; corpus text containing it is rejected.
pub const SEP_TOKEN: &str = "[SEP]";
/// Stand-in for an empty context (first sentence of an article).
pub const NO_CONTEXT: &str = "NO_CONTEXT";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("line {line}: span {start}..{end} out of bounds for source of {len} characters (instance {id})")]
    SpanOutOfBounds {
        line: usize,
        id: String,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("line {line}: duplicate instance_id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("strategy TYPE requires a control code")]
    MissingControl,
    #[error("question type Other cannot be used as a control code")]
    OtherNotGeneratable,
    #[error("question is empty")]
    EmptyQuestion,
    #[error("requested {requested} holdout instances but the test split has {available}")]
    NotEnoughInstances { requested: usize, available: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Rhetorical question type. Declaration order is also the lexicographic
/// order of the canonical names, which tie-breaking relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QuestionType {
    Background,
    Definition,
    Elaboration,
    Explanation,
    #[serde(alias = "Forward-looking", alias = "Forward")]
    ForwardLooking,
    Instantiation,
    Other,
}

impl QuestionType {
    pub const ALL: [QuestionType; 7] = [
        QuestionType::Background,
        QuestionType::Definition,
        QuestionType::Elaboration,
        QuestionType::Explanation,
        QuestionType::ForwardLooking,
        QuestionType::Instantiation,
        QuestionType::Other,
    ];

    /// Types usable as control codes (everything except `Other`).
    pub const GENERATABLE: [QuestionType; 6] = [
        QuestionType::Background,
        QuestionType::Definition,
        QuestionType::Elaboration,
        QuestionType::Explanation,
        QuestionType::ForwardLooking,
        QuestionType::Instantiation,
    ];

    /// Canonical name, also used verbatim as the control-code token.
    pub fn as_str(self) -> &'static str {
        match self {
            QuestionType::Background => "Background",
            QuestionType::Definition => "Definition",
            QuestionType::Elaboration => "Elaboration",
            QuestionType::Explanation => "Explanation",
            QuestionType::ForwardLooking => "ForwardLooking",
            QuestionType::Instantiation => "Instantiation",
            QuestionType::Other => "Other",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<QuestionType> {
        Self::ALL.get(i).copied()
    }

    pub fn is_generatable(self) -> bool {
        self != QuestionType::Other
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown question type {0:?}")]
pub struct UnknownQuestionType(pub String);

impl FromStr for QuestionType {
    type Err = UnknownQuestionType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        let t = match norm.as_str() {
            "background" => QuestionType::Background,
            "definition" => QuestionType::Definition,
            "elaboration" => QuestionType::Elaboration,
            "explanation" => QuestionType::Explanation,
            "forwardlooking" | "forward" => QuestionType::ForwardLooking,
            "instantiation" => QuestionType::Instantiation,
            "other" => QuestionType::Other,
            _ => return Err(UnknownQuestionType(s.to_string())),
        };
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

/// One corpus record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub instance_id: String,
    pub article_id: String,
    pub sentence_index: u32,
    pub context: String,
    pub source: String,
    pub span_start: usize,
    pub span_end: usize,
    pub question: String,
    pub split: Split,
    pub type_label: Option<QuestionType>,
}

impl Instance {
    /// The highlighted span text, `source[span_start..span_end]` in characters.
    /// Returns an empty string when the offsets are invalid.
    pub fn span(&self) -> &str {
        char_slice(&self.source, self.span_start, self.span_end).unwrap_or("")
    }

    /// Context, or [`NO_CONTEXT`] when the context is empty.
    pub fn context_or_marker(&self) -> &str {
        if self.context.trim().is_empty() {
            NO_CONTEXT
        } else {
            &self.context
        }
    }

    fn check(&self, line: usize) -> Result<(), CorpusError> {
        let malformed = |reason: &str| CorpusError::MalformedRecord {
            line,
            reason: format!("{reason} (instance {})", self.instance_id),
        };
        if self.instance_id.is_empty() {
            return Err(malformed("empty instance_id"));
        }
        if self.sentence_index < 1 {
            return Err(malformed("sentence_index must be >= 1"));
        }
        if self.source.trim().is_empty() {
            return Err(malformed("empty source"));
        }
        if self.question.trim().is_empty() {
            return Err(malformed("empty question"));
        }
        let len = self.source.chars().count();
        if self.span_start >= self.span_end || self.span_end > len {
            return Err(CorpusError::SpanOutOfBounds {
                line,
                id: self.instance_id.clone(),
                start: self.span_start,
                end: self.span_end,
                len,
            });
        }
        for (name, text) in [
            ("context", &self.context),
            ("source", &self.source),
            ("question", &self.question),
        ] {
            if text.contains(SEP_TOKEN) {
                return Err(malformed(&format!("{name} contains the {SEP_TOKEN} delimiter")));
            }
        }
        Ok(())
    }
}

/// Wire form of [`Instance`]; field order is the canonical export order.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceRecord {
    instance_id: String,
    article_id: String,
    sentence_index: u32,
    #[serde(default)]
    context: String,
    source: String,
    span_start: usize,
    span_end: usize,
    #[serde(default)]
    span: Option<String>,
    question: String,
    split: Split,
    #[serde(default)]
    type_label: Option<QuestionType>,
}

impl From<&Instance> for InstanceRecord {
    fn from(i: &Instance) -> Self {
        InstanceRecord {
            instance_id: i.instance_id.clone(),
            article_id: i.article_id.clone(),
            sentence_index: i.sentence_index,
            context: i.context.clone(),
            source: i.source.clone(),
            span_start: i.span_start,
            span_end: i.span_end,
            span: Some(i.span().to_string()),
            question: i.question.clone(),
            split: i.split,
            type_label: i.type_label,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SplitCounts {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

/// Validated, immutable collection of instances in file order.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    instances: Vec<Instance>,
}

impl Dataset {
    /// Validates every instance and id uniqueness. Line numbers in errors are
    /// 1-based positions in `instances`.
    pub fn new(instances: Vec<Instance>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for (i, inst) in instances.iter().enumerate() {
            inst.check(i + 1)?;
            if !seen.insert(inst.instance_id.as_str()) {
                return Err(CorpusError::DuplicateId {
                    line: i + 1,
                    id: inst.instance_id.clone(),
                });
            }
        }
        Ok(Dataset { instances })
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn get(&self, instance_id: &str) -> Option<&Instance> {
        self.instances.iter().find(|i| i.instance_id == instance_id)
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Instance> {
        self.instances.iter().filter(move |i| i.split == split)
    }

    pub fn split_counts(&self) -> SplitCounts {
        let mut c = SplitCounts::default();
        for i in &self.instances {
            match i.split {
                Split::Train => c.train += 1,
                Split::Dev => c.dev += 1,
                Split::Test => c.test += 1,
            }
        }
        c
    }

    /// Reads a JSONL corpus. Blank lines are skipped; line numbers in errors
    /// refer to physical lines.
    pub fn read_jsonl<R: Read>(reader: R) -> Result<Self, CorpusError> {
        let mut instances = Vec::new();
        let mut seen = HashSet::new();
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: InstanceRecord =
                serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
                    line: line_no,
                    reason: e.to_string(),
                })?;
            let span_text = rec.span.clone();
            let inst = Instance {
                instance_id: rec.instance_id,
                article_id: rec.article_id,
                sentence_index: rec.sentence_index,
                context: rec.context,
                source: rec.source,
                span_start: rec.span_start,
                span_end: rec.span_end,
                question: rec.question,
                split: rec.split,
                type_label: rec.type_label,
            };
            inst.check(line_no)?;
            if let Some(span) = span_text {
                if span != inst.span() {
                    return Err(CorpusError::MalformedRecord {
                        line: line_no,
                        reason: format!(
                            "span text {:?} does not match source[{}..{}] = {:?}",
                            span,
                            inst.span_start,
                            inst.span_end,
                            inst.span()
                        ),
                    });
                }
            }
            if !seen.insert(inst.instance_id.clone()) {
                return Err(CorpusError::DuplicateId {
                    line: line_no,
                    id: inst.instance_id,
                });
            }
            instances.push(inst);
        }
        Ok(Dataset { instances })
    }

    /// Writes the canonical JSONL form (one record per line, LF endings).
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), CorpusError> {
        for inst in &self.instances {
            let line = serde_json::to_string(&InstanceRecord::from(inst))
                .expect("instance records always serialize");
            w.write_all(line.as_bytes())?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Loads and validates a JSONL corpus file.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, CorpusError> {
    Dataset::read_jsonl(File::open(path)?)
}

/// Character-offset substring; `None` if the range is out of bounds.
pub fn char_slice(s: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let byte_at = |ci: usize| {
        if ci == 0 {
            Some(0)
        } else {
            s.char_indices()
                .map(|(b, _)| b)
                .chain(std::iter::once(s.len()))
                .nth(ci)
        }
    };
    let b0 = byte_at(start)?;
    let b1 = byte_at(end)?;
    Some(&s[b0..b1])
}

/// Converts a half-open range of whitespace-token indices into character
/// offsets into `source`. Returns `None` for an empty or out-of-range span.
pub fn char_span_from_token_span(
    source: &str,
    token_start: usize,
    token_end: usize,
) -> Option<(usize, usize)> {
    if token_start >= token_end {
        return None;
    }
    let mut tokens = Vec::new();
    let mut current: Option<usize> = None;
    let mut n = 0;
    for c in source.chars() {
        if c.is_whitespace() {
            if let Some(s) = current.take() {
                tokens.push((s, n));
            }
        } else if current.is_none() {
            current = Some(n);
        }
        n += 1;
    }
    if let Some(s) = current {
        tokens.push((s, n));
    }
    let first = tokens.get(token_start)?;
    let last = tokens.get(token_end - 1)?;
    Some((first.0, last.1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Base,
    Span,
    Type,
}

impl Strategy {
    pub fn segment_count(self) -> usize {
        match self {
            Strategy::Base => 2,
            Strategy::Span => 3,
            Strategy::Type => 4,
        }
    }
}

/// An assembled generator input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelInput {
    pub strategy: Strategy,
    pub control: Option<QuestionType>,
    pub text: String,
}

impl ModelInput {
    pub fn segments(&self) -> Vec<&str> {
        self.text.split(SEP).collect()
    }
}

/// Assembles `context-or-NO_CONTEXT [SEP] source [SEP] span [SEP] control`,
/// truncated to the segments the strategy uses. A control code passed with
/// BASE or SPAN is ignored.
pub fn build_model_input(
    instance: &Instance,
    strategy: Strategy,
    control: Option<QuestionType>,
) -> Result<ModelInput, CorpusError> {
    let mut parts = vec![instance.context_or_marker(), instance.source.as_str()];
    let control = match strategy {
        Strategy::Base => None,
        Strategy::Span => {
            parts.push(instance.span());
            None
        }
        Strategy::Type => {
            let code = control.ok_or(CorpusError::MissingControl)?;
            if !code.is_generatable() {
                return Err(CorpusError::OtherNotGeneratable);
            }
            parts.push(instance.span());
            parts.push(code.as_str());
            Some(code)
        }
    };
    Ok(ModelInput {
        strategy,
        control,
        text: parts.join(SEP),
    })
}

/// Input for the question-type classifier: context, source, span, question.
pub fn build_classifier_input(instance: &Instance, question: &str) -> Result<String, CorpusError> {
    if question.trim().is_empty() {
        return Err(CorpusError::EmptyQuestion);
    }
    Ok([
        instance.context_or_marker(),
        instance.source.as_str(),
        instance.span(),
        question,
    ]
    .join(SEP))
}

/// Draws `n` test-split instances uniformly without replacement (seeded) as
/// the holdout; the remaining test instances form the evaluation set. Both
/// sets keep file order.
pub fn split_holdout(
    dataset: &Dataset,
    n: usize,
    seed: u64,
) -> Result<(Vec<Instance>, Vec<Instance>), CorpusError> {
    let test: Vec<&Instance> = dataset.split(Split::Test).collect();
    if n > test.len() {
        return Err(CorpusError::NotEnoughInstances {
            requested: n,
            available: test.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = vec![false; test.len()];
    for i in index::sample(&mut rng, test.len(), n) {
        picked[i] = true;
    }
    let mut eval = Vec::with_capacity(test.len() - n);
    let mut holdout = Vec::with_capacity(n);
    for (inst, p) in test.into_iter().zip(picked) {
        if p {
            holdout.push(inst.clone());
        } else {
            eval.push(inst.clone());
        }
    }
    Ok((eval, holdout))
}

/// Decoding configuration sent with every generation request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeParams {
    pub top_k: u32,
    pub min_tokens: u32,
    pub max_tokens: u32,
    /// Exponent on output length; values above 1 favour longer outputs.
    pub length_penalty: f64,
}

impl Default for DecodeParams {
    fn default() -> Self {
        DecodeParams {
            top_k: 5,
            min_tokens: 5,
            max_tokens: 30,
            length_penalty: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid decode params: {0}")]
pub struct InvalidDecodeParams(pub String);

impl DecodeParams {
    pub fn validate(&self) -> Result<(), InvalidDecodeParams> {
        if self.top_k < 1 {
            return Err(InvalidDecodeParams("top_k must be >= 1".into()));
        }
        if self.min_tokens == 0 || self.min_tokens > self.max_tokens {
            return Err(InvalidDecodeParams(format!(
                "need 0 < min_tokens ({}) <= max_tokens ({})",
                self.min_tokens, self.max_tokens
            )));
        }
        if !self.length_penalty.is_finite() {
            return Err(InvalidDecodeParams("length_penalty must be finite".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn santa_fe() -> Instance {
        let source = "Santa Fe Pacific directors are expected to review the plan at a meeting today, according to people familiar with the transaction.";
        let start = source.find("review").unwrap();
        Instance {
            instance_id: "wsj-0001-3".into(),
            article_id: "wsj-0001".into(),
            sentence_index: 3,
            context: "The plan places an indicated value on the real estate operation, Santa Fe Pacific Realty Corp., of $ 2 billion.".into(),
            source: source.into(),
            span_start: start,
            span_end: start + "review".len(),
            question: "Why are they reviewing the plan?".into(),
            split: Split::Test,
            type_label: None,
        }
    }

    fn record(id: &str, split: &str) -> String {
        format!(
            r#"{{"instance_id":"{id}","article_id":"a","sentence_index":1,"context":"","source":"Some source text.","span_start":0,"span_end":4,"question":"why?","split":"{split}"}}"#
        )
    }

    #[test]
    fn question_type_sets() {
        assert_eq!(QuestionType::ALL.len(), 7);
        assert_eq!(QuestionType::GENERATABLE.len(), 6);
        assert!(!QuestionType::GENERATABLE.contains(&QuestionType::Other));
        let mut names: Vec<_> = QuestionType::ALL.iter().map(|t| t.as_str()).collect();
        let sorted = {
            let mut s = names.clone();
            s.sort();
            s
        };
        assert_eq!(names, sorted);
        names.dedup();
        assert_eq!(names.len(), 7);
        for t in QuestionType::ALL {
            assert_eq!(t.as_str().parse::<QuestionType>().unwrap(), t);
            assert_eq!(QuestionType::from_index(t.index()), Some(t));
        }
        assert_eq!(
            "Forward-looking".parse::<QuestionType>().unwrap(),
            QuestionType::ForwardLooking
        );
    }

    #[test]
    fn santa_fe_type_input_matches_quoted_form() {
        let inst = santa_fe();
        let mi = build_model_input(&inst, Strategy::Type, Some(QuestionType::Explanation)).unwrap();
        assert!(mi.text.starts_with("The plan places"));
        assert!(mi.text.contains("2 billion. [SEP] Santa Fe"));
        assert!(mi.text.ends_with("the transaction. [SEP] review [SEP] Explanation"));
        assert_eq!(mi.segments().len(), 4);
        assert_eq!(mi.control, Some(QuestionType::Explanation));
    }

    #[test]
    fn empty_context_uses_marker() {
        let mut inst = santa_fe();
        inst.context.clear();
        let mi = build_model_input(&inst, Strategy::Base, None).unwrap();
        assert_eq!(mi.text, format!("NO_CONTEXT [SEP] {}", inst.source));
        let ci = build_classifier_input(&inst, "why?").unwrap();
        assert!(ci.starts_with("NO_CONTEXT [SEP] "));
    }

    #[test]
    fn type_strategy_errors() {
        let inst = santa_fe();
        assert!(matches!(
            build_model_input(&inst, Strategy::Type, None),
            Err(CorpusError::MissingControl)
        ));
        assert!(matches!(
            build_model_input(&inst, Strategy::Type, Some(QuestionType::Other)),
            Err(CorpusError::OtherNotGeneratable)
        ));
        let span = build_model_input(&inst, Strategy::Span, Some(QuestionType::Explanation)).unwrap();
        assert_eq!(span.control, None);
        assert_eq!(span.segments().len(), 3);
    }

    #[test]
    fn classifier_input_order() {
        let inst = Instance {
            instance_id: "x".into(),
            article_id: "a".into(),
            sentence_index: 2,
            context: "c".into(),
            source: "s".into(),
            span_start: 0,
            span_end: 1,
            question: "q".into(),
            split: Split::Train,
            type_label: None,
        };
        let mut inst = inst;
        inst.source = "s sp".into();
        inst.span_start = 2;
        inst.span_end = 4;
        assert_eq!(
            build_classifier_input(&inst, "why?").unwrap(),
            "c [SEP] s sp [SEP] sp [SEP] why?"
        );
        assert!(matches!(
            build_classifier_input(&inst, ""),
            Err(CorpusError::EmptyQuestion)
        ));
    }

    #[test]
    fn typed_inputs_differ_only_in_last_segment() {
        let inst = santa_fe();
        let inputs: Vec<_> = QuestionType::GENERATABLE
            .iter()
            .map(|&t| build_model_input(&inst, Strategy::Type, Some(t)).unwrap())
            .collect();
        for mi in &inputs {
            assert_eq!(mi.segments()[..3], inputs[0].segments()[..3]);
        }
        let lasts: HashSet<_> = inputs.iter().map(|m| *m.segments().last().unwrap()).collect();
        assert_eq!(lasts.len(), 6);
    }

    #[test]
    fn empty_file_loads_empty_dataset() {
        let ds = Dataset::read_jsonl("".as_bytes()).unwrap();
        assert_eq!(ds.split_counts(), SplitCounts::default());
    }

    #[test]
    fn loader_errors() {
        let bad_span = r#"{"instance_id":"a","article_id":"a","sentence_index":1,"context":"","source":"abc","span_start":1,"span_end":9,"question":"q","split":"train"}"#;
        assert!(matches!(
            Dataset::read_jsonl(bad_span.as_bytes()),
            Err(CorpusError::SpanOutOfBounds { line: 1, .. })
        ));
        let dup = format!("{}\n{}\n", record("a", "train"), record("a", "dev"));
        assert!(matches!(
            Dataset::read_jsonl(dup.as_bytes()),
            Err(CorpusError::DuplicateId { line: 2, .. })
        ));
        assert!(matches!(
            Dataset::read_jsonl("{not json}\n".as_bytes()),
            Err(CorpusError::MalformedRecord { line: 1, .. })
        ));
        let sep = record("a", "train").replace("Some source", "Some [SEP] source");
        assert!(matches!(
            Dataset::read_jsonl(sep.as_bytes()),
            Err(CorpusError::MalformedRecord { .. })
        ));
        let wrong_span = record("a", "train").replace(r#""question""#, r#""span":"nope","question""#);
        assert!(matches!(
            Dataset::read_jsonl(wrong_span.as_bytes()),
            Err(CorpusError::MalformedRecord { .. })
        ));
        let empty_q = record("a", "train").replace(r#""why?""#, r#""""#);
        assert!(Dataset::read_jsonl(empty_q.as_bytes()).is_err());
    }

    #[test]
    fn export_round_trip_is_byte_identical() {
        let text = format!(
            "{}\n{}\n",
            record("a", "train"),
            record("b", "test")
        );
        let ds = Dataset::read_jsonl(text.as_bytes()).unwrap();
        let mut first = Vec::new();
        ds.write_jsonl(&mut first).unwrap();
        let again = Dataset::read_jsonl(first.as_slice()).unwrap();
        let mut second = Vec::new();
        again.write_jsonl(&mut second).unwrap();
        assert_eq!(first, second);
        assert!(String::from_utf8(first).unwrap().contains(r#""span":"Some""#));
    }

    #[test]
    fn unicode_spans_use_char_offsets() {
        assert_eq!(char_slice("naïve café", 6, 10), Some("café"));
        assert_eq!(char_slice("abc", 0, 3), Some("abc"));
        assert_eq!(char_slice("abc", 2, 4), None);
        assert_eq!(char_span_from_token_span("the  naïve café", 1, 3), Some((5, 15)));
        assert_eq!(char_span_from_token_span("a b", 1, 3), None);
    }

    fn test_split_dataset(n: usize) -> Dataset {
        let lines: Vec<String> = (0..n).map(|i| record(&format!("t{i}"), "test")).collect();
        let mut text = lines.join("\n");
        text.push('\n');
        text.push_str(&record("tr", "train"));
        Dataset::read_jsonl(text.as_bytes()).unwrap()
    }

    #[test]
    fn holdout_partitions_test_split() {
        let ds = test_split_dataset(50);
        let (eval, hold) = split_holdout(&ds, 12, 7).unwrap();
        assert_eq!(eval.len(), 38);
        assert_eq!(hold.len(), 12);
        let mut ids: Vec<_> = eval.iter().chain(&hold).map(|i| i.instance_id.clone()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 50);
        assert!(hold.iter().all(|i| i.split == Split::Test));
        let (eval2, hold2) = split_holdout(&ds, 12, 7).unwrap();
        assert_eq!((eval, hold), (eval2, hold2));

        let (all, none) = split_holdout(&ds, 0, 1).unwrap();
        assert_eq!(all.len(), 50);
        assert!(none.is_empty());
        assert!(matches!(
            split_holdout(&ds, 51, 1),
            Err(CorpusError::NotEnoughInstances { requested: 51, available: 50 })
        ));
    }

    #[test]
    fn decode_params_defaults_and_bounds() {
        let d = DecodeParams::default();
        assert_eq!((d.top_k, d.min_tokens, d.max_tokens, d.length_penalty), (5, 5, 30, 2.0));
        d.validate().unwrap();
        assert!(DecodeParams { min_tokens: 0, ..d }.validate().is_err());
        assert!(DecodeParams { min_tokens: 31, ..d }.validate().is_err());
        assert!(DecodeParams { top_k: 0, ..d }.validate().is_err());
    }
}

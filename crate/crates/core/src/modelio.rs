//! Boundary to the neural models.
//!
//! [`ModelBackend`] has two implementations: [`HttpBackend`], a JSON-over-HTTP
//! client for an external inference service, and [`StubBackend`], a
//! deterministic in-process stand-in that needs no trained weights.
//!
//! Service endpoints (all `POST`, JSON bodies; `id` is echoed back optionally
//! and checked when present):
//!
//! | path            | request                                         | response                      |
//! |-----------------|-------------------------------------------------|-------------------------------|
//! | `/generate`     | `id, input, params{top_k,min_tokens,max_tokens,length_penalty}, seed` | `question, token_count` |
//! | `/classify`     | `id, input`                                     | `distribution` (7 floats)     |
//! | `/inquisitive`  | `id, question`                                  | `probability`                 |
//! | `/prefer`       | `id, source, first, second, input`              | `probability`                 |
//! | `/score_tokens` | `id, text`                                      | `logprobs`                    |
//!
//! `distribution` is ordered Background, Definition, Elaboration,
//! Explanation, ForwardLooking, Instantiation, Other.

use std::io;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{DecodeParams, QuestionType, SEP};
use crate::metrics::ProbDist;
use crate::ranking::preference_input;
use crate::textproc::tokenize;

/// Environment variable holding the inference service base URL.
pub const ENDPOINT_ENV: &str = "INQPIPE_ENDPOINT";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("request to {0} timed out")]
    Timeout(String),
    #[error("transport error calling {endpoint}: {message}")]
    Transport { endpoint: String, message: String },
    #[error("bad response from {endpoint}: {message}")]
    BadResponse { endpoint: String, message: String },
    #[error("generated question has {token_count} tokens, outside [{min}, {max}]")]
    LengthViolation { token_count: u32, min: u32, max: u32 },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("probability {0} outside [0,1]")]
    OutOfRange(f64),
    #[error("text to score is empty")]
    EmptyText,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub input: String,
    pub params: DecodeParams,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub question: String,
    pub token_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceRequest {
    pub source: String,
    pub first: String,
    pub second: String,
}

impl PreferenceRequest {
    pub fn new(source: &str, first: &str, second: &str) -> Self {
        PreferenceRequest {
            source: source.into(),
            first: first.into(),
            second: second.into(),
        }
    }

    pub fn input(&self) -> String {
        preference_input(&self.source, &self.first, &self.second)
    }
}

pub trait ModelBackend: Send + Sync {
    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResponse, ModelError>;

    /// Seven-way question-type distribution for a classifier input.
    fn classify_type(&self, input: &str) -> Result<ProbDist, ModelError>;

    /// Probability that a question is inquisitive rather than informative.
    fn inquisitiveness(&self, question: &str) -> Result<f64, ModelError>;

    /// Probability that `first` is the better question.
    fn prefer(&self, req: &PreferenceRequest) -> Result<f64, ModelError>;

    /// Natural-log probability of each token of `text`.
    fn score_tokens(&self, text: &str) -> Result<Vec<f64>, ModelError>;
}

fn check_length(resp: &GenerationResponse, params: &DecodeParams) -> Result<(), ModelError> {
    if resp.token_count < params.min_tokens || resp.token_count > params.max_tokens {
        return Err(ModelError::LengthViolation {
            token_count: resp.token_count,
            min: params.min_tokens,
            max: params.max_tokens,
        });
    }
    Ok(())
}

fn check_probability(p: f64) -> Result<f64, ModelError> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(ModelError::OutOfRange(p))
    }
}

/// Floor of `6% * n_train * n_epochs / batch_size`.
pub fn warmup_updates(n_train: u64, n_epochs: u64, batch_size: u64) -> Result<u64, ModelError> {
    if n_train == 0 || n_epochs == 0 || batch_size == 0 {
        return Err(ModelError::InvalidRequest("warm-up inputs must be positive".into()));
    }
    Ok(6 * n_train * n_epochs / (100 * batch_size))
}

// ---------------------------------------------------------------------------
// Stub backend

/// Most common leading unigrams per type in the annotated questions.
pub const LEADING_UNIGRAMS: [(QuestionType, [(&str, u32); 5]); 7] = [
    (QuestionType::Explanation, [("why", 396), ("what", 28), ("is", 5), ("how", 4), ("if", 3)]),
    (QuestionType::Elaboration, [("what", 164), ("how", 135), ("is", 11), ("where", 6), ("in", 5)]),
    (QuestionType::Background, [("what", 108), ("how", 91), ("is", 40), ("who", 34), ("where", 18)]),
    (QuestionType::Definition, [("what", 95), ("does", 5), ("how", 3), ("who", 2), ("definition", 2)]),
    (QuestionType::Instantiation, [("what", 62), ("which", 50), ("who", 36), ("in", 3), ("at", 2)]),
    (QuestionType::ForwardLooking, [("what", 9), ("how", 8), ("will", 3), ("would", 2), ("did", 2)]),
    (QuestionType::Other, [("why", 5), ("does", 5), ("is", 4), ("what", 3), ("of", 2)]),
];

fn templates(t: QuestionType) -> &'static [&'static str] {
    match t {
        QuestionType::Explanation => &[
            "Why is {} important here?",
            "Why did they bring up {} at all?",
            "Why would {} matter so much?",
        ],
        QuestionType::Elaboration => &[
            "How does {} work in this case?",
            "How will {} affect the outcome?",
            "How exactly is {} carried out?",
        ],
        QuestionType::Background => &[
            "Where did {} come from originally?",
            "Where does {} usually take place?",
            "Where was {} first reported?",
        ],
        QuestionType::Definition => &[
            "Does {} mean something specific here?",
            "Does the term {} have a precise definition?",
        ],
        QuestionType::Instantiation => &[
            "Which {} are they talking about?",
            "Which examples of {} are there?",
            "Who exactly is involved in {}?",
        ],
        QuestionType::ForwardLooking => &[
            "Would {} continue into next year?",
            "Will {} change in the future?",
            "Will {} happen again soon?",
        ],
        QuestionType::Other => &["Is {} really the case?"],
    }
}

const FILLER: [&str; 4] = ["in", "this", "particular", "story"];

/// Deterministic stand-in for every model.
///
/// * `generate`: a per-type question template seeded by the request, with the
///   span (or a source word) as topic. Length is counted in whitespace
///   tokens, which only approximates a subword tokenizer.
/// * `classify_type`: normalized leading-unigram counts from
///   [`LEADING_UNIGRAMS`]; uniform when the leading word is unknown.
/// * `prefer`: a strict total order over question texts given by a seeded
///   hash, answered with 0.9 / 0.1 (0.5 for identical texts).
/// * `inquisitiveness`: a seeded hash mapped into [0.05, 0.95].
/// * `score_tokens`: `ln 0.5` per whitespace token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StubBackend {
    seed: u64,
}

impl StubBackend {
    pub fn new(seed: u64) -> Self {
        StubBackend { seed }
    }

    fn hash(&self, tag: &str, parts: &[&str]) -> u64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(tag.as_bytes());
        for p in parts {
            h.update((p.len() as u64).to_le_bytes());
            h.update(p.as_bytes());
        }
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().expect("sha256 has 32 bytes"))
    }

    /// Position of `question` in the stub's preference order (higher wins).
    pub fn preference_key(&self, question: &str) -> u64 {
        self.hash("prefer", &[question])
    }

    /// Distribution the stub classifier assigns to a question's leading word.
    pub fn leading_word_distribution(question: &str) -> ProbDist {
        let toks = tokenize(question);
        let Some(word) = toks.first() else {
            return ProbDist::uniform();
        };
        let mut counts = [0u32; 7];
        for (t, row) in LEADING_UNIGRAMS {
            for (w, c) in row {
                if w == word {
                    counts[t.index()] += c;
                }
            }
        }
        let total: u32 = counts.iter().sum();
        if total == 0 {
            return ProbDist::uniform();
        }
        let mut p = counts.map(|c| c as f64 / total as f64);
        let drift = 1.0 - p.iter().sum::<f64>();
        let top = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        p[top] += drift;
        ProbDist::new(p).expect("normalized counts")
    }

    fn topic(&self, segments: &[&str]) -> String {
        if let Some(span) = segments.get(2) {
            let s = span.trim().trim_end_matches(|c: char| c.is_ascii_punctuation());
            if !s.is_empty() {
                return s.to_string();
            }
        }
        let source = segments.get(1).copied().unwrap_or(segments[0]);
        let words: Vec<&str> = source
            .split_whitespace()
            .map(|w| w.trim_matches(|c: char| c.is_ascii_punctuation()))
            .filter(|w| w.chars().count() >= 4)
            .collect();
        if words.is_empty() {
            return "this".to_string();
        }
        let i = (self.hash("topic", &[source]) % words.len() as u64) as usize;
        words[i].to_lowercase()
    }
}

fn fit_length(question: &str, min: u32, max: u32) -> (String, u32) {
    let mut words: Vec<String> = question.split_whitespace().map(String::from).collect();
    if let Some(last) = words.last_mut() {
        if last.ends_with('?') {
            last.pop();
            if last.is_empty() {
                words.pop();
            }
        }
    }
    let mut f = 0;
    while (words.len() as u32) < min {
        words.push(FILLER[f % FILLER.len()].to_string());
        f += 1;
    }
    words.truncate(max.max(1) as usize);
    let n = words.len() as u32;
    (format!("{}?", words.join(" ")), n)
}

impl ModelBackend for StubBackend {
    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResponse, ModelError> {
        req.params
            .validate()
            .map_err(|e| ModelError::InvalidRequest(e.to_string()))?;
        let segments: Vec<&str> = req.input.split(SEP).collect();
        let seed = req.seed.unwrap_or(0).to_le_bytes();
        let seed_str = hex::encode(seed);
        let h = self.hash("generate", &[&req.input, &seed_str]);
        let control = if segments.len() >= 4 {
            segments[3].parse::<QuestionType>().ok()
        } else {
            None
        };
        let qtype = control.unwrap_or_else(|| {
            QuestionType::GENERATABLE[(h % QuestionType::GENERATABLE.len() as u64) as usize]
        });
        let options = templates(qtype);
        let template = options[((h >> 8) % options.len() as u64) as usize];
        let raw = template.replacen("{}", &self.topic(&segments), 1);
        let (question, token_count) = fit_length(&raw, req.params.min_tokens, req.params.max_tokens);
        let resp = GenerationResponse { question, token_count };
        check_length(&resp, &req.params)?;
        Ok(resp)
    }

    fn classify_type(&self, input: &str) -> Result<ProbDist, ModelError> {
        let question = input.rsplit(SEP).next().unwrap_or(input);
        Ok(Self::leading_word_distribution(question))
    }

    fn inquisitiveness(&self, question: &str) -> Result<f64, ModelError> {
        let h = self.hash("inquisitive", &[question]);
        Ok(0.05 + 0.9 * (h as f64 / u64::MAX as f64))
    }

    fn prefer(&self, req: &PreferenceRequest) -> Result<f64, ModelError> {
        if req.first == req.second {
            return Ok(0.5);
        }
        let a = (self.preference_key(&req.first), &req.first);
        let b = (self.preference_key(&req.second), &req.second);
        Ok(if a > b { 0.9 } else { 0.1 })
    }

    fn score_tokens(&self, text: &str) -> Result<Vec<f64>, ModelError> {
        let n = text.split_whitespace().count();
        if n == 0 {
            return Err(ModelError::EmptyText);
        }
        Ok(vec![0.5f64.ln(); n])
    }
}

// ---------------------------------------------------------------------------
// HTTP backend

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub base_url: String,
    pub timeout: Duration,
    /// Retries after the first attempt.
    pub retries: u32,
    pub backoff: Duration,
    /// Concurrent in-flight requests per endpoint.
    pub max_concurrent: usize,
}

impl HttpConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        HttpConfig {
            base_url: base_url.into(),
            timeout: Duration::from_secs(60),
            retries: 3,
            backoff: Duration::from_millis(200),
            max_concurrent: 8,
        }
    }

    /// Base URL from [`ENDPOINT_ENV`], if set.
    pub fn from_env() -> Option<Self> {
        std::env::var(ENDPOINT_ENV).ok().map(Self::new)
    }
}

struct Semaphore {
    permits: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore {
            permits: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut p = self.permits.lock().unwrap_or_else(|e| e.into_inner());
        while *p == 0 {
            p = self.cv.wait(p).unwrap_or_else(|e| e.into_inner());
        }
        *p -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Semaphore);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.permits.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

const ENDPOINTS: [&str; 5] = ["/generate", "/classify", "/inquisitive", "/prefer", "/score_tokens"];

pub struct HttpBackend {
    config: HttpConfig,
    agent: ureq::Agent,
    next_id: AtomicU64,
    limits: Vec<Semaphore>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    id: u64,
    #[serde(flatten)]
    body: &'a T,
}

#[derive(Deserialize)]
struct Echo {
    id: Option<u64>,
}

#[derive(Serialize)]
struct ClassifyBody<'a> {
    input: &'a str,
}

#[derive(Deserialize)]
struct ClassifyReply {
    distribution: Vec<f64>,
}

#[derive(Serialize)]
struct InquisitiveBody<'a> {
    question: &'a str,
}

#[derive(Deserialize)]
struct ProbabilityReply {
    probability: f64,
}

#[derive(Serialize)]
struct PreferBody<'a> {
    source: &'a str,
    first: &'a str,
    second: &'a str,
    input: String,
}

#[derive(Serialize)]
struct ScoreBody<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct ScoreReply {
    logprobs: Vec<f64>,
}

enum Attempt {
    Retry(ModelError),
    Fail(ModelError),
}

fn is_timeout(t: &ureq::Transport) -> bool {
    use std::error::Error;
    let mut src = t.source();
    while let Some(e) = src {
        if let Some(io) = e.downcast_ref::<io::Error>() {
            if matches!(io.kind(), io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock) {
                return true;
            }
        }
        src = e.source();
    }
    t.to_string().contains("timed out")
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        let limits = ENDPOINTS.iter().map(|_| Semaphore::new(config.max_concurrent)).collect();
        HttpBackend {
            config,
            agent,
            next_id: AtomicU64::new(1),
            limits,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.config.base_url.trim_end_matches('/'), path)
    }

    fn post<B: Serialize, R: DeserializeOwned>(&self, path: &str, body: &B) -> Result<R, ModelError> {
        let slot = ENDPOINTS.iter().position(|p| *p == path).expect("known endpoint");
        let _permit = self.limits[slot].acquire();
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let payload = serde_json::to_value(Envelope { id, body }).expect("request serializes");
        let url = self.url(path);
        let mut delay = self.config.backoff;
        let mut attempt = 0;
        loop {
            match self.try_post(&url, &payload, id) {
                Ok(v) => return Ok(v),
                Err(Attempt::Fail(e)) => return Err(e),
                Err(Attempt::Retry(e)) if attempt >= self.config.retries => return Err(e),
                Err(Attempt::Retry(e)) => {
                    attempt += 1;
                    warn!("{url}: {e}; retry {attempt}/{} in {delay:?}", self.config.retries);
                    thread::sleep(delay);
                    delay *= 2;
                }
            }
        }
    }

    fn try_post<R: DeserializeOwned>(&self, url: &str, payload: &serde_json::Value, id: u64) -> Result<R, Attempt> {
        debug!("POST {url} id={id}");
        let bad = |message: String| ModelError::BadResponse {
            endpoint: url.to_string(),
            message,
        };
        let resp = match self.agent.post(url).send_json(payload) {
            Ok(r) => r,
            Err(ureq::Error::Status(code, r)) => {
                let body = r.into_string().unwrap_or_default();
                let e = bad(format!("HTTP {code}: {body}"));
                return Err(if code >= 500 || code == 429 {
                    Attempt::Retry(e)
                } else {
                    Attempt::Fail(e)
                });
            }
            Err(ureq::Error::Transport(t)) => {
                return Err(Attempt::Retry(if is_timeout(&t) {
                    ModelError::Timeout(url.to_string())
                } else {
                    ModelError::Transport {
                        endpoint: url.to_string(),
                        message: t.to_string(),
                    }
                }));
            }
        };
        let text = resp.into_string().map_err(|e| {
            Attempt::Retry(ModelError::Transport {
                endpoint: url.to_string(),
                message: e.to_string(),
            })
        })?;
        let echo: Echo = serde_json::from_str(&text).map_err(|e| Attempt::Fail(bad(e.to_string())))?;
        if let Some(got) = echo.id {
            if got != id {
                return Err(Attempt::Fail(bad(format!("response id {got} does not match request id {id}"))));
            }
        }
        serde_json::from_str(&text).map_err(|e| Attempt::Fail(bad(e.to_string())))
    }
}

impl ModelBackend for HttpBackend {
    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResponse, ModelError> {
        req.params
            .validate()
            .map_err(|e| ModelError::InvalidRequest(e.to_string()))?;
        let resp: GenerationResponse = self.post("/generate", req)?;
        if resp.question.trim().is_empty() {
            return Err(ModelError::BadResponse {
                endpoint: self.url("/generate"),
                message: "empty question".into(),
            });
        }
        check_length(&resp, &req.params)?;
        Ok(resp)
    }

    fn classify_type(&self, input: &str) -> Result<ProbDist, ModelError> {
        let r: ClassifyReply = self.post("/classify", &ClassifyBody { input })?;
        ProbDist::from_slice(&r.distribution).map_err(|e| ModelError::InvalidDistribution(e.to_string()))
    }

    fn inquisitiveness(&self, question: &str) -> Result<f64, ModelError> {
        let r: ProbabilityReply = self.post("/inquisitive", &InquisitiveBody { question })?;
        check_probability(r.probability)
    }

    fn prefer(&self, req: &PreferenceRequest) -> Result<f64, ModelError> {
        let body = PreferBody {
            source: &req.source,
            first: &req.first,
            second: &req.second,
            input: req.input(),
        };
        let r: ProbabilityReply = self.post("/prefer", &body)?;
        check_probability(r.probability)
    }

    fn score_tokens(&self, text: &str) -> Result<Vec<f64>, ModelError> {
        if text.trim().is_empty() {
            return Err(ModelError::EmptyText);
        }
        let r: ScoreReply = self.post("/score_tokens", &ScoreBody { text })?;
        if r.logprobs.is_empty() {
            return Err(ModelError::BadResponse {
                endpoint: self.url("/score_tokens"),
                message: "empty logprobs".into(),
            });
        }
        if let Some(bad) = r.logprobs.iter().find(|lp| !(lp.is_finite() || **lp == f64::NEG_INFINITY) || **lp > 0.0) {
            return Err(ModelError::BadResponse {
                endpoint: self.url("/score_tokens"),
                message: format!("log-probability {bad} is not <= 0"),
            });
        }
        Ok(r.logprobs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(input: &str, seed: u64) -> GenerationRequest {
        GenerationRequest {
            input: input.into(),
            params: DecodeParams::default(),
            seed: Some(seed),
        }
    }

    const TYPED: &str = "ctx [SEP] The directors will review the plan. [SEP] review [SEP] ";

    #[test]
    fn stub_generation_follows_control() {
        let stub = StubBackend::new(1);
        let r = stub.generate(&req(&format!("{TYPED}Explanation"), 3)).unwrap();
        assert!(r.question.starts_with("Why"), "{}", r.question);
        assert!(r.question.contains("review"));
        assert!((5..=30).contains(&r.token_count));
        assert_eq!(r.token_count as usize, r.question.split_whitespace().count());
        assert_eq!(stub.generate(&req(&format!("{TYPED}Explanation"), 3)).unwrap(), r);
    }

    #[test]
    fn stub_generated_types_classify_back() {
        let stub = StubBackend::new(9);
        for t in QuestionType::GENERATABLE {
            for seed in 0..6 {
                let q = stub.generate(&req(&format!("{TYPED}{t}"), seed)).unwrap().question;
                assert_eq!(stub.classify_type(&q).unwrap().argmax(), t, "{q}");
            }
        }
    }

    #[test]
    fn stub_respects_length_bounds() {
        let stub = StubBackend::new(0);
        let long_span = "one two three four five six seven eight nine ten eleven twelve";
        let input = format!("c [SEP] {long_span} [SEP] {long_span} [SEP] Explanation");
        let params = DecodeParams { min_tokens: 3, max_tokens: 8, ..DecodeParams::default() };
        let r = stub.generate(&GenerationRequest { input: input.clone(), params, seed: None }).unwrap();
        assert_eq!(r.token_count, 8);
        let params = DecodeParams { min_tokens: 20, max_tokens: 30, ..DecodeParams::default() };
        let r = stub.generate(&GenerationRequest { input, params, seed: None }).unwrap();
        assert_eq!(r.token_count, 20);
        assert!(r.question.ends_with('?'));
    }

    #[test]
    fn stub_classifier_rules() {
        let stub = StubBackend::new(0);
        assert_eq!(stub.classify_type("why did he go?").unwrap().argmax(), QuestionType::Explanation);
        assert_eq!(stub.classify_type("c [SEP] s [SEP] sp [SEP] which one?").unwrap().argmax(), QuestionType::Instantiation);
        assert_eq!(stub.classify_type("who is it?").unwrap().argmax(), QuestionType::Instantiation);
        assert_eq!(stub.classify_type("zebra crossing?").unwrap(), ProbDist::uniform());
        let why = stub.classify_type("Why?").unwrap();
        assert!((why.get(QuestionType::Explanation) - 396.0 / 401.0).abs() < 1e-12);
    }

    #[test]
    fn stub_preference_is_antisymmetric() {
        let stub = StubBackend::new(5);
        let p_ab = stub.prefer(&PreferenceRequest::new("s", "A?", "B?")).unwrap();
        let p_ba = stub.prefer(&PreferenceRequest::new("s", "B?", "A?")).unwrap();
        assert_eq!(p_ab + p_ba, 1.0);
        assert!(p_ab == 0.9 || p_ab == 0.1);
        assert_eq!(stub.prefer(&PreferenceRequest::new("s", "A?", "A?")).unwrap(), 0.5);
        let winner = if stub.preference_key("A?") > stub.preference_key("B?") { 0.9 } else { 0.1 };
        assert_eq!(p_ab, winner);
    }

    #[test]
    fn stub_scores_and_inquisitiveness() {
        let stub = StubBackend::new(0);
        assert_eq!(stub.score_tokens("a b c").unwrap(), vec![0.5f64.ln(); 3]);
        assert_eq!(stub.score_tokens(""), Err(ModelError::EmptyText));
        let p = stub.inquisitiveness("why?").unwrap();
        assert!((0.05..=0.95).contains(&p));
        assert_eq!(p, stub.inquisitiveness("why?").unwrap());
        assert_ne!(p, StubBackend::new(1).inquisitiveness("why?").unwrap());
    }

    #[test]
    fn warmup_values() {
        assert_eq!(warmup_updates(1400, 15, 8).unwrap(), 157);
        assert_eq!(warmup_updates(2581, 20, 8).unwrap(), 387);
        assert_eq!(warmup_updates(100, 1, 100).unwrap(), 0);
        assert!(warmup_updates(0, 1, 1).is_err());
    }

    #[test]
    fn fit_length_pads_and_truncates() {
        assert_eq!(fit_length("Why?", 3, 5), ("Why in this?".to_string(), 3));
        assert_eq!(fit_length("a b c d e f", 1, 3), ("a b c?".to_string(), 3));
    }
}

//! Batch commands over a corpus and a model backend.
//!
//! Every command reads its inputs, fans the per-instance work out over a
//! worker pool, writes its artifacts into the output directory and records
//! them with their SHA-256 digests in `manifest.json`. Results are collected
//! in input order, so the artifacts do not depend on thread scheduling.
//! Per-instance failures go to `<command>_errors.jsonl` and the rest of the
//! run continues.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::{info, warn};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annotation::{
    aggregate_human_eval, majority_vote, pairwise_kappa, precision_at_k_report, AnnotationError, HumanJudgment,
    MajorityOutcome, TypeLabelRecord,
};
use crate::config::{ConfigError, RunConfig, StrategyName};
use crate::corpus::{
    build_classifier_input, build_model_input, load_dataset, CorpusError, Dataset, Instance, QuestionType, Strategy,
};
use crate::metrics::{
    build_report, controllability, format_reports_table, summarize_reports, write_reports_tsv, MetricError,
    MetricReport, ProbDist, ScoredQuestion,
};
use crate::modelio::{warmup_updates, GenerationRequest, ModelBackend, PreferenceRequest};
use crate::ranking::{
    build_pair_dataset, select_type_o, select_type_r, select_type_s, split_pairs, RankingAnnotation, RankingError,
    TypedQuestions, VoteTally,
};
use crate::textproc::{leading_ngram_table, tokenize, TextError, TokenSeq};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Type order used by the report tables (most to least frequent in the
/// annotated data).
pub const REPORT_TYPE_ORDER: [QuestionType; 7] = [
    QuestionType::Explanation,
    QuestionType::Elaboration,
    QuestionType::Background,
    QuestionType::Definition,
    QuestionType::Instantiation,
    QuestionType::ForwardLooking,
    QuestionType::Other,
];

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("missing input: {}", .0.join(", "))]
    MissingInput(Vec<String>),
    #[error("selections not aligned with references: {0}")]
    Alignment(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// One generated question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub instance_id: String,
    pub strategy: Strategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<QuestionType>,
    pub question: String,
    pub token_count: u32,
}

/// The question a strategy picked for an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub instance_id: String,
    pub strategy: StrategyName,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen_type: Option<QuestionType>,
    /// Classifier prediction for the reference question (type_o only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_type: Option<QuestionType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tally: Option<VoteTally>,
}

/// A quarantined per-item failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    pub message: String,
}

impl ErrorRecord {
    fn new(instance_id: &str, strategy: Option<&str>, message: impl ToString) -> Self {
        ErrorRecord {
            instance_id: Some(instance_id.to_string()),
            strategy: strategy.map(str::to_string),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutcome {
    pub command: &'static str,
    pub outputs: Vec<PathBuf>,
    pub errors: Vec<ErrorRecord>,
}

impl CommandOutcome {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandEntry {
    pub started_unix: u64,
    pub finished_unix: u64,
    pub errors: usize,
    /// Input path -> SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Output file name (relative to the output directory) -> SHA-256.
    pub outputs: BTreeMap<String, String>,
}

/// Index of everything the commands wrote into one output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Configuration of the most recent command.
    pub config: Option<RunConfig>,
    pub commands: BTreeMap<String, CommandEntry>,
}

impl RunManifest {
    pub fn load(out: &Path) -> Result<Self, PipelineError> {
        let path = out.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(RunManifest::default());
        }
        let text = fs::read_to_string(&path).map_err(|source| PipelineError::Io {
            path: path.clone(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Parse {
            path,
            line: e.line(),
            message: e.to_string(),
        })
    }
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| PipelineError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

fn jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("records serialize");
        out.push(b'\n');
    }
    out
}

/// Collects a command's artifacts and writes the manifest entry.
struct Bundle<'a> {
    command: &'static str,
    config: &'a RunConfig,
    started: u64,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl<'a> Bundle<'a> {
    fn new(command: &'static str, config: &'a RunConfig) -> Result<Self, PipelineError> {
        fs::create_dir_all(&config.out).map_err(io_err(&config.out))?;
        Ok(Bundle {
            command,
            config,
            started: now_unix(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    fn input(&mut self, path: &Path) {
        if !self.inputs.iter().any(|p| p == path) {
            self.inputs.push(path.to_path_buf());
        }
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let path = self.config.out.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        self.outputs.push(path);
        Ok(())
    }

    fn finish(self, errors: Vec<ErrorRecord>) -> Result<CommandOutcome, PipelineError> {
        let mut me = self;
        me.write(&format!("{}_errors.jsonl", me.command), &jsonl(&errors))?;
        let mut entry = CommandEntry {
            started_unix: me.started,
            finished_unix: now_unix(),
            errors: errors.len(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        };
        for p in &me.inputs {
            entry
                .inputs
                .insert(p.display().to_string(), sha256_file(p).map_err(io_err(p))?);
        }
        for p in &me.outputs {
            let name = p
                .strip_prefix(&me.config.out)
                .unwrap_or(p)
                .display()
                .to_string();
            entry.outputs.insert(name, sha256_file(p).map_err(io_err(p))?);
        }
        let mut manifest = RunManifest::load(&me.config.out)?;
        manifest.config = Some(me.config.clone());
        manifest.commands.insert(me.command.to_string(), entry);
        let path = me.config.out.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(io_err(&path))?;
        if !errors.is_empty() {
            warn!("{}: {} item(s) failed, see {}_errors.jsonl", me.command, errors.len(), me.command);
        }
        info!("{}: wrote {} file(s) to {}", me.command, me.outputs.len(), me.config.out.display());
        Ok(CommandOutcome {
            command: me.command,
            outputs: me.outputs,
            errors,
        })
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))
}

fn working_set<'d>(config: &RunConfig, dataset: &'d Dataset) -> Vec<&'d Instance> {
    dataset
        .split(config.split)
        .take(config.limit.unwrap_or(usize::MAX))
        .collect()
}

fn load_corpus(config: &RunConfig, bundle: &mut Bundle) -> Result<Dataset, PipelineError> {
    let path = config.require_corpus()?;
    bundle.input(path);
    Ok(load_dataset(path)?)
}

fn require_file(path: &Path) -> Result<(), PipelineError> {
    if path.exists() {
        Ok(())
    } else {
        Err(PipelineError::MissingInput(vec![path.display().to_string()]))
    }
}

/// Per-request generation seed derived from the run seed and the request.
pub fn request_seed(run_seed: u64, instance_id: &str, strategy: Strategy, control: Option<QuestionType>) -> u64 {
    let mut h = Sha256::new();
    h.update(run_seed.to_le_bytes());
    for part in [
        instance_id,
        &format!("{strategy:?}"),
        control.map_or("-", QuestionType::as_str),
    ] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("digest is 32 bytes"))
}

fn generation_jobs(strategies: &[StrategyName]) -> Vec<(Strategy, Option<QuestionType>)> {
    let mut jobs = Vec::new();
    if strategies.contains(&StrategyName::Base) {
        jobs.push((Strategy::Base, None));
    }
    if strategies.contains(&StrategyName::Span) {
        jobs.push((Strategy::Span, None));
    }
    if strategies.iter().any(|s| s.needs_typed()) {
        jobs.extend(QuestionType::GENERATABLE.map(|t| (Strategy::Type, Some(t))));
    }
    jobs
}

fn generate_one(
    backend: &dyn ModelBackend,
    config: &RunConfig,
    inst: &Instance,
    strategy: Strategy,
    control: Option<QuestionType>,
) -> Result<GenerationRecord, ErrorRecord> {
    let label = control.map_or_else(|| format!("{strategy:?}").to_lowercase(), |t| t.to_string());
    let fail = |e: &dyn std::fmt::Display| ErrorRecord::new(&inst.instance_id, Some(&label), e);
    let input = build_model_input(inst, strategy, control).map_err(|e| fail(&e))?;
    let req = GenerationRequest {
        input: input.text,
        params: config.decode,
        seed: Some(request_seed(config.seed, &inst.instance_id, strategy, control)),
    };
    let resp = backend.generate(&req).map_err(|e| fail(&e))?;
    Ok(GenerationRecord {
        instance_id: inst.instance_id.clone(),
        strategy,
        control,
        question: resp.question,
        token_count: resp.token_count,
    })
}

/// Writes `generations.jsonl`: one question per instance for base/span and
/// one per (instance, generatable type) when any typed strategy is set.
pub fn cmd_generate(config: &RunConfig) -> Result<CommandOutcome, PipelineError> {
    config.validate()?;
    let jobs = generation_jobs(config.require_strategies()?);
    let mut bundle = Bundle::new("generate", config)?;
    let dataset = load_corpus(config, &mut bundle)?;
    let backend = config.backend()?;
    let instances = working_set(config, &dataset);
    let results: Vec<Result<GenerationRecord, ErrorRecord>> = pool(config.workers)?.install(|| {
        instances
            .par_iter()
            .flat_map_iter(|inst| jobs.iter().map(|&(s, c)| generate_one(&*backend, config, inst, s, c)))
            .collect()
    });
    let (records, errors) = partition(results);
    bundle.write("generations.jsonl", &jsonl(&records))?;
    bundle.finish(errors)
}

fn partition<T>(results: Vec<Result<T, ErrorRecord>>) -> (Vec<T>, Vec<ErrorRecord>) {
    let mut ok = Vec::new();
    let mut err = Vec::new();
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => err.push(e),
        }
    }
    (ok, err)
}

#[derive(Default)]
struct InstanceGenerations {
    base: Option<String>,
    span: Option<String>,
    typed: Vec<(QuestionType, String)>,
}

fn index_generations(records: Vec<GenerationRecord>) -> HashMap<String, InstanceGenerations> {
    let mut map: HashMap<String, InstanceGenerations> = HashMap::new();
    for r in records {
        let entry = map.entry(r.instance_id).or_default();
        match (r.strategy, r.control) {
            (Strategy::Base, _) => entry.base = Some(r.question),
            (Strategy::Span, _) => entry.span = Some(r.question),
            (Strategy::Type, Some(t)) => entry.typed.push((t, r.question)),
            (Strategy::Type, None) => {}
        }
    }
    map
}

fn select_one(
    backend: &dyn ModelBackend,
    inst: &Instance,
    gens: Option<&InstanceGenerations>,
    strategy: StrategyName,
) -> Result<SelectionRecord, ErrorRecord> {
    let fail = |e: &dyn std::fmt::Display| ErrorRecord::new(&inst.instance_id, Some(strategy.as_str()), e);
    let empty = InstanceGenerations::default();
    let gens = gens.unwrap_or(&empty);
    let typed = || TypedQuestions::new(gens.typed.iter().cloned()).map_err(|e| fail(&e));
    let mut rec = SelectionRecord {
        instance_id: inst.instance_id.clone(),
        strategy,
        question: String::new(),
        chosen_type: None,
        predicted_type: None,
        tally: None,
    };
    match strategy {
        StrategyName::Base | StrategyName::Span => {
            let q = if strategy == StrategyName::Base { &gens.base } else { &gens.span };
            rec.question = q
                .clone()
                .ok_or_else(|| fail(&format!("no {strategy} generation for this instance")))?;
        }
        StrategyName::TypeS => {
            let tq = typed()?;
            let t = select_type_s(&tq, |q| backend.inquisitiveness(q)).map_err(|e| fail(&e))?;
            rec.question = tq.get(t).to_string();
            rec.chosen_type = Some(t);
        }
        StrategyName::TypeR => {
            let tq = typed()?;
            let (t, tally) = select_type_r(&inst.source, &tq, |s, a, b| {
                backend.prefer(&PreferenceRequest::new(s, a, b))
            })
            .map_err(|e| fail(&e))?;
            rec.question = tq.get(t).to_string();
            rec.chosen_type = Some(t);
            rec.tally = Some(tally);
        }
        StrategyName::TypeO => {
            let sel = select_type_o(inst, &inst.question, |x| backend.classify_type(x)).map_err(|e| fail(&e))?;
            rec.question = gens
                .typed
                .iter()
                .find(|(t, _)| *t == sel.chosen)
                .map(|(_, q)| q.clone())
                .ok_or_else(|| fail(&RankingError::MissingType(sel.chosen)))?;
            rec.chosen_type = Some(sel.chosen);
            rec.predicted_type = Some(sel.predicted);
        }
        StrategyName::PerType => unreachable!("per_type does not select"),
    }
    Ok(rec)
}

/// Writes `selections.jsonl`: one record per (instance, selecting strategy).
pub fn cmd_select(config: &RunConfig) -> Result<CommandOutcome, PipelineError> {
    config.validate()?;
    let strategies: Vec<StrategyName> = config
        .require_strategies()?
        .iter()
        .copied()
        .filter(|s| s.selects())
        .collect();
    let mut bundle = Bundle::new("select", config)?;
    let dataset = load_corpus(config, &mut bundle)?;
    let gen_path = config.generations_path();
    require_file(&gen_path)?;
    bundle.input(&gen_path);
    let generations = index_generations(read_jsonl(&gen_path)?);
    let backend = config.backend()?;
    let backend: &dyn ModelBackend = &*backend;
    let instances = working_set(config, &dataset);
    let results: Vec<Result<SelectionRecord, ErrorRecord>> = pool(config.workers)?.install(|| {
        instances
            .par_iter()
            .flat_map_iter(|inst| {
                let gens = generations.get(&inst.instance_id);
                strategies
                    .iter()
                    .map(move |&s| select_one(backend, inst, gens, s))
                    .collect::<Vec<_>>()
            })
            .collect()
    });
    let (records, errors) = partition(results);
    bundle.write("selections.jsonl", &jsonl(&records))?;
    bundle.finish(errors)
}

fn score_question(
    backend: &dyn ModelBackend,
    inst: &Instance,
    question: &str,
    label: &str,
) -> Result<(ProbDist, Vec<f64>), ErrorRecord> {
    let fail = |e: &dyn std::fmt::Display| ErrorRecord::new(&inst.instance_id, Some(label), e);
    let input = build_classifier_input(inst, question).map_err(|e| fail(&e))?;
    let dist = backend.classify_type(&input).map_err(|e| fail(&e))?;
    let logprobs = backend.score_tokens(question).map_err(|e| fail(&e))?;
    Ok((dist, logprobs))
}

fn read_f_bert(path: &Path) -> Result<HashMap<String, f64>, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| PipelineError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let (model, value) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected model<TAB>score".into()))?;
        let v: f64 = value.trim().parse().map_err(|e| parse_err(format!("{e}")))?;
        out.insert(model.trim().to_string(), v);
    }
    Ok(out)
}

/// Scores each selection run against the corpus references and writes
/// `metrics_run<N>.tsv`/`.md` per run plus `metrics_summary.tsv` with the
/// mean and sample standard deviation over runs. `runs` overrides the
/// configured selection files.
pub fn cmd_evaluate(config: &RunConfig, runs: &[PathBuf]) -> Result<CommandOutcome, PipelineError> {
    config.validate()?;
    let paths = if runs.is_empty() {
        config.selection_paths()
    } else {
        runs.to_vec()
    };
    let missing: Vec<String> = paths
        .iter()
        .filter(|p| !p.exists())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(PipelineError::MissingInput(missing));
    }
    let mut bundle = Bundle::new("evaluate", config)?;
    let dataset = load_corpus(config, &mut bundle)?;
    let f_bert = match &config.f_bert {
        Some(p) => {
            require_file(p)?;
            bundle.input(p);
            read_f_bert(p)?
        }
        None => HashMap::new(),
    };
    let train: Vec<TokenSeq> = dataset
        .split(crate::corpus::Split::Train)
        .map(|i| tokenize(&i.question))
        .collect();
    let backend = config.backend()?;
    let pool = pool(config.workers)?;
    let mut errors = Vec::new();
    let mut per_run: Vec<Vec<MetricReport>> = Vec::new();

    // Loaded up front so a misaligned later run fails before anything is written.
    let mut loaded = Vec::new();
    for path in &paths {
        bundle.input(path);
        let sels: Vec<SelectionRecord> = read_jsonl(path)?;
        if sels.is_empty() {
            return Err(PipelineError::Alignment(format!("{} has no selections", path.display())));
        }
        for s in &sels {
            if dataset.get(&s.instance_id).is_none() {
                return Err(PipelineError::Alignment(format!(
                    "{}: instance {} is not in the corpus",
                    path.display(),
                    s.instance_id
                )));
            }
        }
        loaded.push(sels);
    }

    for (run, sels) in loaded.iter().enumerate() {
        let mut ref_ids: Vec<&str> = Vec::new();
        for s in sels {
            if !ref_ids.contains(&s.instance_id.as_str()) {
                ref_ids.push(&s.instance_id);
            }
        }
        let items: Vec<(&str, &Instance, &str)> = sels
            .iter()
            .map(|s| (s.strategy.as_str(), dataset.get(&s.instance_id).expect("aligned"), s.question.as_str()))
            .chain(ref_ids.iter().map(|id| {
                let inst = dataset.get(id).expect("aligned");
                ("human", inst, inst.question.as_str())
            }))
            .collect();
        let scored: Vec<Result<(ProbDist, Vec<f64>), ErrorRecord>> = pool.install(|| {
            items
                .par_iter()
                .map(|(label, inst, q)| score_question(&*backend, inst, q, label))
                .collect()
        });

        let mut groups: BTreeMap<(usize, &str), Vec<ScoredQuestion>> = BTreeMap::new();
        for ((label, inst, q), res) in items.iter().zip(&scored) {
            match res {
                Ok((dist, lps)) => {
                    let order = StrategyName::ALL
                        .iter()
                        .position(|s| s.as_str() == *label)
                        .unwrap_or(StrategyName::ALL.len());
                    groups.entry((order, label)).or_default().push(ScoredQuestion {
                        instance: inst,
                        question: q,
                        type_dist: *dist,
                        token_logprobs: lps,
                    });
                }
                Err(e) => errors.push(e.clone()),
            }
        }
        let mut reports = Vec::new();
        for ((_, label), qs) in &groups {
            let with_overlap = *label != "human";
            reports.push(build_report(label, qs, &train, with_overlap, f_bert.get(*label).copied())?);
        }
        let mut tsv = Vec::new();
        write_reports_tsv(&reports, &mut tsv).expect("in-memory write");
        bundle.write(&format!("metrics_run{}.tsv", run + 1), &tsv)?;
        bundle.write(&format!("metrics_run{}.md", run + 1), format_reports_table(&reports).as_bytes())?;
        per_run.push(reports);
    }

    bundle.write("metrics_summary.tsv", summary_tsv(&per_run)?.as_bytes())?;
    bundle.finish(errors)
}

fn summary_tsv(per_run: &[Vec<MetricReport>]) -> Result<String, PipelineError> {
    let mut models: Vec<&str> = Vec::new();
    for r in per_run.iter().flatten() {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    let mut out = String::from("model\truns");
    for col in &crate::metrics::REPORT_COLUMNS[1..] {
        let _ = write!(out, "\t{col}_mean\t{col}_std");
    }
    out.push('\n');
    for m in models {
        let runs: Vec<MetricReport> = per_run
            .iter()
            .flatten()
            .filter(|r| r.model == m)
            .cloned()
            .collect();
        let _ = write!(out, "{m}\t{}", runs.len());
        for (_, s) in summarize_reports(&runs)? {
            match s {
                Some(s) => {
                    let _ = write!(out, "\t{:.6}\t{:.6}", s.mean, s.std);
                }
                None => out.push_str("\t-\t-"),
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Ranker training data. Summary written next to the pair files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankerConfig {
    pub train_examples: usize,
    pub dev_examples: usize,
    pub epochs: u64,
    pub batch_size: u64,
    pub warmup_updates: Option<u64>,
}

/// Builds ranker examples from expert rankings over the per-type
/// generations and writes `pairs.jsonl`, the seeded `pairs_train.jsonl` /
/// `pairs_dev.jsonl` split and `ranker_config.json`.
pub fn cmd_pairs(config: &RunConfig) -> Result<CommandOutcome, PipelineError> {
    config.validate()?;
    let rankings = config
        .rankings
        .clone()
        .ok_or_else(|| PipelineError::MissingInput(vec!["rankings".into()]))?;
    require_file(&rankings)?;
    let gen_path = config.generations_path();
    require_file(&gen_path)?;
    let mut bundle = Bundle::new("pairs", config)?;
    let dataset = load_corpus(config, &mut bundle)?;
    bundle.input(&rankings);
    bundle.input(&gen_path);
    let annotations: Vec<RankingAnnotation> = read_jsonl(&rankings)?;
    let generations: Vec<GenerationRecord> = read_jsonl(&gen_path)?;
    let questions: HashMap<(String, QuestionType), String> = generations
        .into_iter()
        .filter_map(|g| g.control.map(|t| ((g.instance_id, t), g.question)))
        .collect();
    let sources: HashMap<String, String> = dataset
        .instances()
        .iter()
        .map(|i| (i.instance_id.clone(), i.source.clone()))
        .collect();
    let mut examples = Vec::new();
    let mut errors = Vec::new();
    for ann in &annotations {
        match build_pair_dataset(std::slice::from_ref(ann), &questions, &sources) {
            Ok(ex) => examples.extend(ex),
            Err(e) => errors.push(ErrorRecord::new(&ann.instance_id, Some(&ann.annotator_id), e)),
        }
    }
    let train_count = ((examples.len() as f64 * config.train_fraction) - 1e-9).ceil().max(0.0) as usize;
    let (train, dev) = split_pairs(&examples, train_count.min(examples.len()), config.seed)?;
    let warmup = if train.is_empty() {
        None
    } else {
        Some(
            warmup_updates(train.len() as u64, config.epochs, config.batch_size)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?,
        )
    };
    let summary = RankerConfig {
        train_examples: train.len(),
        dev_examples: dev.len(),
        epochs: config.epochs,
        batch_size: config.batch_size,
        warmup_updates: warmup,
    };
    bundle.write("pairs.jsonl", &jsonl(&examples))?;
    bundle.write("pairs_train.jsonl", &jsonl(&train))?;
    bundle.write("pairs_dev.jsonl", &jsonl(&dev))?;
    let mut text = serde_json::to_string_pretty(&summary).expect("serializes");
    text.push('\n');
    bundle.write("ranker_config.json", text.as_bytes())?;
    bundle.finish(errors)
}

#[derive(Serialize)]
struct MajorityRecord<'a> {
    question_id: &'a str,
    #[serde(rename = "type")]
    qtype: Option<QuestionType>,
}

fn load_type_labels(
    path: &Path,
    bundle: &mut Bundle,
    errors: &mut Vec<ErrorRecord>,
) -> Result<Vec<TypeLabelRecord>, PipelineError> {
    bundle.input(path);
    let records: Vec<TypeLabelRecord> = read_jsonl(path)?;
    Ok(records
        .into_iter()
        .filter(|r| match r.validate() {
            Ok(()) => true,
            Err(e) => {
                errors.push(ErrorRecord::new(&r.question_id, None, e));
                false
            }
        })
        .collect())
}

fn load_rankings(
    path: &Path,
    bundle: &mut Bundle,
    errors: &mut Vec<ErrorRecord>,
) -> Result<Vec<RankingAnnotation>, PipelineError> {
    bundle.input(path);
    let records: Vec<RankingAnnotation> = read_jsonl(path)?;
    Ok(records
        .into_iter()
        .filter(|r| match r.validate() {
            Ok(()) => true,
            Err(e) => {
                errors.push(ErrorRecord::new(&r.instance_id, Some(&r.annotator_id), e));
                false
            }
        })
        .collect())
}

fn kappa_tsv(records: &[TypeLabelRecord]) -> String {
    let mut out = String::from("annotator_a\tannotator_b\titems\tkappa\n");
    for row in pairwise_kappa(records) {
        let _ = writeln!(out, "{}\t{}\t{}\t{:.6}", row.annotator_a, row.annotator_b, row.items, row.kappa);
    }
    out
}

fn precision_tsv(rankings: &[RankingAnnotation], errors: &mut Vec<ErrorRecord>) -> String {
    let mut out = String::from("k\tfrom\tto\tinstances\tprecision\n");
    for k in 1..=3 {
        match precision_at_k_report(rankings, k) {
            Ok(rep) => {
                for d in &rep.directions {
                    let _ = writeln!(out, "{k}\t{}\t{}\t{}\t{:.6}", d.from, d.to, d.instances, d.precision);
                }
                let _ = writeln!(out, "{k}\tmean\tmean\t-\t{:.6}", rep.mean);
            }
            Err(e) => errors.push(ErrorRecord {
                instance_id: None,
                strategy: None,
                message: format!("precision@{k}: {e}"),
            }),
        }
    }
    out
}

fn optional_inputs(named: &[(&str, Option<&PathBuf>)]) -> Result<(), PipelineError> {
    let missing: Vec<String> = named
        .iter()
        .filter_map(|(_, p)| p.filter(|p| !p.exists()).map(|p| p.display().to_string()))
        .collect();
    if !missing.is_empty() {
        return Err(PipelineError::MissingInput(missing));
    }
    if named.iter().all(|(_, p)| p.is_none()) {
        return Err(PipelineError::MissingInput(named.iter().map(|(n, _)| n.to_string()).collect()));
    }
    Ok(())
}

/// Inter-annotator statistics: `kappa.tsv` and `majority.jsonl` from type
/// labels, `precision.tsv` (k = 1..3) from expert rankings.
pub fn cmd_agreement(config: &RunConfig) -> Result<CommandOutcome, PipelineError> {
    config.validate()?;
    optional_inputs(&[
        ("type_labels", config.type_labels.as_ref()),
        ("rankings", config.rankings.as_ref()),
    ])?;
    let mut bundle = Bundle::new("agreement", config)?;
    let mut errors = Vec::new();
    if let Some(p) = &config.type_labels {
        let records = load_type_labels(p, &mut bundle, &mut errors)?;
        bundle.write("kappa.tsv", kappa_tsv(&records).as_bytes())?;
        let majority: Vec<MajorityRecord> = records
            .iter()
            .map(|r| MajorityRecord {
                question_id: &r.question_id,
                qtype: match majority_vote(r) {
                    MajorityOutcome::Resolved(t) => Some(t),
                    MajorityOutcome::Unresolved => None,
                },
            })
            .collect();
        bundle.write("majority.jsonl", &jsonl(&majority))?;
    }
    if let Some(p) = &config.rankings {
        let rankings = load_rankings(p, &mut bundle, &mut errors)?;
        bundle.write("precision.tsv", precision_tsv(&rankings, &mut errors).as_bytes())?;
    }
    bundle.finish(errors)
}

/// Table bundle: leading n-gram tables and the type distribution from type
/// labels, the controllability matrix from per-type generations, agreement
/// statistics and the human-evaluation table. Each table is written for
/// whichever inputs are configured; generations are picked up from the
/// output directory when present.
pub fn cmd_report(config: &RunConfig) -> Result<CommandOutcome, PipelineError> {
    config.validate()?;
    let default_gen = config.out.join("generations.jsonl");
    let generations = config
        .generations
        .clone()
        .or_else(|| default_gen.exists().then_some(default_gen));
    optional_inputs(&[
        ("type_labels", config.type_labels.as_ref()),
        ("generations", generations.as_ref()),
        ("rankings", config.rankings.as_ref()),
        ("human_eval", config.human_eval.as_ref()),
    ])?;
    let mut bundle = Bundle::new("report", config)?;
    let mut errors = Vec::new();
    let mut md = String::from("# Report\n");

    if let Some(p) = &config.type_labels {
        let records = load_type_labels(p, &mut bundle, &mut errors)?;
        let mut labeled: Vec<(QuestionType, &str)> = Vec::new();
        let mut counts: BTreeMap<QuestionType, usize> = BTreeMap::new();
        let mut unresolved = 0usize;
        for r in &records {
            match majority_vote(r) {
                MajorityOutcome::Resolved(t) => {
                    *counts.entry(t).or_default() += 1;
                    if let Some(q) = &r.question {
                        labeled.push((t, q));
                    }
                }
                MajorityOutcome::Unresolved => unresolved += 1,
            }
        }
        let resolved: usize = counts.values().sum();
        let mut dist = String::from("type\tcount\tshare\n");
        for t in REPORT_TYPE_ORDER {
            let c = counts.get(&t).copied().unwrap_or(0);
            let share = if resolved > 0 { c as f64 / resolved as f64 } else { 0.0 };
            let _ = writeln!(dist, "{t}\t{c}\t{share:.4}");
        }
        let _ = writeln!(dist, "unresolved\t{unresolved}\t-");
        bundle.write("type_distribution.tsv", dist.as_bytes())?;
        let _ = write!(md, "\n## Type distribution\n\n```\n{dist}```\n");

        for (n, name) in [(1, "leading_unigrams.tsv"), (2, "leading_bigrams.tsv")] {
            let table = leading_ngram_table(&labeled, n)?;
            let mut tsv = Vec::new();
            table.write_tsv(&mut tsv).expect("in-memory write");
            bundle.write(name, &tsv)?;
            let _ = write!(md, "\n## Leading {n}-grams\n\n{}", table.to_markdown(5));
        }
        let kappa = kappa_tsv(&records);
        bundle.write("kappa.tsv", kappa.as_bytes())?;
        let _ = write!(md, "\n## Pairwise kappa\n\n```\n{kappa}```\n");
    }

    if let Some(p) = &generations {
        bundle.input(p);
        let records: Vec<GenerationRecord> = read_jsonl(p)?;
        let dataset = match &config.corpus {
            Some(c) => {
                bundle.input(c);
                Some(load_dataset(c)?)
            }
            None => None,
        };
        let typed: Vec<&GenerationRecord> = records.iter().filter(|r| r.control.is_some()).collect();
        let backend = config.backend()?;
        let predicted: Vec<Result<QuestionType, ErrorRecord>> = pool(config.workers)?.install(|| {
            typed
                .par_iter()
                .map(|r| {
                    let label = r.control.map(QuestionType::as_str);
                    let fail = |e: &dyn std::fmt::Display| ErrorRecord::new(&r.instance_id, label, e);
                    let input = match dataset.as_ref().and_then(|d| d.get(&r.instance_id)) {
                        Some(inst) => build_classifier_input(inst, &r.question).map_err(|e| fail(&e))?,
                        None => r.question.clone(),
                    };
                    backend.classify_type(&input).map(|d| d.argmax()).map_err(|e| fail(&e))
                })
                .collect()
        });
        let mut req = Vec::new();
        let mut pred = Vec::new();
        for (r, p) in typed.iter().zip(predicted) {
            match p {
                Ok(t) => {
                    req.push(r.control.expect("typed"));
                    pred.push(t);
                }
                Err(e) => errors.push(e),
            }
        }
        let matrix = controllability(&req, &pred)?;
        let mut tsv = Vec::new();
        matrix.write_tsv(&mut tsv).expect("in-memory write");
        bundle.write("controllability.tsv", &tsv)?;
        let _ = write!(md, "\n## Controllability\n\n```\n{}```\n", String::from_utf8_lossy(&tsv));
    }

    if let Some(p) = &config.rankings {
        let rankings = load_rankings(p, &mut bundle, &mut errors)?;
        let tsv = precision_tsv(&rankings, &mut errors);
        bundle.write("precision.tsv", tsv.as_bytes())?;
        let _ = write!(md, "\n## Ranking precision@k\n\n```\n{tsv}```\n");
    }

    if let Some(p) = &config.human_eval {
        bundle.input(p);
        let judgments: Vec<HumanJudgment> = read_jsonl(p)?;
        let table = aggregate_human_eval(&judgments);
        let mut tsv = Vec::new();
        table.write_tsv(&mut tsv).expect("in-memory write");
        bundle.write("human_eval.tsv", &tsv)?;
        let _ = write!(md, "\n## Human evaluation\n\n```\n{}```\n", String::from_utf8_lossy(&tsv));
    }

    bundle.write("report.md", md.as_bytes())?;
    bundle.finish(errors)
}

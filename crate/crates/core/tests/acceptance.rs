//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always show up in `cargo test` output.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::panic;
use std::path::Path;
use std::time::{Duration, Instant};

use inqpipe::annotation::{aggregate_human_eval, cohen_kappa, Aspect, HumanJudgment, Response, TypeLabel, TypeLabelRecord};
use inqpipe::config::{RunConfig, StrategyName};
use inqpipe::corpus::{build_model_input, Instance, QuestionType, Split, Strategy, NO_CONTEXT, SEP};
use inqpipe::metrics::{
    article_n, corpus_bleu, meteor_lite, perplexity, rouge_l, span_overlap, train_n, type_entropy, ProbDist,
};
use inqpipe::modelio::{warmup_updates, ModelBackend, PreferenceRequest, StubBackend};
use inqpipe::pipeline::{cmd_evaluate, cmd_generate, cmd_report, cmd_select, RunManifest};
use inqpipe::ranking::{build_pair_dataset, select_pairs, select_type_r, PairLabel, RankingAnnotation, TypedQuestions};
use inqpipe::textproc::TokenSeq;
use proptest::prelude::*;
use proptest::strategy::Strategy as _;
use proptest::test_runner::{Config as PropConfig, TestCaseError, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

const VOCAB: [&str; 9] = ["why", "did", "the", "plan", "fail", "who", "said", "it", "now"];

fn words(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> Vec<String> {
    let n = rng.gen_range(lo..=hi);
    (0..n).map(|_| VOCAB[rng.gen_range(0..VOCAB.len())].to_string()).collect()
}

fn seq(tokens: &[String]) -> TokenSeq {
    tokens.iter().cloned().collect()
}

fn frac(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Brute force: does `window` occur at any offset of any reference sequence?
fn occurs(window: &[String], refs: &[&[String]]) -> bool {
    let n = window.len();
    for r in refs {
        if r.len() < n {
            continue;
        }
        for j in 0..=(r.len() - n) {
            let mut same = true;
            for k in 0..n {
                if window[k] != r[j + k] {
                    same = false;
                    break;
                }
            }
            if same {
                return true;
            }
        }
    }
    false
}

fn oracle_overlap(questions: &[Vec<String>], refs: &[&[String]], n: usize) -> (usize, usize) {
    let (mut hits, mut total) = (0, 0);
    for q in questions {
        if q.len() < n {
            continue;
        }
        for i in 0..=(q.len() - n) {
            total += 1;
            if occurs(&q[i..i + n], refs) {
                hits += 1;
            }
        }
    }
    (hits, total)
}

fn oracle_span(question: &[String], span: &[String]) -> f64 {
    let mut unique: Vec<&String> = Vec::new();
    for w in span {
        if !unique.contains(&w) {
            unique.push(w);
        }
    }
    let present = unique.iter().filter(|w| question.contains(w)).count();
    present as f64 / unique.len() as f64
}

fn instance(context: &str, source: &str, span_start: usize, span_end: usize) -> Instance {
    Instance {
        instance_id: "x".into(),
        article_id: "a".into(),
        sentence_index: 2,
        context: context.into(),
        source: source.into(),
        span_start,
        span_end,
        question: "why?".into(),
        split: Split::Test,
        type_label: None,
    }
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for corpus in 0..200 {
        let n = rng.gen_range(1..=4);
        let generated: Vec<Vec<String>> = (0..rng.gen_range(1..=6)).map(|_| words(&mut rng, 0, 12)).collect();
        let train: Vec<Vec<String>> = (0..rng.gen_range(0..=8)).map(|_| words(&mut rng, 1, 12)).collect();
        let gen_seqs: Vec<TokenSeq> = generated.iter().map(|g| seq(g)).collect();
        let train_seqs: Vec<TokenSeq> = train.iter().map(|t| seq(t)).collect();
        let train_refs: Vec<&[String]> = train.iter().map(|t| &t[..]).collect();
        let (h, t) = oracle_overlap(&generated, &train_refs, n);
        let got = train_n(&gen_seqs, &train_seqs, n).map_err(err)?;
        ensure!(got.to_bits() == frac(h, t).to_bits(), "corpus {corpus}: train_{n} {got} != {h}/{t}");

        let context = words(&mut rng, 0, 15);
        let source = words(&mut rng, 1, 15);
        let s0 = rng.gen_range(0..source.len());
        let s1 = rng.gen_range(s0 + 1..=source.len());
        let char_start: usize = source[..s0].iter().map(|w| w.len() + 1).sum();
        let span_text = source[s0..s1].join(" ");
        let inst = instance(&context.join(" "), &source.join(" "), char_start, char_start + span_text.len());
        ensure!(inst.span() == span_text, "corpus {corpus}: span offsets");
        for g in &generated {
            let (h, t) = oracle_overlap(std::slice::from_ref(g), &[&context[..], &source[..]], n);
            let got = article_n(g, &inst, n).map_err(err)?;
            ensure!(got.to_bits() == frac(h, t).to_bits(), "corpus {corpus}: article_{n} {got} != {h}/{t}");
            let want = oracle_span(g, &source[s0..s1]);
            let got = span_overlap(g, &span_text).map_err(err)?;
            ensure!(got.to_bits() == want.to_bits(), "corpus {corpus}: span {got} != {want}");
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(())
}

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pairs: Vec<(TokenSeq, TokenSeq)> = (0..25)
        .map(|_| {
            let s = seq(&words(&mut rng, 4, 12));
            (s.clone(), s)
        })
        .collect();
    for max_n in 1..=4 {
        let b = corpus_bleu(&pairs, max_n).map_err(err)?;
        ensure!(close(b, 1.0, 1e-12), "identical BLEU-{max_n} = {b}");
    }
    for (c, r) in &pairs {
        ensure!(rouge_l(c, r) == 1.0, "identical ROUGE-L = {}", rouge_l(c, r));
    }
    let clipped = corpus_bleu(&[(seq(&toks("the the the")), seq(&toks("the cat")))], 1).map_err(err)?;
    ensure!(close(clipped, 1.0 / 3.0, 1e-9), "clipped BLEU {clipped}");
    let r = rouge_l(&toks("the cat sat on the mat"), &toks("the cat on the mat"));
    ensure!(close(r, 10.0 / 11.0, 1e-9), "ROUGE-L {r}");
    let m = meteor_lite(&toks("the cat"), &toks("cat the"));
    ensure!(close(m, 0.5, 1e-9), "METEOR swap {m}");
    Ok(())
}

fn ranking(ranked: &[QuestionType]) -> RankingAnnotation {
    RankingAnnotation {
        instance_id: "s".into(),
        annotator_id: "e".into(),
        ranks: ranked.iter().enumerate().map(|(i, t)| (*t, i as u32 + 1)).collect::<BTreeMap<_, _>>(),
    }
}

fn pair_lookups() -> (HashMap<(String, QuestionType), String>, HashMap<String, String>) {
    let questions = QuestionType::GENERATABLE
        .iter()
        .map(|t| (("s".to_string(), *t), format!("{t} question?")))
        .collect();
    let sources = HashMap::from([("s".to_string(), "A source sentence.".to_string())]);
    (questions, sources)
}

fn criterion_3() -> Check {
    use QuestionType::*;
    let (questions, sources) = pair_lookups();
    for (ranked, pairs, examples) in [
        (vec![Explanation, Background, Elaboration], 10, 20),
        (vec![Explanation, Elaboration, Background, Definition, Instantiation], 11, 22),
    ] {
        let ann = ranking(&ranked);
        ensure!(select_pairs(&ann).len() == pairs, "{} ranked: {} pairs", ranked.len(), select_pairs(&ann).len());
        let ex = build_pair_dataset(&[ann], &questions, &sources).map_err(err)?;
        let pos = ex.iter().filter(|e| e.label == PairLabel::Positive).count();
        ensure!(ex.len() == examples && 2 * pos == examples, "{} examples, {pos} positive", ex.len());
    }

    let mut runner = TestRunner::new_with_rng(
        PropConfig {
            cases: 512,
            failure_persistence: None,
            ..PropConfig::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    let strategy = (Just(QuestionType::GENERATABLE.to_vec()).prop_shuffle(), 3usize..=5);
    runner
        .run(&strategy, |(order, n)| {
            let ann = ranking(&order[..n]);
            let rank_of = |t: QuestionType| ann.ranks.get(&t).copied();
            let pairs = select_pairs(&ann);
            let gap_pairs = (1..=n).map(|i| n.saturating_sub(i + 1)).sum::<usize>();
            prop_assert_eq!(pairs.len(), n * (6 - n) + gap_pairs);
            for (better, worse) in &pairs {
                let rb = rank_of(*better);
                prop_assert!(rb.is_some(), "better side must be ranked");
                if let Some(rw) = rank_of(*worse) {
                    prop_assert!(rw >= rb.unwrap() + 2, "rank gap below 2");
                }
            }
            let ex = build_pair_dataset(std::slice::from_ref(&ann), &questions, &sources)
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(ex.len() % 2, 0);
            let pos = ex.iter().filter(|e| e.label == PairLabel::Positive).count();
            prop_assert_eq!(2 * pos, ex.len());
            for e in &ex {
                let twin = ex.iter().any(|o| o.first == e.second && o.second == e.first && o.label != e.label);
                prop_assert!(twin, "missing reversed twin");
            }
            Ok(())
        })
        .map_err(err)
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..1000 {
        let stub = StubBackend::new(rng.gen());
        let source = format!("Source sentence number {case}.");
        let mut items: Vec<(QuestionType, String)> = QuestionType::GENERATABLE
            .iter()
            .map(|t| (*t, format!("{} {}?", words(&mut rng, 2, 6).join(" "), rng.gen::<u32>())))
            .collect();
        let prefer = |s: &str, a: &str, b: &str| stub.prefer(&PreferenceRequest::new(s, a, b));
        let expected = items
            .iter()
            .max_by_key(|(_, q)| stub.preference_key(q))
            .map(|(t, q)| (*t, q.clone()))
            .unwrap();

        let (chosen, tally) =
            select_type_r(&source, &TypedQuestions::new(items.clone()).map_err(err)?, prefer).map_err(err)?;
        ensure!(chosen == expected.0, "case {case}: chose {chosen}, stub maximum is {}", expected.0);
        ensure!(tally.total() == 30, "case {case}: tally total {}", tally.total());
        ensure!(tally.wins.values().all(|w| *w <= 10), "case {case}: tally out of range");
        ensure!(tally.wins[&chosen] == 10, "case {case}: winner has {} votes", tally.wins[&chosen]);

        items.shuffle(&mut rng);
        let (again, tally2) =
            select_type_r(&source, &TypedQuestions::new(items.clone()).map_err(err)?, prefer).map_err(err)?;
        ensure!(again == chosen && tally2 == tally, "case {case}: presentation order changed the result");

        let mut texts: Vec<String> = items.iter().map(|(_, q)| q.clone()).collect();
        texts.shuffle(&mut rng);
        let relabeled: Vec<(QuestionType, String)> = items.iter().map(|(t, _)| *t).zip(texts).collect();
        let tq = TypedQuestions::new(relabeled).map_err(err)?;
        let (moved, _) = select_type_r(&source, &tq, prefer).map_err(err)?;
        ensure!(tq.get(moved) == expected.1, "case {case}: winner did not follow its question");
    }
    Ok(())
}

fn criterion_5() -> Check {
    for t in QuestionType::ALL {
        let h = type_entropy(&ProbDist::one_hot(t));
        ensure!(h == 0.0, "one-hot entropy {h}");
    }
    let h = type_entropy(&ProbDist::uniform());
    ensure!(close(h, 7f64.ln(), 1e-12), "uniform entropy {h}");
    let p = perplexity(&[0.5f64.ln(); 13]).map_err(err)?;
    ensure!(close(p, 2.0, 1e-12), "perplexity {p}");
    let lps = StubBackend::new(0).score_tokens("a b c").map_err(err)?;
    let p = perplexity(&lps).map_err(err)?;
    ensure!(close(p, 2.0, 1e-12), "stub perplexity {p}");
    Ok(())
}

fn criterion_6() -> Check {
    let a = warmup_updates(1400, 15, 8).map_err(err)?;
    let b = warmup_updates(2581, 20, 8).map_err(err)?;
    ensure!(a == 157 && b == 387, "got {a} and {b}");
    Ok(())
}

fn criterion_7() -> Check {
    let k = cohen_kappa(&["y", "y", "n", "n"], &["y", "n", "n", "n"]).map_err(err)?;
    ensure!(k == 0.5, "2x2 kappa {k}");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let mut x: Vec<QuestionType> = (0..20).map(|_| QuestionType::ALL[rng.gen_range(0..7)]).collect();
        x[0] = QuestionType::Explanation;
        x[1] = QuestionType::Other;
        let k = cohen_kappa(&x, &x).map_err(err)?;
        ensure!(k == 1.0, "self kappa {k}");
    }
    let judgments: Vec<HumanJudgment> = [Response::Yes, Response::Somewhat, Response::No]
        .into_iter()
        .enumerate()
        .map(|(i, response)| HumanJudgment {
            instance_id: format!("i{i}"),
            model: "m".into(),
            aspect: Aspect::Inquisitiveness,
            response,
            annotator_id: "w".into(),
        })
        .collect();
    let mean = aggregate_human_eval(&judgments).mean("m", Aspect::Inquisitiveness);
    ensure!(mean == Some(3.0), "human-eval mean {mean:?}");
    Ok(())
}

fn label_record(id: &str, question: &str, labels: &[(&str, QuestionType)]) -> TypeLabelRecord {
    TypeLabelRecord {
        question_id: id.into(),
        question: Some(question.into()),
        labels: labels
            .iter()
            .map(|(a, t)| TypeLabel {
                annotator_id: a.to_string(),
                qtype: *t,
            })
            .collect(),
    }
}

fn write_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) {
    let mut text = String::new();
    for i in items {
        writeln!(text, "{}", serde_json::to_string(i).unwrap()).unwrap();
    }
    fs::write(path, text).unwrap();
}

fn full_run(dir: &Path, corpus: &Path, labels: &Path) -> Result<Duration, String> {
    let config = RunConfig {
        corpus: Some(corpus.to_path_buf()),
        out: dir.to_path_buf(),
        seed: 17,
        workers: 4,
        type_labels: Some(labels.to_path_buf()),
        strategies: vec![
            StrategyName::Base,
            StrategyName::Span,
            StrategyName::TypeS,
            StrategyName::TypeR,
            StrategyName::TypeO,
        ],
        ..RunConfig::default()
    };
    let start = Instant::now();
    for outcome in [
        cmd_generate(&config).map_err(err)?,
        cmd_select(&config).map_err(err)?,
        cmd_evaluate(&config, &[]).map_err(err)?,
        cmd_report(&config).map_err(err)?,
    ] {
        ensure!(outcome.is_clean(), "{} recorded {} errors", outcome.command, outcome.errors.len());
    }
    Ok(start.elapsed())
}

fn criterion_8() -> Check {
    use QuestionType::*;
    let tmp = tempfile::tempdir().map_err(err)?;
    let corpus = common::write_corpus(tmp.path(), 150);
    let test_count = inqpipe::corpus::load_dataset(&corpus).map_err(err)?.split_counts().test;
    ensure!(test_count == 100, "synthetic corpus has {test_count} test instances");
    let labels = tmp.path().join("labels.jsonl");
    write_jsonl(
        &labels,
        &[
            label_record("q1", "Why did it close?", &[("A", Explanation), ("B", Explanation)]),
            label_record("q2", "How big was it?", &[("A", Elaboration), ("B", Elaboration)]),
        ],
    );
    let (a, b) = (tmp.path().join("run-a"), tmp.path().join("run-b"));
    let ta = full_run(&a, &corpus, &labels)?;
    let tb = full_run(&b, &corpus, &labels)?;
    ensure!(ta < Duration::from_secs(30) && tb < Duration::from_secs(30), "runs took {ta:?} / {tb:?}");
    let (fa, fb) = (common::bundle_files(&a), common::bundle_files(&b));
    ensure!(fa.len() >= 15, "bundle has only {} files", fa.len());
    ensure!(fa.len() == fb.len(), "bundles differ in file count");
    for ((na, ba), (nb, bb)) in fa.iter().zip(&fb) {
        ensure!(na == nb, "file sets differ: {na} vs {nb}");
        ensure!(ba == bb, "{na} differs between runs");
    }
    let (ma, mb) = (RunManifest::load(&a).map_err(err)?, RunManifest::load(&b).map_err(err)?);
    for (cmd, entry) in &ma.commands {
        ensure!(entry.outputs == mb.commands[cmd].outputs, "{cmd}: manifest digests differ");
    }
    Ok(())
}

/// Matches `quoted` against `actual`, reading ` … ` in the quote as an
/// elision and ignoring sentence-final periods the quote leaves out.
fn matches_elided(quoted: &str, actual: &str) -> bool {
    let q: Vec<&str> = quoted.split(SEP).collect();
    let a: Vec<&str> = actual.split(SEP).collect();
    if q.len() != a.len() {
        return false;
    }
    q.iter().zip(&a).all(|(q, a)| {
        let a = a.trim_end_matches('.');
        let pieces: Vec<&str> = q.split(" \u{2026} ").collect();
        if pieces.len() == 1 {
            return *q == a;
        }
        let (first, last) = (pieces[0], pieces[pieces.len() - 1]);
        if !a.starts_with(first) || !a.ends_with(last) {
            return false;
        }
        let mut rest = &a[first.len()..a.len() - last.len()];
        for p in &pieces[1..pieces.len() - 1] {
            match rest.find(p) {
                Some(i) => rest = &rest[i + p.len()..],
                None => return false,
            }
        }
        true
    })
}

const FUZZ_WORDS: [&str; 12] = [
    "review", "plan", "Santa", "Fe", "café", "naïve", "東京", "$", "2", "billion.", "(quoted)", "directors,",
];

fn criterion_9() -> Check {
    let source = "Santa Fe Pacific directors are expected to review the plan at a meeting today, \
                  according to people familiar with the transaction.";
    let start = source.find("review").unwrap();
    let santa_fe = Instance {
        context: "The plan places an indicated value on the real estate operation, \
                  Santa Fe Pacific Realty Corp., of $ 2 billion."
            .into(),
        ..instance("", source, start, start + "review".len())
    };
    let built = build_model_input(&santa_fe, Strategy::Type, Some(QuestionType::Explanation)).map_err(err)?;
    let literal = "The plan places an indicated value on the real estate operation, Santa Fe Pacific Realty Corp., \
                   of $ 2 billion. [SEP] Santa Fe Pacific directors are expected to review the plan at a meeting \
                   today, according to people familiar with the transaction. [SEP] review [SEP] Explanation";
    ensure!(built.text == literal, "quoted example input:\n{}", built.text);
    let quoted = "The plan places \u{2026} 2 billion [SEP] Santa Fe \u{2026} transaction [SEP] review [SEP] Explanation";
    ensure!(matches_elided(quoted, &built.text), "quoted form does not match");

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for case in 0..2000 {
        let pick = |rng: &mut ChaCha8Rng, lo: usize, hi: usize| -> Vec<&str> {
            (0..rng.gen_range(lo..=hi)).map(|_| FUZZ_WORDS[rng.gen_range(0..FUZZ_WORDS.len())]).collect()
        };
        let context = match rng.gen_range(0..4) {
            0 => String::new(),
            1 => " \t ".to_string(),
            _ => pick(&mut rng, 1, 20).join(" "),
        };
        let src = pick(&mut rng, 1, 15);
        let s0 = rng.gen_range(0..src.len());
        let s1 = rng.gen_range(s0 + 1..=src.len());
        let char_start: usize = src[..s0].iter().map(|w| w.chars().count() + 1).sum();
        let span = src[s0..s1].join(" ");
        let inst = instance(&context, &src.join(" "), char_start, char_start + span.chars().count());
        let expected_ctx = if context.trim().is_empty() { NO_CONTEXT } else { context.as_str() };
        for (strategy, control, count) in [
            (Strategy::Base, None, 2),
            (Strategy::Span, None, 3),
            (Strategy::Type, Some(QuestionType::GENERATABLE[case % 6]), 4),
        ] {
            let mi = build_model_input(&inst, strategy, control).map_err(err)?;
            let segs = mi.segments();
            ensure!(segs.len() == count, "case {case}: {strategy:?} has {} segments", segs.len());
            ensure!(segs[0] == expected_ctx, "case {case}: context segment {:?}", segs[0]);
            ensure!(segs[1] == inst.source, "case {case}: source segment");
            if count >= 3 {
                ensure!(segs[2] == span, "case {case}: span segment {:?} vs {span:?}", segs[2]);
            }
            if let Some(t) = control {
                ensure!(segs[3] == t.as_str(), "case {case}: control segment");
            }
        }
    }
    Ok(())
}

fn leading_rows(path: &Path) -> Result<Vec<(String, String, usize)>, String> {
    let text = fs::read_to_string(path).map_err(err)?;
    let mut rows: Vec<(String, String, usize)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f[0].to_string(), f[1].to_string(), f[2].parse().unwrap())
        })
        .collect();
    rows.sort();
    Ok(rows)
}

fn criterion_10() -> Check {
    use QuestionType::*;
    let tmp = tempfile::tempdir().map_err(err)?;
    let labels = tmp.path().join("labels.jsonl");
    write_jsonl(
        &labels,
        &[
            label_record("q1", "Why did it fail?", &[("A", Explanation), ("B", Explanation), ("C", Background)]),
            label_record("q2", "Why now?", &[("A", Explanation), ("B", Explanation)]),
            label_record("q3", "What caused this?", &[("A", Explanation)]),
            label_record("q4", "How does it work?", &[("A", Elaboration), ("B", Elaboration)]),
            label_record("q5", "how so", &[("A", Elaboration)]),
            label_record("q6", "What happened next?", &[("A", Elaboration), ("B", Elaboration)]),
            label_record("q7", "Who is he?", &[("A", Background), ("B", Background)]),
            label_record("q8", "Why not?", &[("A", Explanation), ("B", Definition)]),
        ],
    );
    let config = RunConfig {
        out: tmp.path().join("out"),
        type_labels: Some(labels),
        ..RunConfig::default()
    };
    cmd_report(&config).map_err(err)?;
    let row = |t: &str, g: &str, c: usize| (t.to_string(), g.to_string(), c);
    let mut want = vec![
        row("Background", "who", 1),
        row("Elaboration", "how", 2),
        row("Elaboration", "what", 1),
        row("Explanation", "what", 1),
        row("Explanation", "why", 2),
    ];
    want.sort();
    let got = leading_rows(&config.out.join("leading_unigrams.tsv"))?;
    ensure!(got == want, "unigram table {got:?}");
    let mut want = vec![
        row("Background", "who is", 1),
        row("Elaboration", "how does", 1),
        row("Elaboration", "how so", 1),
        row("Elaboration", "what happened", 1),
        row("Explanation", "what caused", 1),
        row("Explanation", "why did", 1),
        row("Explanation", "why now", 1),
    ];
    want.sort();
    let got = leading_rows(&config.out.join("leading_bigrams.tsv"))?;
    ensure!(got == want, "bigram table {got:?}");

    match std::env::var("INQPIPE_RELEASED_ANNOTATIONS") {
        Ok(path) => {
            let config = RunConfig {
                out: tmp.path().join("released"),
                type_labels: Some(path.into()),
                ..RunConfig::default()
            };
            cmd_report(&config).map_err(err)?;
            let rows = leading_rows(&config.out.join("leading_unigrams.tsv"))?;
            let why = rows
                .iter()
                .find(|(t, g, _)| t == "Explanation" && g == "why")
                .map_or(0, |r| r.2);
            ensure!(why == 396, "released file: Explanation \"why\" = {why}");
        }
        Err(_) => println!("             (released annotation file not configured; synthetic check only)"),
    }
    Ok(())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("copying metrics match the brute-force oracle on 200 corpora", criterion_1),
        ("overlap metric identities and hand-derived cases", criterion_2),
        ("pair enumeration fixtures and properties", criterion_3),
        ("max-vote selection with the transitive stub oracle", criterion_4),
        ("entropy and perplexity closed forms", criterion_5),
        ("warm-up update formula", criterion_6),
        ("agreement and human-evaluation arithmetic", criterion_7),
        ("end-to-end determinism on a 100-instance corpus", criterion_8),
        ("model-input format on a fuzzed corpus and the quoted example", criterion_9),
        ("leading n-gram tables", criterion_10),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        match result {
            Ok(()) => println!("criterion {:>2}: PASS  {name} ({elapsed:.2?})", i + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name}: {e}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

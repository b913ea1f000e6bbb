//! The whole batch pipeline on a synthetic corpus with the stub backend:
//! generate, select, evaluate, then build the report bundle.

use std::fmt::Write as _;
use std::fs;

use inqpipe::config::{RunConfig, StrategyName};
use inqpipe::pipeline::{cmd_evaluate, cmd_generate, cmd_report, cmd_select, RunManifest};

const SOURCES: [(&str, &str); 4] = [
    ("Officials said the bridge will close for repairs in June.", "repairs"),
    ("The company reported a loss for the third quarter.", "loss"),
    ("Residents opposed the plan at a crowded hearing.", "opposed"),
    ("Scientists found traces of water in the samples.", "traces of water"),
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let corpus = dir.path().join("corpus.jsonl");
    let mut text = String::new();
    for i in 0..12 {
        let (source, span) = SOURCES[i % SOURCES.len()];
        let start = source.find(span).expect("span occurs in source");
        let record = serde_json::json!({
            "instance_id": format!("doc{i}-2"),
            "article_id": format!("doc{i}"),
            "sentence_index": 2,
            "context": if i % 5 == 0 { "" } else { "The announcement came late on Friday." },
            "source": source,
            "span_start": start,
            "span_end": start + span.len(),
            "question": format!("Why {span}?"),
            "split": if i < 4 { "train" } else { "test" },
        });
        writeln!(text, "{record}")?;
    }
    fs::write(&corpus, text)?;

    let config = RunConfig {
        corpus: Some(corpus),
        out: dir.path().join("out"),
        seed: 13,
        strategies: vec![
            StrategyName::Base,
            StrategyName::Span,
            StrategyName::TypeS,
            StrategyName::TypeR,
            StrategyName::TypeO,
        ],
        ..RunConfig::default()
    };
    for outcome in [cmd_generate(&config)?, cmd_select(&config)?, cmd_evaluate(&config, &[])?, cmd_report(&config)?] {
        println!("{}: {} files, {} errors", outcome.command, outcome.outputs.len(), outcome.errors.len());
    }

    println!("\n{}", fs::read_to_string(config.out.join("metrics_run1.md"))?);
    println!("{}", fs::read_to_string(config.out.join("controllability.tsv"))?);
    let manifest = RunManifest::load(&config.out)?;
    for (command, entry) in &manifest.commands {
        println!("{command}: {} outputs digested", entry.outputs.len());
    }
    Ok(())
}

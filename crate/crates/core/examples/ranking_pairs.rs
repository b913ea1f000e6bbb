//! Turn expert rankings into ordered ranker examples and a leak-free split.

use std::collections::{BTreeMap, HashMap};

use inqpipe::corpus::QuestionType::{self, *};
use inqpipe::modelio::warmup_updates;
use inqpipe::ranking::{build_pair_dataset, select_pairs, split_pairs, PairLabel, RankingAnnotation};

fn annotation(instance: &str, ranked: &[QuestionType]) -> RankingAnnotation {
    RankingAnnotation {
        instance_id: instance.into(),
        annotator_id: "expert-1".into(),
        ranks: ranked.iter().enumerate().map(|(i, t)| (*t, i as u32 + 1)).collect::<BTreeMap<_, _>>(),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let three = annotation("s1", &[Explanation, Background, Elaboration]);
    let five = annotation("s2", &[Explanation, Elaboration, Background, Definition, Instantiation]);
    for a in [&three, &five] {
        let pairs = select_pairs(a);
        println!("{} ranked types -> {} pairs", a.ranks.len(), pairs.len());
        for (better, worse) in &pairs {
            println!("  {better} > {worse}");
        }
    }

    let mut questions = HashMap::new();
    let mut sources = HashMap::new();
    for id in ["s1", "s2"] {
        sources.insert(id.to_string(), format!("Source sentence of {id}."));
        for t in QuestionType::GENERATABLE {
            questions.insert((id.to_string(), t), format!("{t} question about {id}?"));
        }
    }
    let examples = build_pair_dataset(&[three, five], &questions, &sources)?;
    let positives = examples.iter().filter(|e| e.label == PairLabel::Positive).count();
    println!("\n{} ordered examples, {positives} positive", examples.len());
    println!("example input: {}", examples[0].input_text());

    let (train, dev) = split_pairs(&examples, 36, 7)?;
    println!("split: {} train / {} dev", train.len(), dev.len());
    println!(
        "warm-up updates for {} examples, 20 epochs, batch 8: {}",
        train.len(),
        warmup_updates(train.len() as u64, 20, 8)?
    );
    println!("warm-up for 2581 examples: {}", warmup_updates(2581, 20, 8)?);
    Ok(())
}

//! Annotation analytics: majority labels, Cohen's kappa, ranking
//! precision@k, leading-word tables and human-evaluation means.

use std::collections::BTreeMap;

use inqpipe::annotation::{
    aggregate_human_eval, cohen_kappa, majority_vote, pairwise_kappa, precision_at_k_report, Aspect, HumanJudgment,
    Response, TypeLabel, TypeLabelRecord,
};
use inqpipe::corpus::QuestionType::{self, *};
use inqpipe::ranking::RankingAnnotation;
use inqpipe::textproc::leading_ngram_table;

fn record(id: &str, question: &str, labels: &[(&str, QuestionType)]) -> TypeLabelRecord {
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

fn ranking(annotator: &str, ranked: &[QuestionType]) -> RankingAnnotation {
    RankingAnnotation {
        instance_id: "s1".into(),
        annotator_id: annotator.into(),
        ranks: ranked.iter().enumerate().map(|(i, t)| (*t, i as u32 + 1)).collect::<BTreeMap<_, _>>(),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let records = vec![
        record("q1", "Why did the talks fail?", &[("A", Explanation), ("B", Explanation), ("C", Elaboration)]),
        record("q2", "What does tariff mean here?", &[("A", Definition), ("B", Definition), ("C", Definition)]),
        record("q3", "Who negotiated the deal?", &[("A", Background), ("B", Instantiation), ("C", Instantiation)]),
        record("q4", "How will prices change?", &[("A", ForwardLooking), ("B", Elaboration), ("C", Explanation)]),
    ];
    let mut labeled = Vec::new();
    for r in &records {
        let outcome = majority_vote(r);
        println!("{} -> {outcome:?}", r.question_id);
        if let inqpipe::annotation::MajorityOutcome::Resolved(t) = outcome {
            labeled.push((t, r.question.clone().unwrap_or_default()));
        }
    }
    for row in pairwise_kappa(&records) {
        println!("kappa({}, {}) over {} items = {:.3}", row.annotator_a, row.annotator_b, row.items, row.kappa);
    }
    println!("kappa of a 2x2 example: {}", cohen_kappa(&[1, 1, 0, 0], &[1, 0, 0, 0])?);

    print!("\n{}", leading_ngram_table(&labeled, 1)?.to_markdown(3));

    let rankings = [
        ranking("A", &[Explanation, Background, Elaboration]),
        ranking("B", &[Background, Definition, Explanation, Instantiation]),
    ];
    for k in 1..=3 {
        println!("precision@{k}: {:.2}", precision_at_k_report(&rankings, k)?.mean);
    }

    let judgments: Vec<HumanJudgment> = [Response::Yes, Response::Somewhat, Response::No]
        .into_iter()
        .enumerate()
        .map(|(i, response)| HumanJudgment {
            instance_id: format!("s{i}"),
            model: "type_r".into(),
            aspect: Aspect::Relevancy,
            response,
            annotator_id: "W1".into(),
        })
        .collect();
    let table = aggregate_human_eval(&judgments);
    println!("\nmean relevancy: {:?}", table.mean("type_r", Aspect::Relevancy));
    Ok(())
}

//! Pick one of six type-controlled questions with the three selection
//! strategies, using the deterministic stub models.

use inqpipe::corpus::{build_model_input, Instance, QuestionType, Split, Strategy};
use inqpipe::modelio::{GenerationRequest, ModelBackend, PreferenceRequest, StubBackend};
use inqpipe::ranking::{select_type_o, select_type_r, select_type_s, TypedQuestions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source = "The agency said the recall covers 40,000 vehicles built last spring.";
    let instance = Instance {
        instance_id: "n7-4".into(),
        article_id: "n7".into(),
        sentence_index: 4,
        context: "A carmaker announced a safety recall on Tuesday.".into(),
        source: source.into(),
        span_start: 20,
        span_end: 26,
        question: "Why is there a recall?".into(),
        split: Split::Test,
        type_label: None,
    };
    let stub = StubBackend::new(42);

    let mut generated = Vec::new();
    for t in QuestionType::GENERATABLE {
        let input = build_model_input(&instance, Strategy::Type, Some(t))?;
        let req = GenerationRequest {
            input: input.text,
            params: Default::default(),
            seed: Some(1),
        };
        let q = stub.generate(&req)?.question;
        println!("{t:<15} {q}");
        generated.push((t, q));
    }
    let questions = TypedQuestions::new(generated)?;

    let by_inquisitiveness = select_type_s(&questions, |q| stub.inquisitiveness(q))?;
    println!("\nTYPE_s picks {by_inquisitiveness}");

    let (by_votes, tally) = select_type_r(source, &questions, |s, a, b| {
        stub.prefer(&PreferenceRequest::new(s, a, b))
    })?;
    println!("TYPE_r picks {by_votes} (votes: {:?})", tally.wins);

    let oracle = select_type_o(&instance, &instance.question, |input| stub.classify_type(input))?;
    println!("TYPE_o picks {} (reference classified as {})", oracle.chosen, oracle.predicted);
    Ok(())
}

//! Assemble generator and classifier inputs for one annotated instance.

use inqpipe::corpus::{
    build_classifier_input, build_model_input, char_span_from_token_span, Instance, QuestionType, Split, Strategy,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source = "Santa Fe Pacific directors are expected to review the plan at a meeting today, \
                  according to people familiar with the transaction.";
    // Token 7 ("review") as a half-open token range, converted to characters.
    let (span_start, span_end) = char_span_from_token_span(source, 7, 8).expect("token 7 exists");
    let instance = Instance {
        instance_id: "wsj-0001-3".into(),
        article_id: "wsj-0001".into(),
        sentence_index: 3,
        context: "The plan places an indicated value on the real estate operation, \
                  Santa Fe Pacific Realty Corp., of $ 2 billion."
            .into(),
        source: source.into(),
        span_start,
        span_end,
        question: "Why are they reviewing the plan?".into(),
        split: Split::Test,
        type_label: Some(QuestionType::Explanation),
    };

    for (strategy, control) in [
        (Strategy::Base, None),
        (Strategy::Span, None),
        (Strategy::Type, Some(QuestionType::Explanation)),
    ] {
        let input = build_model_input(&instance, strategy, control)?;
        println!("{strategy:?} ({} segments):\n  {}\n", input.segments().len(), input.text);
    }

    let first_sentence = Instance {
        context: String::new(),
        ..instance.clone()
    };
    println!(
        "first sentence of an article:\n  {}\n",
        build_model_input(&first_sentence, Strategy::Base, None)?.text
    );
    println!("classifier input:\n  {}", build_classifier_input(&instance, &instance.question)?);
    Ok(())
}

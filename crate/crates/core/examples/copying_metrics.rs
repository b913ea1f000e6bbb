//! How much generated questions copy from training questions, the article
//! and the highlighted span, plus type entropy and perplexity.

use inqpipe::corpus::{Instance, QuestionType, Split};
use inqpipe::metrics::{article_n, perplexity, span_overlap, train_n, type_entropy, ProbDist};
use inqpipe::textproc::{tokenize, TokenSeq};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let instance = Instance {
        instance_id: "a1-2".into(),
        article_id: "a1".into(),
        sentence_index: 2,
        context: "The city council met on Monday.".into(),
        source: "It voted to cut transit funding by a third.".into(),
        span_start: 12,
        span_end: 31,
        question: "Why cut transit funding now?".into(),
        split: Split::Test,
        type_label: None,
    };
    let generated = [
        "Why did the council cut transit funding?",
        "How will riders get to work?",
    ];
    let train: Vec<TokenSeq> = ["Why did the council vote no?", "How will the city pay for it?"]
        .iter()
        .map(|q| tokenize(q))
        .collect();

    let gen_tokens: Vec<TokenSeq> = generated.iter().map(|q| tokenize(q)).collect();
    println!("span: {:?}", instance.span());
    println!("Train-2 over both questions: {:.3}", train_n(&gen_tokens, &train, 2)?);
    for (q, toks) in generated.iter().zip(&gen_tokens) {
        println!(
            "{q:<42} Article-2 {:.3}  Span {:.3}",
            article_n(toks, &instance, 2)?,
            span_overlap(toks, instance.span())?
        );
    }

    println!("entropy(one-hot) = {}", type_entropy(&ProbDist::one_hot(QuestionType::Explanation)));
    println!("entropy(uniform) = {:.6} (ln 7 = {:.6})", type_entropy(&ProbDist::uniform()), 7f64.ln());
    println!("perplexity of ln 0.5 per token = {}", perplexity(&[0.5f64.ln(); 4])?);
    Ok(())
}

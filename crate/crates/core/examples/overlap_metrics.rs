//! Reference-overlap scores on a handful of candidate/reference pairs.

use inqpipe::metrics::{corpus_bleu, meteor_lite, rouge_l};
use inqpipe::textproc::{tokenize, TokenSeq};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pairs: Vec<(TokenSeq, TokenSeq)> = [
        ("Why are they reviewing the plan?", "Why are they reviewing the plan?"),
        ("What is the plan about?", "Why is the plan being reviewed?"),
        ("Who are the directors?", "Which directors will review it?"),
    ]
    .iter()
    .map(|(c, r)| (tokenize(c), tokenize(r)))
    .collect();

    for n in 1..=4 {
        println!("BLEU-{n}: {:.4}", corpus_bleu(&pairs, n)?);
    }
    for (c, r) in &pairs {
        println!(
            "{:<36} ROUGE-L {:.3}  METEOR {:.3}",
            c.joined(),
            rouge_l(c, r),
            meteor_lite(c, r)
        );
    }

    let cat = tokenize("the the the");
    let reference = tokenize("the cat");
    println!("clipped unigram BLEU: {:.4}", corpus_bleu(&[(cat, reference)], 1)?);
    Ok(())
}

//! Decode a video without its transcript: the training transcripts form a
//! prefix-tree grammar, and Viterbi picks the best transcript and alignment
//! jointly.
//!
//! ```text
//! cargo run --example grammar_decoding
//! ```

use ndarray::Array2;
use weakseg::coarse_model::{SubactionSpace, TransitionModel};
use weakseg::corpus::Transcript;
use weakseg::grammar::{build_graph, build_grammar, extract_actions};
use weakseg::inference::decode;
use weakseg::Result;

fn main() -> Result<()> {
    let space = SubactionSpace::new(vec!["A".into(), "B".into(), "C".into()], vec![2, 1, 1])?;
    let transcripts = [
        Transcript::new(["A", "B"])?,
        Transcript::new(["A", "C"])?,
        Transcript::new(["C", "A"])?,
    ];
    let grammar = build_grammar(&transcripts);
    let graph = build_graph(&grammar, &space, &TransitionModel::uniform(space.total(), 0.7)?)?;
    println!(
        "grammar: {} transcripts, {} tree nodes; graph: {} states",
        grammar.transcripts().len(),
        grammar.num_nodes(),
        graph.len()
    );

    // evidence: A for six frames, then C for four
    let mut scores = Array2::from_elem((10, space.total()), -1.5);
    for t in 0..6 {
        scores[[t, if t < 3 { 0 } else { 1 }]] = 0.0;
    }
    for t in 6..10 {
        scores[[t, 3]] = 0.0;
    }
    let decoded = decode(scores.view(), &graph, &space)?;
    println!("decoded transcript: {}", decoded.transcript);
    println!("framewise: {}", decoded.alignment.action_labels(&space).join(" "));
    assert!(grammar.accepts(&decoded.transcript));
    assert_eq!(extract_actions(&decoded.alignment, &space)?, decoded.transcript);
    Ok(())
}

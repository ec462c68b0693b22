//! Forced alignment of a video to a known transcript, starting from
//! hand-written frame scores.
//!
//! ```text
//! cargo run --example forced_alignment
//! ```

use ndarray::Array2;
use weakseg::coarse_model::{linear_alignment, SubactionSpace, TransitionModel};
use weakseg::corpus::Transcript;
use weakseg::inference::align;
use weakseg::Result;

fn main() -> Result<()> {
    let space = SubactionSpace::new(
        vec!["take_cup".into(), "add_teabag".into(), "pour_water".into()],
        vec![2, 1, 2],
    )?;
    let transcript = Transcript::new(["take_cup", "add_teabag", "pour_water"])?;
    let transitions = TransitionModel::uniform(space.total(), 0.8)?;

    // 12 frames whose evidence favours the true boundaries 0..3 | 3..5 | 5..8 | 8..10 | 10..12
    let truth = [0, 0, 0, 1, 1, 2, 2, 2, 3, 3, 4, 4];
    let mut scores = Array2::from_elem((truth.len(), space.total()), -2.0);
    for (t, &s) in truth.iter().enumerate() {
        scores[[t, s]] = 0.0;
    }

    let linear = linear_alignment(truth.len(), &transcript, &space)?;
    let (aligned, score) = align(scores.view(), &transcript, &space, &transitions)?;
    let show = |states: &[usize]| -> String {
        states
            .iter()
            .map(|&s| {
                let (a, k) = space.locate(s);
                format!("{}{}", &space.labels()[a][..4], k + 1)
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    println!("linear : {}", show(linear.states()));
    println!("aligned: {}", show(aligned.states()));
    println!("log score {score:.3}");
    assert_eq!(aligned.states(), truth);
    Ok(())
}

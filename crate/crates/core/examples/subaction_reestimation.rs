//! The coarse model on its own: initial subaction counts, linear
//! initialization, transition estimates, and count reestimation from an
//! alignment that matches the true action lengths.
//!
//! ```text
//! cargo run --example subaction_reestimation
//! ```

use weakseg::coarse_model::{
    estimate_transitions, init_subaction_counts, linear_alignment, redistribute,
    reestimate_space, Alignment, SubactionSpace, DEFAULT_FRAMES_PER_SUBACTION,
};
use weakseg::corpus::{generate_synthetic, SynthConfig};
use weakseg::Result;

fn main() -> Result<()> {
    let data = generate_synthetic(&SynthConfig {
        num_videos: 20,
        ..SynthConfig::default()
    })?;
    let m = DEFAULT_FRAMES_PER_SUBACTION;
    let space = init_subaction_counts(&data, m)?;
    println!("initial counts {:?} (shared by every action)", space.counts());

    let linear: Vec<Alignment> = data
        .samples
        .iter()
        .map(|s| linear_alignment(s.frames(), &s.transcript, &space))
        .collect::<Result<_>>()?;
    let tm = estimate_transitions(&linear, &space)?;
    println!("self-loop probability of subaction 0: {:.3}", tm.stay(0));

    // reestimating from the linear split recovers only the mean segment length
    let re = reestimate_space(&linear, &space, m)?;
    println!("counts from the linear split {:?}", re.space.counts());

    // an alignment following the ground truth recovers the true lengths
    let truth: Vec<Alignment> = data
        .samples
        .iter()
        .map(|s| {
            let gt = s.ground_truth.as_ref().expect("annotated");
            let coarse = SubactionSpace::uniform(space.labels().to_vec(), 1)?;
            let states = gt
                .iter()
                .map(|l| Ok(coarse.flat(coarse.action_index(l)?, 0)))
                .collect::<Result<_>>()?;
            let one = Alignment::from_states(states, &coarse)?;
            redistribute(&one, &coarse, &space)
        })
        .collect::<Result<_>>()?;
    let re = reestimate_space(&truth, &space, m)?;
    let lengths: Vec<String> = re
        .lengths
        .iter()
        .map(|l| l.map_or("-".into(), |v| format!("{v:.1}")))
        .collect();
    println!("mean lengths {} -> counts {:?}", lengths.join(", "), re.space.counts());
    Ok(())
}

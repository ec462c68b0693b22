//! The recurrent subaction classifier: train on 21-frame chunks labelled by a
//! linear alignment, then turn posteriors into likelihood scores.
//!
//! ```text
//! cargo run --release --example fine_model
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use weakseg::coarse_model::{init_subaction_counts, linear_alignment, Alignment};
use weakseg::corpus::{generate_synthetic, SynthConfig};
use weakseg::fine_model::{
    estimate_prior, posteriors, to_likelihood, train_pass, video_chunks, GruParams, SgdConfig,
};
use weakseg::Result;

fn main() -> Result<()> {
    let data = generate_synthetic(&SynthConfig {
        num_videos: 10,
        feature_dim: 8,
        ..SynthConfig::default()
    })?;
    let space = init_subaction_counts(&data, 10)?;
    let alignments: Vec<Alignment> = data
        .samples
        .iter()
        .map(|s| linear_alignment(s.frames(), &s.transcript, &space))
        .collect::<Result<_>>()?;
    let mut chunks = Vec::new();
    for (s, al) in data.samples.iter().zip(&alignments) {
        chunks.extend(video_chunks(&s.features, al)?);
    }

    let mut params = GruParams::random(8, 32, space.total(), 0.08, &mut ChaCha8Rng::seed_from_u64(0));
    let sgd = SgdConfig {
        learning_rate: 0.05,
        batch_size: 64,
    };
    for epoch in 0..5 {
        let loss = train_pass(&mut params, &chunks, sgd, epoch)?;
        println!("epoch {epoch}: mean loss {loss:.4} over {} chunks", chunks.len());
    }

    let prior = estimate_prior(&alignments, space.total())?;
    let video = &data.samples[0];
    let post = posteriors(&params, &video.features)?;
    let scores = to_likelihood(&post, &prior)?;
    let agree = post
        .argmax()
        .iter()
        .zip(alignments[0].states())
        .filter(|(a, b)| a == b)
        .count();
    println!(
        "{}: {} of {} frames pick their linear-alignment subaction; scores {}x{}",
        video.id,
        agree,
        video.frames(),
        scores.nrows(),
        scores.ncols()
    );
    Ok(())
}

//! Properties of the training loop on small synthetic corpora.

use weakseg::coarse_model::Alignment;
use weakseg::corpus::{generate_synthetic, Dataset, SynthConfig};
use weakseg::eval::mof;
use weakseg::fine_model::{posteriors, to_likelihood, SgdConfig};
use weakseg::grammar::extract_actions;
use weakseg::inference::align;
use weakseg::trainer::{initialize, iterate, TrainConfig, TrainerState};

fn corpus(noise: f64, seed: u64) -> Dataset {
    generate_synthetic(&SynthConfig {
        num_videos: 12,
        feature_dim: 8,
        noise_sigma: noise,
        num_orderings: 2,
        seed,
        ..SynthConfig::default()
    })
    .unwrap()
}

fn config(seed: u64) -> TrainConfig {
    TrainConfig {
        hidden: 16,
        sgd: SgdConfig {
            learning_rate: 0.05,
            batch_size: 32,
        },
        seed,
        ..TrainConfig::default()
    }
}

fn train_mof(state: &TrainerState, data: &Dataset) -> f64 {
    let pairs: Vec<(Vec<String>, &Vec<String>)> = state
        .alignments
        .iter()
        .zip(&data.samples)
        .map(|(al, s)| {
            let pred = al.action_labels(&state.space).iter().map(|l| l.to_string()).collect();
            (pred, s.ground_truth.as_ref().unwrap())
        })
        .collect();
    mof(pairs.iter().map(|(p, g)| (&p[..], &g[..]))).unwrap()
}

#[test]
fn noise_free_accuracy_does_not_drop_over_three_iterations() {
    // Seed pinned from a recorded run: MoF 0.710, 0.908, 0.935, 0.997. With a
    // single distinct ordering the segment boundaries are not identifiable
    // from transcripts alone, so the corpus must mix orderings.
    let data = corpus(0.0, 1);
    let cfg = config(1);
    let distinct: std::collections::HashSet<_> = data.samples.iter().map(|s| &s.transcript).collect();
    assert!(distinct.len() > 1);
    let mut state = initialize(&data, &cfg).unwrap();
    let mut trace = vec![train_mof(&state, &data)];
    for _ in 0..3 {
        state = iterate(state, &data, &cfg).unwrap().0;
        trace.push(train_mof(&state, &data));
    }
    eprintln!("MoF trace {trace:?}");
    for w in trace.windows(2) {
        assert!(w[1] >= w[0], "MoF decreased: {trace:?}");
    }
}

#[test]
fn transcripts_are_preserved_at_every_iteration() {
    let data = corpus(0.5, 9);
    let cfg = config(9);
    let mut state = initialize(&data, &cfg).unwrap();
    for _ in 0..3 {
        state = iterate(state, &data, &cfg).unwrap().0;
        for (al, s) in state.alignments.iter().zip(&data.samples) {
            assert_eq!(extract_actions(al, &state.space).unwrap(), s.transcript);
        }
        assert!(state.changes.iter().all(|c| (0.0..=1.0).contains(c)));
    }
}

#[test]
fn realignment_is_idempotent_under_a_frozen_model() {
    let data = corpus(0.5, 2);
    let cfg = config(2);
    let state = iterate(initialize(&data, &cfg).unwrap(), &data, &cfg).unwrap().0;
    let realign = |s: &weakseg::corpus::VideoSample| -> Alignment {
        let scores = to_likelihood(&posteriors(&state.params, &s.features).unwrap(), &state.prior).unwrap();
        align(scores.view(), &s.transcript, &state.space, &state.transitions).unwrap().0
    };
    for s in &data.samples {
        assert_eq!(realign(s), realign(s));
    }
}

#[test]
fn reestimated_counts_follow_realigned_lengths() {
    let data = corpus(0.5, 5);
    let cfg = config(5);
    let (state, record) = iterate(initialize(&data, &cfg).unwrap(), &data, &cfg).unwrap();
    // redistribution keeps instance spans, so the lengths are recoverable
    let re = weakseg::coarse_model::reestimate_space(&state.alignments, &state.space, cfg.m).unwrap();
    assert_eq!(re.space.counts(), &record.counts[..]);
}

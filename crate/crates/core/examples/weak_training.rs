//! End-to-end weak learning on a synthetic corpus: train from transcripts
//! only, then compare segmentation accuracy of the first-iteration model with
//! the final one.
//!
//! ```text
//! cargo run --release --example weak_training -- [seed] [hidden]
//! ```

use std::time::Instant;

use weakseg::corpus::{generate_synthetic, Dataset, SynthConfig};
use weakseg::eval::{jaccard_iou, mof};
use weakseg::trainer::{fit, TrainConfig};
use weakseg::{Model, Result};

fn segmentation_mof(model: &Model, data: &Dataset) -> Result<(f64, f64)> {
    let graph = model.graph()?;
    let mut pairs = Vec::new();
    for s in &data.samples {
        let d = model.segment(&s.features, &graph)?;
        let pred: Vec<String> = d.alignment.action_labels(&model.space).iter().map(|l| l.to_string()).collect();
        pairs.push((pred, s.ground_truth.clone().expect("synthetic ground truth")));
    }
    let views = || pairs.iter().map(|(p, g)| (&p[..], &g[..]));
    Ok((mof(views())?, jaccard_iou(views())?))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));
    let hidden: usize = args.next().map_or(64, |s| s.parse().expect("hidden size"));

    let corpus = SynthConfig {
        num_videos: 40,
        len_jitter: 0.3,
        num_orderings: 2,
        seed,
        ..SynthConfig::default()
    };
    let (train, test) = generate_synthetic(&corpus)?.split_tail(10);
    let config = TrainConfig {
        hidden,
        seed,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let result = fit(&train, &config)?;
    println!("trained in {:.1?}", start.elapsed());
    for r in &result.records {
        println!("{}", r.progress_line(&train.label_set));
    }
    println!(
        "stop: {:?}, returned model of iteration {}",
        result.stopped_at, result.selected
    );
    let first = &result.records[0].model;
    for (name, model) in [("first iteration", first), ("returned", &result.model)] {
        let (tr_mof, _) = segmentation_mof(model, &train)?;
        let (te_mof, te_iou) = segmentation_mof(model, &test)?;
        println!(
            "{name:>16}: train MoF {:.3}  test MoF {:.3}  test IoU {:.3}  K {:?}",
            tr_mof, te_mof, te_iou, model.space.counts()
        );
    }
    Ok(())
}

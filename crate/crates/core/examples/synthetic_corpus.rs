//! Generate a seeded synthetic corpus, write it in the on-disk formats and
//! read it back.
//!
//! ```text
//! cargo run --example synthetic_corpus -- [out_dir]
//! ```

use weakseg::corpus::{collapse_runs, generate_synthetic, load_dataset, save_dataset, SynthConfig};
use weakseg::Result;

fn main() -> Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("weakseg_synthetic"));
    let config = SynthConfig {
        num_videos: 12,
        ..SynthConfig::default()
    };
    let data = generate_synthetic(&config)?;
    save_dataset(&out, &data)?;
    let back = load_dataset(&out)?;
    assert_eq!(back, data);

    println!("wrote {} videos to {}", data.len(), out.display());
    println!("labels: {}", data.label_set.join(", "));
    for s in data.samples.iter().take(4) {
        let gt = s.ground_truth.as_ref().expect("synthetic videos are annotated");
        let runs: Vec<String> = collapse_runs(gt)
            .iter()
            .map(|seg| format!("{}[{}..{})", seg.label, seg.start, seg.end))
            .collect();
        println!("{}  T={:<4} {}", s.id, s.frames(), runs.join(" "));
    }
    Ok(())
}

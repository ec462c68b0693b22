//! Segmentation and alignment metrics on small hand-made label sequences.
//!
//! ```text
//! cargo run --example metrics
//! ```

use weakseg::eval::{jaccard_iod, jaccard_iou, label_spans, mof, MetricReport};
use weakseg::Result;

fn labels(runs: &[(&str, usize)]) -> Vec<String> {
    runs.iter().flat_map(|&(a, n)| vec![a.to_string(); n]).collect()
}

fn main() -> Result<()> {
    let gt = labels(&[("take_cup", 10), ("pour_water", 5)]);
    let pred = labels(&[("take_cup", 5), ("pour_water", 10)]);
    let pairs = [(&pred[..], &gt[..])];

    let mut report = MetricReport::default();
    report.push("mof", "demo", mof(pairs)?);
    report.push("iou", "demo", jaccard_iou(pairs)?);
    let (p, g) = (label_spans(&pred), label_spans(&gt));
    report.push("iod", "demo", jaccard_iod([(&p[..], &g[..])])?);
    print!("{}", report.to_csv());
    print!("{report}");
    Ok(())
}

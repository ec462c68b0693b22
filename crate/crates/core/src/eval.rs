//! Segmentation and alignment metrics.
//!
//! * MoF: framewise accuracy pooled over all frames of all videos.
//! * IoU: each ground-truth segment is matched with the same-label predicted
//!   segment of highest overlap; the mean runs over all ground-truth segments.
//! * IoD: predicted segment `n` is paired with ground-truth segment `n`;
//!   `|G ∩ P| / |P|`, averaged over all segments.

use std::fmt;
use std::ops::Range;

use crate::corpus::collapse_runs;
use crate::error::{Error, Result};

fn overlap(a: &Range<usize>, b: &Range<usize>) -> usize {
    a.end.min(b.end).saturating_sub(a.start.max(b.start))
}

pub fn interval_iou(gt: &Range<usize>, pred: &Range<usize>) -> f64 {
    let inter = overlap(gt, pred);
    let union = gt.len() + pred.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn interval_iod(gt: &Range<usize>, pred: &Range<usize>) -> f64 {
    if pred.is_empty() {
        0.0
    } else {
        overlap(gt, pred) as f64 / pred.len() as f64
    }
}

fn check_len(pred: usize, gt: usize) -> Result<()> {
    if pred != gt {
        return Err(Error::LengthMismatch(format!(
            "prediction has {pred} frames, ground truth {gt}"
        )));
    }
    Ok(())
}

/// Mean accuracy over frames, pooled across videos.
pub fn mof<'a, S, I>(videos: I) -> Result<f64>
where
    S: AsRef<str> + 'a,
    I: IntoIterator<Item = (&'a [S], &'a [S])>,
{
    let (mut hit, mut total) = (0usize, 0usize);
    for (pred, gt) in videos {
        check_len(pred.len(), gt.len())?;
        hit += pred
            .iter()
            .zip(gt)
            .filter(|(p, g)| p.as_ref() == g.as_ref())
            .count();
        total += gt.len();
    }
    Ok(if total == 0 { 0.0 } else { hit as f64 / total as f64 })
}

/// Jaccard intersection over union with best same-label match per
/// ground-truth segment; segments come from run-collapsing framewise labels.
pub fn jaccard_iou<'a, S, I>(videos: I) -> Result<f64>
where
    S: AsRef<str> + 'a,
    I: IntoIterator<Item = (&'a [S], &'a [S])>,
{
    let (mut sum, mut count) = (0.0, 0usize);
    for (pred, gt) in videos {
        check_len(pred.len(), gt.len())?;
        let pred_segs = collapse_runs(pred);
        for g in collapse_runs(gt) {
            let g_range = g.start..g.end;
            let best = pred_segs
                .iter()
                .filter(|p| p.label == g.label)
                .map(|p| interval_iou(&g_range, &(p.start..p.end)))
                .fold(0.0, f64::max);
            sum += best;
            count += 1;
        }
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// Jaccard intersection over detection for position-paired segments.
pub fn jaccard_iod<'a, I>(videos: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a [Range<usize>], &'a [Range<usize>])>,
{
    let (mut sum, mut count) = (0.0, 0usize);
    for (pred, gt) in videos {
        if pred.len() != gt.len() {
            return Err(Error::LengthMismatch(format!(
                "{} predicted segments for {} ground-truth segments",
                pred.len(),
                gt.len()
            )));
        }
        for (p, g) in pred.iter().zip(gt) {
            sum += interval_iod(g, p);
            count += 1;
        }
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// Frame ranges of the label runs.
pub fn label_spans<S: AsRef<str>>(labels: &[S]) -> Vec<Range<usize>> {
    collapse_runs(labels).iter().map(|s| s.start..s.end).collect()
}

/// One metric value for one data split.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub metric: String,
    pub split: String,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
}

impl MetricReport {
    pub fn push(&mut self, metric: &str, split: &str, value: f64) {
        self.rows.push(MetricRow {
            metric: metric.to_string(),
            split: split.to_string(),
            value,
        });
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,split,value\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:.6}\n", r.metric, r.split, r.value));
        }
        out
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            writeln!(f, "{:>6} [{}]: {:6.2}%", r.metric, r.split, 100.0 * r.value)?;
        }
        Ok(())
    }
}

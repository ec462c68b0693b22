//! Videos, transcripts and datasets, plus the on-disk formats and a seeded
//! synthetic corpus generator.

mod io;
mod synth;

use std::collections::HashSet;
use std::fmt;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{
    load_dataset, load_features, load_labels, load_transcripts, save_dataset, save_features,
    save_labels, save_transcripts,
};
pub use synth::{generate_synthetic, SynthConfig};

/// Per-frame feature vectors of one video, `T` rows by `D` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix {
    data: Array2<f32>,
}

impl FrameMatrix {
    pub fn new(data: Array2<f32>) -> Result<Self> {
        let (t, d) = data.dim();
        if t == 0 || d == 0 {
            return Err(Error::Dimension(format!(
                "feature matrix must be non-empty, got {t}x{d}"
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!(
                "non-finite feature value at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self { data })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Dimension("ragged feature rows".into()));
        }
        let flat: Vec<f32> = rows.iter().flatten().copied().collect();
        let data = Array2::from_shape_vec((rows.len(), d), flat)
            .map_err(|e| Error::Dimension(e.to_string()))?;
        Self::new(data)
    }

    pub fn frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f32> {
        self.data.view()
    }

    pub fn row(&self, t: usize) -> ArrayView1<'_, f32> {
        self.data.row(t)
    }
}

/// Ordered list of action labels for one video. Adjacent repeats are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Transcript(Vec<String>);

impl TryFrom<Vec<String>> for Transcript {
    type Error = Error;

    fn try_from(actions: Vec<String>) -> Result<Self> {
        Transcript::new(actions)
    }
}

impl From<Transcript> for Vec<String> {
    fn from(t: Transcript) -> Self {
        t.0
    }
}

impl Transcript {
    pub fn new<S: Into<String>>(actions: impl IntoIterator<Item = S>) -> Result<Self> {
        let actions: Vec<String> = actions.into_iter().map(Into::into).collect();
        if actions.is_empty() {
            return Err(Error::EmptyTranscript(String::new()));
        }
        Ok(Self(actions))
    }

    pub fn actions(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoSample {
    pub id: String,
    pub features: FrameMatrix,
    pub transcript: Transcript,
    /// Framewise action labels, one per frame, when annotated.
    pub ground_truth: Option<Vec<String>>,
}

impl VideoSample {
    pub fn frames(&self) -> usize {
        self.features.frames()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<VideoSample>,
    pub label_set: Vec<String>,
}

impl Dataset {
    /// Checks id uniqueness, label coverage and ground-truth consistency.
    pub fn new(samples: Vec<VideoSample>, label_set: Vec<String>) -> Result<Self> {
        let labels: HashSet<&str> = label_set.iter().map(String::as_str).collect();
        if labels.len() != label_set.len() {
            return Err(Error::Format("label set contains duplicates".into()));
        }
        let mut ids = HashSet::new();
        for sample in &samples {
            if !ids.insert(sample.id.as_str()) {
                return Err(Error::DuplicateId(sample.id.clone()));
            }
            if let Some(a) = sample.transcript.iter().find(|a| !labels.contains(a)) {
                return Err(Error::UnknownAction(a.to_string()));
            }
            if let Some(gt) = &sample.ground_truth {
                if gt.len() != sample.frames() {
                    return Err(Error::LengthMismatch(format!(
                        "video `{}`: {} ground-truth labels for {} frames",
                        sample.id,
                        gt.len(),
                        sample.frames()
                    )));
                }
                // adjacent repeated instances are indistinguishable in framewise labels
                let runs: Vec<&str> = collapse_runs(gt).iter().map(|s| s.label).collect();
                let mut expected: Vec<&str> = sample.transcript.iter().collect();
                expected.dedup();
                if runs != expected {
                    return Err(Error::Format(format!(
                        "video `{}`: ground truth does not match its transcript",
                        sample.id
                    )));
                }
            }
        }
        Ok(Self { samples, label_set })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn total_frames(&self) -> usize {
        self.samples.iter().map(VideoSample::frames).sum()
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.samples.first().map(|s| s.features.dim())
    }

    /// Splits off the trailing `count` samples, keeping the label set on both halves.
    pub fn split_tail(mut self, count: usize) -> (Dataset, Dataset) {
        let at = self.samples.len().saturating_sub(count);
        let tail = self.samples.split_off(at);
        let label_set = self.label_set.clone();
        (
            Dataset {
                samples: self.samples,
                label_set: label_set.clone(),
            },
            Dataset {
                samples: tail,
                label_set,
            },
        )
    }
}

/// A maximal run of identical labels, `[start, end)` in frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment<'a> {
    pub label: &'a str,
    pub start: usize,
    pub end: usize,
}

impl Segment<'_> {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

pub fn collapse_runs<S: AsRef<str>>(labels: &[S]) -> Vec<Segment<'_>> {
    let mut out: Vec<Segment<'_>> = Vec::new();
    for (t, label) in labels.iter().enumerate() {
        let label = label.as_ref();
        match out.last_mut() {
            Some(seg) if seg.label == label => seg.end = t + 1,
            _ => out.push(Segment {
                label,
                start: t,
                end: t + 1,
            }),
        }
    }
    out
}

/// Splits `total` into `parts` contiguous lengths, handing the remainder to
/// the earliest parts.
pub(crate) fn equal_split(total: usize, parts: usize) -> Vec<usize> {
    let base = total / parts;
    let rem = total % parts;
    (0..parts).map(|i| base + usize::from(i < rem)).collect()
}

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use super::{Dataset, FrameMatrix, Transcript, VideoSample};
use crate::error::{Error, Result};

const FEATURE_MAGIC: &[u8; 4] = b"FTR1";
const HEADER_LEN: usize = 12;

pub fn save_features(path: impl AsRef<Path>, features: &FrameMatrix) -> Result<()> {
    let path = path.as_ref();
    let view = features.view();
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * view.len());
    buf.extend_from_slice(FEATURE_MAGIC);
    buf.extend_from_slice(&(features.frames() as u32).to_le_bytes());
    buf.extend_from_slice(&(features.dim() as u32).to_le_bytes());
    for v in view.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FrameMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_features(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn decode_features(bytes: &[u8]) -> Result<FrameMatrix> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != FEATURE_MAGIC {
        return Err(Error::Format("missing FTR1 header".into()));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let (t, d) = (word(4), word(8));
    let body = &bytes[HEADER_LEN..];
    let expected = t
        .checked_mul(d)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format("header dimensions overflow".into()))?;
    if body.len() != expected {
        return Err(Error::Format(format!(
            "header declares {t}x{d} values but body holds {} bytes",
            body.len()
        )));
    }
    let values: Vec<f32> = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let data = Array2::from_shape_vec((t, d), values).map_err(|e| Error::Format(e.to_string()))?;
    FrameMatrix::new(data).map_err(|e| match e {
        Error::Dimension(msg) => Error::Format(msg),
        other => other,
    })
}

/// Parses `id label label ...` lines. Blank lines are skipped.
pub fn load_transcripts(path: impl AsRef<Path>) -> Result<Vec<(String, Transcript)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_transcripts(&text)
}

pub(crate) fn parse_transcripts(text: &str) -> Result<Vec<(String, Transcript)>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for line in text.lines() {
        let mut tokens = line.split_whitespace();
        let Some(id) = tokens.next() else { continue };
        if !seen.insert(id.to_string()) {
            return Err(Error::DuplicateId(id.to_string()));
        }
        let transcript =
            Transcript::new(tokens).map_err(|_| Error::EmptyTranscript(id.to_string()))?;
        out.push((id.to_string(), transcript));
    }
    Ok(out)
}

pub fn save_transcripts<'a>(
    path: impl AsRef<Path>,
    entries: impl IntoIterator<Item = (&'a str, &'a Transcript)>,
) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for (id, tr) in entries {
        text.push_str(id);
        for a in tr.iter() {
            text.push(' ');
            text.push_str(a);
        }
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Framewise label file: line `t` holds the label of frame `t`.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

pub fn save_labels<S: AsRef<str>>(path: impl AsRef<Path>, labels: &[S]) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    for l in labels {
        text.push_str(l.as_ref());
        text.push('\n');
    }
    file.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Writes `labels.txt`, `transcripts.txt`, `features/<id>.ftr` and, where
/// present, `groundtruth/<id>.txt` under `dir`.
pub fn save_dataset(dir: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let dir = dir.as_ref();
    let features = dir.join("features");
    let gt = dir.join("groundtruth");
    fs::create_dir_all(&features).map_err(|e| Error::io(&features, e))?;
    save_labels(dir.join("labels.txt"), &dataset.label_set)?;
    save_transcripts(
        dir.join("transcripts.txt"),
        dataset
            .samples
            .iter()
            .map(|s| (s.id.as_str(), &s.transcript)),
    )?;
    for sample in &dataset.samples {
        save_features(features.join(format!("{}.ftr", sample.id)), &sample.features)?;
        if let Some(labels) = &sample.ground_truth {
            fs::create_dir_all(&gt).map_err(|e| Error::io(&gt, e))?;
            save_labels(gt.join(format!("{}.txt", sample.id)), labels)?;
        }
    }
    Ok(())
}

/// Reads a directory written by [`save_dataset`]. Without `labels.txt` the
/// label set is the transcripts' labels in order of first appearance.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let transcripts = load_transcripts(dir.join("transcripts.txt"))?;
    let labels_path = dir.join("labels.txt");
    let label_set = if labels_path.exists() {
        load_labels(&labels_path)?
    } else {
        let mut seen = HashSet::new();
        transcripts
            .iter()
            .flat_map(|(_, tr)| tr.iter())
            .filter(|a| seen.insert(a.to_string()))
            .map(str::to_string)
            .collect()
    };
    let mut samples = Vec::with_capacity(transcripts.len());
    for (id, transcript) in transcripts {
        let features = load_features(dir.join("features").join(format!("{id}.ftr")))?;
        let gt_path = dir.join("groundtruth").join(format!("{id}.txt"));
        let ground_truth = if gt_path.exists() {
            Some(load_labels(&gt_path)?)
        } else {
            None
        };
        samples.push(VideoSample {
            id,
            features,
            transcript,
            ground_truth,
        });
    }
    Dataset::new(samples, label_set)
}

//! The trained model document: GRU weights, prior, subaction space,
//! transition model and grammar, stored as one JSON document.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::coarse_model::{Alignment, SubactionSpace, TransitionModel};
use crate::corpus::{FrameMatrix, Transcript};
use crate::error::{Error, Result};
use crate::fine_model::{posteriors, to_likelihood, GruParams, Prior};
use crate::grammar::{build_graph, DecodingGraph, TranscriptGrammar};
use crate::inference::{align, decode, Decoded};

pub const MODEL_FORMAT: &str = "WAMODEL1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub params: GruParams,
    pub prior: Prior,
    pub space: SubactionSpace,
    pub transitions: TransitionModel,
    pub grammar: TranscriptGrammar,
}

#[derive(Serialize, Deserialize)]
struct Document {
    format: String,
    input_dim: usize,
    hidden_dim: usize,
    num_subactions: usize,
    #[serde(flatten)]
    model: Model,
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let s = self.space.total();
        let parts = [
            ("GRU outputs", self.params.num_outputs()),
            ("prior entries", self.prior.0.len()),
            ("transition states", self.transitions.len()),
        ];
        if let Some((what, n)) = parts.iter().find(|(_, n)| *n != s) {
            return Err(Error::Dimension(format!("{n} {what} for {s} subactions")));
        }
        if self.prior.0.iter().any(|&p| p.is_nan() || p <= 0.0) {
            return Err(Error::Format("prior must be strictly positive".into()));
        }
        for label in self.grammar.labels() {
            self.space.action_index(label)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = Document {
            format: MODEL_FORMAT.to_string(),
            input_dim: self.params.input_dim(),
            hidden_dim: self.params.hidden_dim(),
            num_subactions: self.space.total(),
            model: self.clone(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Document =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("model document: {e}")))?;
        if doc.format != MODEL_FORMAT {
            return Err(Error::Format(format!(
                "unsupported model format `{}`",
                doc.format
            )));
        }
        let m = doc.model;
        if (doc.input_dim, doc.hidden_dim, doc.num_subactions)
            != (m.params.input_dim(), m.params.hidden_dim(), m.space.total())
        {
            return Err(Error::Dimension("model header disagrees with its contents".into()));
        }
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// `T x S` log-likelihood scores of a video.
    pub fn scores(&self, video: &FrameMatrix) -> Result<Array2<f64>> {
        to_likelihood(&posteriors(&self.params, video)?, &self.prior)
    }

    pub fn graph(&self) -> Result<DecodingGraph> {
        build_graph(&self.grammar, &self.space, &self.transitions)
    }

    /// Joint transcript and alignment under the grammar.
    pub fn segment(&self, video: &FrameMatrix, graph: &DecodingGraph) -> Result<Decoded> {
        decode(self.scores(video)?.view(), graph, &self.space)
    }

    /// Forced alignment to a given transcript.
    pub fn align(&self, video: &FrameMatrix, transcript: &Transcript) -> Result<(Alignment, f64)> {
        align(self.scores(video)?.view(), transcript, &self.space, &self.transitions)
    }
}

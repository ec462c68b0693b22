//! Log-space Viterbi over decoding graphs: forced alignment to one transcript
//! and free decoding under the transcript grammar.
//!
//! Frame 0 contributes only its observation score. On equal scores a state
//! prefers its self-loop over the advance from its predecessor.

use ndarray::ArrayView2;

use crate::coarse_model::{Alignment, SubactionSpace, TransitionModel};
use crate::corpus::Transcript;
use crate::error::{Error, Result};
use crate::grammar::DecodingGraph;

/// Result of decoding one video.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub transcript: Transcript,
    pub alignment: Alignment,
    /// Total log score of the best path.
    pub score: f64,
}

/// Backpointer per (frame, state): `false` stays, `true` came from the
/// predecessor. Bounded fan-in of two needs one bit; stored as bytes.
struct Backpointers {
    cells: Vec<u8>,
    width: usize,
}

impl Backpointers {
    fn new(frames: usize, width: usize) -> Self {
        Self {
            cells: vec![0; frames * width],
            width,
        }
    }

    fn set_advance(&mut self, t: usize, s: usize) {
        self.cells[t * self.width + s] = 1;
    }

    fn advanced(&self, t: usize, s: usize) -> bool {
        self.cells[t * self.width + s] != 0
    }
}

/// Smallest number of frames any accepting path needs.
fn min_frames(graph: &DecodingGraph) -> Option<usize> {
    let mut depth = vec![0usize; graph.len()];
    for s in 0..graph.len() {
        depth[s] = graph.pred[s].map_or(1, |p| depth[p] + 1);
    }
    (0..graph.len())
        .filter(|&s| graph.accepting[s])
        .map(|s| depth[s])
        .min()
}

/// Best path as graph-state indices, with its score.
fn viterbi(scores: ArrayView2<'_, f64>, graph: &DecodingGraph) -> Result<(Vec<usize>, f64)> {
    let frames = scores.nrows();
    let n = graph.len();
    if let Some(max) = graph.states.iter().map(|s| s.subaction).max() {
        if max >= scores.ncols() {
            return Err(Error::Dimension(format!(
                "score matrix has {} columns but the graph uses subaction {max}",
                scores.ncols()
            )));
        }
    }
    let required = min_frames(graph).ok_or_else(|| {
        Error::Config("decoding graph has no accepting state".into())
    })?;
    if frames < required {
        return Err(Error::Infeasible {
            video: None,
            frames,
            required,
        });
    }

    let mut prev = vec![f64::NEG_INFINITY; n];
    let mut cur = vec![f64::NEG_INFINITY; n];
    for s in 0..n {
        if graph.pred[s].is_none() {
            prev[s] = scores[[0, graph.states[s].subaction]];
        }
    }
    let mut bp = Backpointers::new(frames, n);
    for t in 1..frames {
        let row = scores.row(t);
        for s in 0..n {
            let stay = prev[s] + graph.log_stay[s];
            let advance = graph.pred[s].map_or(f64::NEG_INFINITY, |p| prev[p] + graph.log_leave[p]);
            let best = if advance > stay {
                bp.set_advance(t, s);
                advance
            } else {
                stay
            };
            cur[s] = best + row[graph.states[s].subaction];
        }
        std::mem::swap(&mut prev, &mut cur);
    }

    let mut end = None;
    let mut best = f64::NEG_INFINITY;
    for s in (0..n).filter(|&s| graph.accepting[s]) {
        if prev[s] > best {
            best = prev[s];
            end = Some(s);
        }
    }
    let Some(mut s) = end else {
        return Err(Error::Infeasible {
            video: None,
            frames,
            required,
        });
    };
    let mut path = vec![0; frames];
    for t in (0..frames).rev() {
        path[t] = s;
        if t > 0 && bp.advanced(t, s) {
            s = graph.pred[s].expect("advance recorded from a predecessor");
        }
    }
    Ok((path, best))
}

fn to_decoded(path: &[usize], score: f64, graph: &DecodingGraph, space: &SubactionSpace) -> Result<Decoded> {
    let mut states = Vec::with_capacity(path.len());
    let mut instances = Vec::with_capacity(path.len());
    let mut actions = Vec::new();
    for (t, &g) in path.iter().enumerate() {
        let gs = graph.states[g];
        let new_instance = t == 0 || (path[t - 1] != g && gs.ordinal == 0);
        if new_instance {
            actions.push(space.labels()[gs.action].clone());
        }
        states.push(gs.subaction);
        instances.push(actions.len() - 1);
    }
    Ok(Decoded {
        transcript: Transcript::new(actions)?,
        alignment: Alignment::from_parts(states, instances),
        score,
    })
}

/// Forced alignment: the best monotone alignment of all frames to the
/// subactions of `transcript`, from the first subaction of its first action
/// to the last subaction of its last action.
pub fn align(
    scores: ArrayView2<'_, f64>,
    transcript: &Transcript,
    space: &SubactionSpace,
    transitions: &TransitionModel,
) -> Result<(Alignment, f64)> {
    let graph = DecodingGraph::linear(transcript, space, transitions)?;
    let (path, score) = viterbi(scores, &graph)?;
    let decoded = to_decoded(&path, score, &graph, space)?;
    Ok((decoded.alignment, decoded.score))
}

/// Joint best transcript and alignment over every transcript the graph's
/// grammar admits.
pub fn decode(
    scores: ArrayView2<'_, f64>,
    graph: &DecodingGraph,
    space: &SubactionSpace,
) -> Result<Decoded> {
    let (path, score) = viterbi(scores, graph)?;
    to_decoded(&path, score, graph, space)
}

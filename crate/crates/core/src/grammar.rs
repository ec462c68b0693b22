//! Path grammar over training transcripts and its expansion into a decoding
//! graph of subaction states.

use serde::{Deserialize, Serialize};

use crate::coarse_model::{Alignment, SubactionSpace, TransitionModel};
use crate::corpus::Transcript;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Node {
    children: Vec<(String, usize)>,
    accepting: bool,
}

/// Prefix tree over the distinct training transcripts. Its language is
/// exactly the stored set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<Transcript>", into = "Vec<Transcript>")]
pub struct TranscriptGrammar {
    nodes: Vec<Node>,
}

impl Default for TranscriptGrammar {
    fn default() -> Self {
        Self {
            nodes: vec![Node::default()],
        }
    }
}

pub const ROOT: usize = 0;

impl TranscriptGrammar {
    pub fn insert(&mut self, transcript: &Transcript) {
        let mut node = ROOT;
        for action in transcript.iter() {
            node = match self.child(node, action) {
                Some(c) => c,
                None => {
                    let c = self.nodes.len();
                    self.nodes.push(Node::default());
                    self.nodes[node].children.push((action.to_string(), c));
                    c
                }
            };
        }
        self.nodes[node].accepting = true;
    }

    pub fn child(&self, node: usize, action: &str) -> Option<usize> {
        self.nodes[node]
            .children
            .iter()
            .find(|(a, _)| a == action)
            .map(|&(_, c)| c)
    }

    pub fn children(&self, node: usize) -> impl Iterator<Item = (&str, usize)> {
        self.nodes[node].children.iter().map(|(a, c)| (a.as_str(), *c))
    }

    pub fn is_accepting(&self, node: usize) -> bool {
        self.nodes[node].accepting
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn accepts(&self, transcript: &Transcript) -> bool {
        let mut node = ROOT;
        for action in transcript.iter() {
            match self.child(node, action) {
                Some(c) => node = c,
                None => return false,
            }
        }
        self.nodes[node].accepting
    }

    /// All accepted transcripts in depth-first, insertion order.
    pub fn transcripts(&self) -> Vec<Transcript> {
        let mut out = Vec::new();
        let mut stack: Vec<(usize, Vec<String>)> = vec![(ROOT, Vec::new())];
        while let Some((node, prefix)) = stack.pop() {
            if self.nodes[node].accepting {
                out.push(Transcript::new(prefix.clone()).expect("accepting nodes are non-root"));
            }
            for (a, c) in self.nodes[node].children.iter().rev() {
                let mut p = prefix.clone();
                p.push(a.clone());
                stack.push((*c, p));
            }
        }
        out
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.nodes
            .iter()
            .flat_map(|n| n.children.iter().map(|(a, _)| a.as_str()))
    }
}

impl From<Vec<Transcript>> for TranscriptGrammar {
    fn from(transcripts: Vec<Transcript>) -> Self {
        build_grammar(&transcripts)
    }
}

impl From<TranscriptGrammar> for Vec<Transcript> {
    fn from(g: TranscriptGrammar) -> Self {
        g.transcripts()
    }
}

pub fn build_grammar<'a>(transcripts: impl IntoIterator<Item = &'a Transcript>) -> TranscriptGrammar {
    let mut g = TranscriptGrammar::default();
    for t in transcripts {
        g.insert(t);
    }
    g
}

/// One subaction state of the decoding graph: the `ordinal`-th subaction of
/// `action` on the tree edge leaving `prefix` towards `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphState {
    pub prefix: usize,
    pub target: usize,
    pub action: usize,
    pub ordinal: usize,
    /// Flat subaction index in the [`SubactionSpace`].
    pub subaction: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    /// `None` is the distinguished start state.
    pub from: Option<usize>,
    pub to: usize,
    pub weight: f64,
}

/// Grammar-constrained HMM over subaction states. Every state has a self-loop
/// and at most one other predecessor, whose index is always smaller.
#[derive(Debug, Clone)]
pub struct DecodingGraph {
    pub(crate) states: Vec<GraphState>,
    pub(crate) pred: Vec<Option<usize>>,
    pub(crate) log_stay: Vec<f64>,
    pub(crate) log_leave: Vec<f64>,
    pub(crate) accepting: Vec<bool>,
}

impl DecodingGraph {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[GraphState] {
        &self.states
    }

    pub fn is_initial(&self, state: usize) -> bool {
        self.pred[state].is_none()
    }

    pub fn is_accepting(&self, state: usize) -> bool {
        self.accepting[state]
    }

    pub fn predecessor(&self, state: usize) -> Option<usize> {
        self.pred[state]
    }

    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(2 * self.len());
        for s in 0..self.len() {
            out.push(Edge {
                from: self.pred[s],
                to: s,
                weight: self.pred[s].map_or(0.0, |p| self.log_leave[p]),
            });
            out.push(Edge {
                from: Some(s),
                to: s,
                weight: self.log_stay[s],
            });
        }
        out
    }

    /// A linear graph that admits exactly one transcript.
    pub fn linear(
        transcript: &Transcript,
        space: &SubactionSpace,
        transitions: &TransitionModel,
    ) -> Result<Self> {
        build_graph(&build_grammar([transcript]), space, transitions)
    }
}

pub fn build_graph(
    grammar: &TranscriptGrammar,
    space: &SubactionSpace,
    transitions: &TransitionModel,
) -> Result<DecodingGraph> {
    if transitions.len() != space.total() {
        return Err(Error::Dimension(format!(
            "transition model has {} states, space has {}",
            transitions.len(),
            space.total()
        )));
    }
    let mut g = DecodingGraph {
        states: Vec::new(),
        pred: Vec::new(),
        log_stay: Vec::new(),
        log_leave: Vec::new(),
        accepting: Vec::new(),
    };
    // last graph state of the edge entering each tree node
    let mut entry_last: Vec<Option<usize>> = vec![None; grammar.num_nodes()];
    for node in 0..grammar.num_nodes() {
        for (label, child) in grammar.children(node) {
            let action = space.action_index(label)?;
            let mut prev = entry_last[node];
            for ordinal in 0..space.count(action) {
                let subaction = space.flat(action, ordinal);
                let idx = g.states.len();
                g.states.push(GraphState {
                    prefix: node,
                    target: child,
                    action,
                    ordinal,
                    subaction,
                });
                g.pred.push(prev);
                g.log_stay.push(transitions.log_stay(subaction));
                g.log_leave.push(transitions.log_advance(subaction));
                let last = ordinal + 1 == space.count(action);
                g.accepting.push(last && grammar.is_accepting(child));
                prev = Some(idx);
            }
            entry_last[child] = prev;
        }
    }
    Ok(g)
}

/// Collapses an alignment to the action sequence it induces.
pub fn extract_actions(alignment: &Alignment, space: &SubactionSpace) -> Result<Transcript> {
    alignment.validate(space)?;
    let labels = alignment
        .instance_spans(space)
        .into_iter()
        .map(|(a, _, _)| space.labels()[a].clone());
    Transcript::new(labels)
}

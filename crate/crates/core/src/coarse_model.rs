//! Subaction state space, left-to-right transition model, and the
//! initialization / reestimation of subaction counts.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{equal_split, Dataset, Transcript};
use crate::error::{Error, Result};

/// Default number of frames a subaction should cover.
pub const DEFAULT_FRAMES_PER_SUBACTION: usize = 10;

/// Per-action subaction counts with a contiguous flat numbering of all
/// subaction states: action `a` owns `offset(a) .. offset(a) + count(a)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SpaceRepr", into = "SpaceRepr")]
pub struct SubactionSpace {
    labels: Vec<String>,
    counts: Vec<usize>,
    offsets: Vec<usize>,
    index: HashMap<String, usize>,
    owner: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct SpaceRepr {
    labels: Vec<String>,
    counts: Vec<usize>,
}

impl TryFrom<SpaceRepr> for SubactionSpace {
    type Error = Error;

    fn try_from(r: SpaceRepr) -> Result<Self> {
        SubactionSpace::new(r.labels, r.counts)
    }
}

impl From<SubactionSpace> for SpaceRepr {
    fn from(s: SubactionSpace) -> Self {
        SpaceRepr {
            labels: s.labels,
            counts: s.counts,
        }
    }
}

impl SubactionSpace {
    pub fn new(labels: Vec<String>, counts: Vec<usize>) -> Result<Self> {
        if labels.len() != counts.len() {
            return Err(Error::Dimension(format!(
                "{} labels but {} subaction counts",
                labels.len(),
                counts.len()
            )));
        }
        if labels.is_empty() {
            return Err(Error::Config("subaction space needs at least one action".into()));
        }
        if let Some(i) = counts.iter().position(|&k| k == 0) {
            return Err(Error::Config(format!(
                "action `{}` needs at least one subaction",
                labels[i]
            )));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::Format(format!("duplicate action label `{l}`")));
            }
        }
        let mut offsets = Vec::with_capacity(counts.len());
        let mut owner = Vec::new();
        let mut acc = 0;
        for (a, &k) in counts.iter().enumerate() {
            offsets.push(acc);
            owner.extend((0..k).map(|o| (a, o)));
            acc += k;
        }
        Ok(Self {
            labels,
            counts,
            offsets,
            index,
            owner,
        })
    }

    pub fn uniform(labels: Vec<String>, count: usize) -> Result<Self> {
        let counts = vec![count; labels.len()];
        Self::new(labels, counts)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn num_actions(&self) -> usize {
        self.labels.len()
    }

    /// Total number of subaction states `S`.
    pub fn total(&self) -> usize {
        self.owner.len()
    }

    pub fn action_index(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownAction(label.to_string()))
    }

    pub fn count(&self, action: usize) -> usize {
        self.counts[action]
    }

    pub fn offset(&self, action: usize) -> usize {
        self.offsets[action]
    }

    /// Flat index of the zero-based `ordinal`-th subaction of `action`.
    pub fn flat(&self, action: usize, ordinal: usize) -> usize {
        debug_assert!(ordinal < self.counts[action]);
        self.offsets[action] + ordinal
    }

    /// `(action, zero-based ordinal)` of a flat state.
    pub fn locate(&self, state: usize) -> (usize, usize) {
        self.owner[state]
    }

    pub fn is_last(&self, state: usize) -> bool {
        let (a, o) = self.owner[state];
        o + 1 == self.counts[a]
    }

    pub fn label_of(&self, state: usize) -> &str {
        &self.labels[self.owner[state].0]
    }

    pub fn transcript_indices(&self, transcript: &Transcript) -> Result<Vec<usize>> {
        transcript.iter().map(|a| self.action_index(a)).collect()
    }

    /// Minimum number of frames needed to traverse `transcript`.
    pub fn required_frames(&self, transcript: &Transcript) -> Result<usize> {
        Ok(self
            .transcript_indices(transcript)?
            .iter()
            .map(|&a| self.counts[a])
            .sum())
    }
}

/// Frame-to-subaction mapping `s(t)` together with the action-instance index
/// `n(t)` of every frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    states: Vec<usize>,
    instances: Vec<usize>,
}

impl Alignment {
    /// Builds an alignment from explicit state and instance sequences and
    /// checks the monotonicity invariants.
    pub fn new(states: Vec<usize>, instances: Vec<usize>, space: &SubactionSpace) -> Result<Self> {
        if states.len() != instances.len() {
            return Err(Error::LengthMismatch(format!(
                "{} states but {} instance indices",
                states.len(),
                instances.len()
            )));
        }
        let a = Self { states, instances };
        a.validate(space)?;
        Ok(a)
    }

    pub(crate) fn from_parts(states: Vec<usize>, instances: Vec<usize>) -> Self {
        debug_assert_eq!(states.len(), instances.len());
        Self { states, instances }
    }

    /// Recovers instance boundaries from the states alone: a new instance
    /// starts when the action label changes or when the ordinal resets from
    /// the final subaction back to the first.
    pub fn from_states(states: Vec<usize>, space: &SubactionSpace) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::LengthMismatch("empty alignment".into()));
        }
        if let Some(&s) = states.iter().find(|&&s| s >= space.total()) {
            return Err(Error::Dimension(format!("state {s} outside the subaction space")));
        }
        let mut instances = Vec::with_capacity(states.len());
        let mut n = 0;
        instances.push(0);
        for t in 1..states.len() {
            let (pa, po) = space.locate(states[t - 1]);
            let (ca, co) = space.locate(states[t]);
            let reset = pa == ca && co == 0 && po + 1 == space.count(pa) && po > 0;
            if pa != ca || reset {
                n += 1;
            }
            instances.push(n);
        }
        Self::new(states, instances, space)
    }

    pub fn validate(&self, space: &SubactionSpace) -> Result<()> {
        let bad = |frame: usize, reason: &str| {
            Err(Error::NonMonotone {
                frame,
                reason: reason.to_string(),
            })
        };
        let Some(&first) = self.states.first() else {
            return Err(Error::LengthMismatch("empty alignment".into()));
        };
        if first >= space.total() {
            return Err(Error::Dimension(format!("state {first} outside the subaction space")));
        }
        if self.instances[0] != 0 {
            return bad(0, "first instance index must be 0");
        }
        if space.locate(first).1 != 0 {
            return bad(0, "instance does not start at its first subaction");
        }
        for t in 1..self.states.len() {
            let (prev, cur) = (self.states[t - 1], self.states[t]);
            if cur >= space.total() {
                return Err(Error::Dimension(format!("state {cur} outside the subaction space")));
            }
            let (pa, po) = space.locate(prev);
            let (ca, co) = space.locate(cur);
            match self.instances[t].checked_sub(self.instances[t - 1]) {
                Some(0) => {
                    if pa != ca {
                        return bad(t, "action changes inside an instance");
                    }
                    if co != po && co != po + 1 {
                        return bad(t, "subaction step outside {0, +1}");
                    }
                }
                Some(1) => {
                    if po + 1 != space.count(pa) {
                        return bad(t, "instance left before its last subaction");
                    }
                    if co != 0 {
                        return bad(t, "instance does not start at its first subaction");
                    }
                }
                _ => return bad(t, "instance index step outside {0, +1}"),
            }
        }
        if !space.is_last(*self.states.last().unwrap()) {
            return bad(self.states.len() - 1, "video ends before the last subaction");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    /// The action-instance index `n(t)` of each frame.
    pub fn instances(&self) -> &[usize] {
        &self.instances
    }

    pub fn num_instances(&self) -> usize {
        self.instances.last().map_or(0, |n| n + 1)
    }

    /// `(action index, start, end)` for every instance, `end` exclusive.
    pub fn instance_spans(&self, space: &SubactionSpace) -> Vec<(usize, usize, usize)> {
        let mut spans: Vec<(usize, usize, usize)> = Vec::new();
        for (t, (&s, &n)) in self.states.iter().zip(&self.instances).enumerate() {
            if n == spans.len() {
                spans.push((space.locate(s).0, t, t + 1));
            } else {
                spans.last_mut().expect("instance opened").2 = t + 1;
            }
        }
        spans
    }

    pub fn action_labels<'s>(&self, space: &'s SubactionSpace) -> Vec<&'s str> {
        self.states.iter().map(|&s| space.label_of(s)).collect()
    }
}

/// Self-loop and advance probabilities for every subaction state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionModel {
    self_loop: Vec<f64>,
}

impl TransitionModel {
    pub fn new(self_loop: Vec<f64>) -> Result<Self> {
        if let Some(p) = self_loop.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::Config(format!(
                "self-loop probability {p} outside (0, 1)"
            )));
        }
        Ok(Self { self_loop })
    }

    /// Every state stays with probability `p`.
    pub fn uniform(states: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; states])
    }

    pub fn len(&self) -> usize {
        self.self_loop.len()
    }

    pub fn is_empty(&self) -> bool {
        self.self_loop.is_empty()
    }

    pub fn stay(&self, state: usize) -> f64 {
        self.self_loop[state]
    }

    pub fn advance(&self, state: usize) -> f64 {
        1.0 - self.self_loop[state]
    }

    pub fn log_stay(&self, state: usize) -> f64 {
        self.self_loop[state].ln()
    }

    pub fn log_advance(&self, state: usize) -> f64 {
        (1.0 - self.self_loop[state]).ln()
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// One shared initial subaction count for every action:
/// `frames / (instances * m)`, rounded half-up, at least 1.
pub fn init_subaction_counts(dataset: &Dataset, m: usize) -> Result<SubactionSpace> {
    if m == 0 {
        return Err(Error::Config("m must be at least 1".into()));
    }
    let mut instances = vec![0usize; dataset.label_set.len()];
    let space = SubactionSpace::uniform(dataset.label_set.clone(), 1)?;
    for sample in &dataset.samples {
        for a in space.transcript_indices(&sample.transcript)? {
            instances[a] += 1;
        }
    }
    if let Some(a) = instances.iter().position(|&n| n == 0) {
        return Err(Error::MissingAction(dataset.label_set[a].clone()));
    }
    let total: usize = instances.iter().sum();
    let k = round_half_up(dataset.total_frames() as f64 / (total * m) as f64).max(1);
    SubactionSpace::uniform(dataset.label_set.clone(), k)
}

/// Distributes `desired` lengths so each part gets at least its minimum while
/// keeping the total. Excess is taken one frame at a time from the part with
/// the most slack (earliest on ties).
pub(crate) fn fit_spans(desired: &[usize], mins: &[usize]) -> Vec<usize> {
    let total: usize = desired.iter().sum();
    let mut spans: Vec<usize> = desired.iter().zip(mins).map(|(&d, &m)| d.max(m)).collect();
    let mut excess = spans.iter().sum::<usize>() - total;
    while excess > 0 {
        let (i, _) = spans
            .iter()
            .zip(mins)
            .enumerate()
            .map(|(i, (&s, &m))| (i, s - m))
            .rev()
            .max_by_key(|&(_, slack)| slack)
            .expect("non-empty spans");
        debug_assert!(spans[i] > mins[i]);
        spans[i] -= 1;
        excess -= 1;
    }
    spans
}

/// Lays out instances with the given action indices and spans, splitting each
/// span equally over its subactions.
fn layout(actions: &[usize], spans: &[usize], space: &SubactionSpace) -> Alignment {
    let total: usize = spans.iter().sum();
    let mut states = Vec::with_capacity(total);
    let mut instances = Vec::with_capacity(total);
    for (n, (&a, &len)) in actions.iter().zip(spans).enumerate() {
        for (o, part) in equal_split(len, space.count(a)).into_iter().enumerate() {
            let s = space.flat(a, o);
            states.resize(states.len() + part, s);
            instances.resize(instances.len() + part, n);
        }
    }
    Alignment::from_parts(states, instances)
}

/// Uniform segmentation: `T` frames split into `N` equal parts, each part split
/// equally across its action's subactions, remainders to the earliest parts.
pub fn linear_alignment(
    frames: usize,
    transcript: &Transcript,
    space: &SubactionSpace,
) -> Result<Alignment> {
    let actions = space.transcript_indices(transcript)?;
    let mins: Vec<usize> = actions.iter().map(|&a| space.count(a)).collect();
    let required: usize = mins.iter().sum();
    if frames < required {
        return Err(Error::Infeasible {
            video: None,
            frames,
            required,
        });
    }
    let spans = fit_spans(&equal_split(frames, actions.len()), &mins);
    Ok(layout(&actions, &spans, space))
}

/// Relative-frequency transition estimate with add-one smoothing. Frame
/// pairs that cross an instance boundary count as an advance of the state
/// being left.
pub fn estimate_transitions(
    alignments: &[Alignment],
    space: &SubactionSpace,
) -> Result<TransitionModel> {
    let s = space.total();
    let mut stay = vec![0u64; s];
    let mut advance = vec![0u64; s];
    for al in alignments {
        for t in 1..al.len() {
            let prev = al.states[t - 1];
            if prev >= s {
                return Err(Error::Dimension(format!("state {prev} outside the subaction space")));
            }
            if al.instances[t] == al.instances[t - 1] && al.states[t] == prev {
                stay[prev] += 1;
            } else {
                advance[prev] += 1;
            }
        }
    }
    TransitionModel::new(
        stay.iter()
            .zip(&advance)
            .map(|(&st, &ad)| (st as f64 + 1.0) / ((st + ad) as f64 + 2.0))
            .collect(),
    )
}

/// Result of length reestimation.
#[derive(Debug, Clone)]
pub struct Reestimate {
    pub space: SubactionSpace,
    /// Mean aligned length per action; `None` where no frames were aligned.
    pub lengths: Vec<Option<f64>>,
}

impl Reestimate {
    /// Actions that kept their previous count for lack of aligned frames.
    pub fn kept(&self) -> impl Iterator<Item = &str> {
        self.lengths
            .iter()
            .zip(self.space.labels())
            .filter(|(l, _)| l.is_none())
            .map(|(_, a)| a.as_str())
    }
}

/// `len(a)` = frames aligned to `a` / instances of `a`; new count
/// `max(1, round(len(a) / m))`.
pub fn reestimate_space(
    alignments: &[Alignment],
    previous: &SubactionSpace,
    m: usize,
) -> Result<Reestimate> {
    if m == 0 {
        return Err(Error::Config("m must be at least 1".into()));
    }
    let n = previous.num_actions();
    let mut frames = vec![0usize; n];
    let mut instances = vec![0usize; n];
    for al in alignments {
        for (a, start, end) in al.instance_spans(previous) {
            frames[a] += end - start;
            instances[a] += 1;
        }
    }
    let mut counts = Vec::with_capacity(n);
    let mut lengths = Vec::with_capacity(n);
    for a in 0..n {
        if frames[a] == 0 {
            log::warn!(
                "action `{}` has no aligned frames; keeping {} subactions",
                previous.labels()[a],
                previous.count(a)
            );
            counts.push(previous.count(a));
            lengths.push(None);
        } else {
            let len = frames[a] as f64 / instances[a] as f64;
            counts.push(round_half_up(len / m as f64).max(1));
            lengths.push(Some(len));
        }
    }
    Ok(Reestimate {
        space: SubactionSpace::new(previous.labels().to_vec(), counts)?,
        lengths,
    })
}

/// Lowers counts until every `(frames, transcript)` pair is feasible, always
/// decrementing the largest count used by an infeasible video.
pub fn enforce_feasibility(
    space: SubactionSpace,
    videos: &[(usize, &Transcript)],
) -> Result<SubactionSpace> {
    let mut counts = space.counts().to_vec();
    let labels = space.labels().to_vec();
    let indexed: Vec<(usize, Vec<usize>)> = videos
        .iter()
        .map(|(t, tr)| Ok((*t, space.transcript_indices(tr)?)))
        .collect::<Result<_>>()?;
    loop {
        let offending = indexed
            .iter()
            .find(|(t, acts)| acts.iter().map(|&a| counts[a]).sum::<usize>() > *t);
        let Some((t, acts)) = offending else { break };
        let Some(&a) = acts
            .iter()
            .filter(|&&a| counts[a] > 1)
            .max_by_key(|&&a| (counts[a], std::cmp::Reverse(a)))
        else {
            return Err(Error::Infeasible {
                video: None,
                frames: *t,
                required: acts.len(),
            });
        };
        counts[a] -= 1;
    }
    SubactionSpace::new(labels, counts)
}

/// Re-spreads the subactions of `new_space` uniformly over each instance's
/// current frame span.
pub fn redistribute(
    alignment: &Alignment,
    old_space: &SubactionSpace,
    new_space: &SubactionSpace,
) -> Result<Alignment> {
    let spans = alignment.instance_spans(old_space);
    let actions: Vec<usize> = spans.iter().map(|s| s.0).collect();
    let lengths: Vec<usize> = spans.iter().map(|s| s.2 - s.1).collect();
    let mins: Vec<usize> = actions.iter().map(|&a| new_space.count(a)).collect();
    let required: usize = mins.iter().sum();
    if alignment.len() < required {
        return Err(Error::Infeasible {
            video: None,
            frames: alignment.len(),
            required,
        });
    }
    Ok(layout(&actions, &fit_spans(&lengths, &mins), new_space))
}

/// Writes `frame,label,ordinal` lines with 1-based ordinals.
pub fn save_alignment(
    path: impl AsRef<Path>,
    alignment: &Alignment,
    space: &SubactionSpace,
) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::with_capacity(alignment.len() * 16);
    for (t, &s) in alignment.states().iter().enumerate() {
        let (a, o) = space.locate(s);
        text.push_str(&format!("{t},{},{}\n", space.labels()[a], o + 1));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_alignment(path: impl AsRef<Path>, space: &SubactionSpace) -> Result<Alignment> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut states = Vec::new();
    for (line_no, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let malformed = || Error::Format(format!("alignment line {}: `{line}`", line_no + 1));
        let [frame, label, ordinal] = fields[..] else {
            return Err(malformed());
        };
        if frame.parse::<usize>().map_err(|_| malformed())? != line_no {
            return Err(malformed());
        }
        let a = space.action_index(label)?;
        let o: usize = ordinal.parse().map_err(|_| malformed())?;
        if o == 0 || o > space.count(a) {
            return Err(malformed());
        }
        states.push(space.flat(a, o - 1));
    }
    Alignment::from_states(states, space)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{FrameMatrix, VideoSample};
    use proptest::prelude::*;

    fn ab(counts: &[usize]) -> SubactionSpace {
        let labels = ["A", "B", "C"][..counts.len()]
            .iter()
            .map(|s| s.to_string())
            .collect();
        SubactionSpace::new(labels, counts.to_vec()).unwrap()
    }

    fn tr(actions: &[&str]) -> Transcript {
        Transcript::new(actions.iter().copied()).unwrap()
    }

    fn named(al: &Alignment, space: &SubactionSpace) -> Vec<String> {
        al.states()
            .iter()
            .map(|&s| {
                let (a, o) = space.locate(s);
                format!("{}{}", space.labels()[a], o + 1)
            })
            .collect()
    }

    #[test]
    fn flat_indices_are_contiguous() {
        let sp = ab(&[2, 3]);
        assert_eq!(sp.total(), 5);
        assert_eq!(sp.flat(1, 0), 2);
        assert_eq!(sp.locate(4), (1, 2));
        assert!(sp.is_last(1) && sp.is_last(4) && !sp.is_last(2));
    }

    #[test]
    fn linear_alignment_examples() {
        let sp = ab(&[1, 1]);
        let al = linear_alignment(6, &tr(&["A", "B"]), &sp).unwrap();
        assert_eq!(named(&al, &sp), ["A1", "A1", "A1", "B1", "B1", "B1"]);

        let sp = ab(&[2]);
        let al = linear_alignment(4, &tr(&["A"]), &sp).unwrap();
        assert_eq!(named(&al, &sp), ["A1", "A1", "A2", "A2"]);

        // 5 frames over (A, B): segments 3 and 2; A's 3 frames split 2/1,
        // the remainder going to the earlier subaction.
        let sp = ab(&[2, 2]);
        let al = linear_alignment(5, &tr(&["A", "B"]), &sp).unwrap();
        assert_eq!(named(&al, &sp), ["A1", "A1", "A2", "B1", "B2"]);
    }

    #[test]
    fn linear_alignment_infeasible() {
        let sp = ab(&[3, 3]);
        assert!(matches!(
            linear_alignment(5, &tr(&["A", "B"]), &sp),
            Err(Error::Infeasible { frames: 5, required: 6, .. })
        ));
    }

    #[test]
    fn linear_alignment_borrows_frames_for_long_actions() {
        let sp = ab(&[4, 1]);
        let al = linear_alignment(5, &tr(&["A", "B"]), &sp).unwrap();
        assert_eq!(named(&al, &sp), ["A1", "A2", "A3", "A4", "B1"]);
    }

    #[test]
    fn transition_counts_with_smoothing() {
        let sp = ab(&[2]);
        let al = Alignment::from_states(vec![0, 0, 1], &sp).unwrap();
        let tm = estimate_transitions(&[al], &sp).unwrap();
        assert!((tm.stay(0) - 0.5).abs() < 1e-12);
        // A2 never left: no counts, smoothing gives 1/2
        assert!((tm.stay(1) - 0.5).abs() < 1e-12);

        let sp = ab(&[1]);
        let al = Alignment::from_states(vec![0; 6], &sp).unwrap();
        let tm = estimate_transitions(&[al], &sp).unwrap();
        assert!((tm.stay(0) - 6.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_pairs_count_as_advances() {
        let sp = ab(&[1]);
        // (A, A) with one subaction: the instance boundary is an advance.
        let al = Alignment::new(vec![0, 0, 0, 0], vec![0, 0, 1, 1], &sp).unwrap();
        let tm = estimate_transitions(&[al], &sp).unwrap();
        assert!((tm.stay(0) - 3.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn from_states_detects_ordinal_reset() {
        let sp = ab(&[2]);
        let al = Alignment::from_states(vec![0, 1, 0, 1], &sp).unwrap();
        assert_eq!(al.instances(), [0, 0, 1, 1]);
        assert!(Alignment::from_states(vec![1, 0, 1], &sp).is_err());
        assert!(Alignment::from_states(vec![0, 0], &sp).is_err());
    }

    #[test]
    fn validate_rejects_skips() {
        let sp = ab(&[3]);
        assert!(matches!(
            Alignment::new(vec![0, 2, 2], vec![0, 0, 0], &sp),
            Err(Error::NonMonotone { frame: 1, .. })
        ));
    }

    fn dataset(lengths: &[(usize, &[&str])]) -> Dataset {
        let samples = lengths
            .iter()
            .enumerate()
            .map(|(i, (t, acts))| VideoSample {
                id: format!("v{i}"),
                features: FrameMatrix::from_rows(&vec![vec![0.0]; *t]).unwrap(),
                transcript: tr(acts),
                ground_truth: None,
            })
            .collect();
        Dataset::new(samples, vec!["A".into(), "B".into(), "C".into()]).unwrap()
    }

    #[test]
    fn initial_counts_follow_frames_per_instance() {
        let ds = dataset(&[(150, &["A", "B"]), (150, &["C"])]);
        let sp = init_subaction_counts(&ds, 10).unwrap();
        assert_eq!(sp.counts(), [10, 10, 10]);
        let sp = init_subaction_counts(&ds, 1000).unwrap();
        assert_eq!(sp.counts(), [1, 1, 1]);
        assert_eq!(DEFAULT_FRAMES_PER_SUBACTION, 10);
    }

    #[test]
    fn initial_counts_need_every_action() {
        let ds = dataset(&[(150, &["A", "B"])]);
        assert!(matches!(
            init_subaction_counts(&ds, 10),
            Err(Error::MissingAction(a)) if a == "C"
        ));
    }

    #[test]
    fn reestimation_examples() {
        let sp = ab(&[1, 1]);
        // two A instances of 60 frames each, one B of 4 frames
        let a1 = Alignment::from_states([vec![0; 60], vec![1; 4]].concat(), &sp).unwrap();
        let a2 = Alignment::from_states(vec![0; 60], &sp).unwrap();
        let r = reestimate_space(&[a1, a2], &sp, 10).unwrap();
        assert_eq!(r.space.counts(), [6, 1]);
        assert_eq!(r.lengths, vec![Some(60.0), Some(4.0)]);
        assert_eq!(r.kept().count(), 0);
    }

    #[test]
    fn reestimation_keeps_unaligned_actions() {
        let sp = ab(&[1, 3]);
        let al = Alignment::from_states(vec![0; 30], &sp).unwrap();
        let r = reestimate_space(&[al], &sp, 10).unwrap();
        assert_eq!(r.space.counts(), [3, 3]);
        assert_eq!(r.kept().collect::<Vec<_>>(), ["B"]);
    }

    #[test]
    fn rounding_is_half_up() {
        let sp = ab(&[1]);
        let al = Alignment::from_states(vec![0; 25], &sp).unwrap();
        assert_eq!(reestimate_space(&[al], &sp, 10).unwrap().space.counts(), [3]);
    }

    #[test]
    fn feasibility_lowers_largest_counts() {
        let sp = ab(&[5, 2]);
        let t = tr(&["A", "B"]);
        let fixed = enforce_feasibility(sp, &[(5, &t)]).unwrap();
        assert_eq!(fixed.counts(), [3, 2]);
    }

    #[test]
    fn redistribute_respects_instance_spans() {
        let old = ab(&[1, 1]);
        let al = Alignment::from_states([vec![0; 7], vec![1; 3]].concat(), &old).unwrap();
        let new = ab(&[2, 3]);
        let re = redistribute(&al, &old, &new).unwrap();
        assert_eq!(
            named(&re, &new),
            ["A1", "A1", "A1", "A1", "A2", "A2", "A2", "B1", "B2", "B3"]
        );
        // B needs 4 frames but its span has 3: one frame is borrowed from A.
        let new = ab(&[2, 4]);
        let re = redistribute(&al, &old, &new).unwrap();
        assert_eq!(re.instance_spans(&new), vec![(0, 0, 6), (1, 6, 10)]);
    }

    #[test]
    fn alignment_file_round_trip() {
        let sp = ab(&[2, 1]);
        let al = Alignment::from_states(vec![0, 1, 2, 2, 0, 1], &sp).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        save_alignment(&p, &al, &sp).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("0,A,1\n1,A,2\n2,B,1\n"));
        assert_eq!(load_alignment(&p, &sp).unwrap(), al);
    }

    proptest! {
        #[test]
        fn linear_alignment_is_monotone_and_covers(
            counts in proptest::collection::vec(1usize..5, 3),
            acts in proptest::collection::vec(0usize..3, 1..5),
            extra in 0usize..40,
        ) {
            let sp = ab(&counts);
            let names = ["A", "B", "C"];
            let t = tr(&acts.iter().map(|&a| names[a]).collect::<Vec<_>>());
            let frames = sp.required_frames(&t).unwrap() + extra;
            let al = linear_alignment(frames, &t, &sp).unwrap();
            prop_assert_eq!(al.len(), frames);
            al.validate(&sp).unwrap();
            let spans = al.instance_spans(&sp);
            prop_assert_eq!(spans.len(), acts.len());
            for ((a, _, _), b) in spans.iter().zip(&acts) {
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn transition_rows_are_distributions(
            counts in proptest::collection::vec(1usize..4, 2),
            extra in 0usize..30,
        ) {
            let sp = ab(&counts);
            let t = tr(&["A", "B", "A"]);
            let frames = sp.required_frames(&t).unwrap() + extra;
            let al = linear_alignment(frames, &t, &sp).unwrap();
            let tm = estimate_transitions(&[al], &sp).unwrap();
            for s in 0..sp.total() {
                prop_assert!(tm.stay(s) > 0.0 && tm.stay(s) < 1.0);
                prop_assert!((tm.stay(s) + tm.advance(s) - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn reestimated_length_scales(len in 1usize..50, scale in 1usize..5) {
            let sp = ab(&[1]);
            let base = Alignment::from_states(vec![0; len], &sp).unwrap();
            let scaled = Alignment::from_states(vec![0; len * scale], &sp).unwrap();
            let l0 = reestimate_space(&[base], &sp, 10).unwrap().lengths[0].unwrap();
            let l1 = reestimate_space(&[scaled], &sp, 10).unwrap().lengths[0].unwrap();
            prop_assert!((l1 - l0 * scale as f64).abs() < 1e-9);
        }
    }
}

//! Exhaustive-enumeration reference for forced alignment and decoding.

use std::cmp::Ordering;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weakseg::coarse_model::{Alignment, SubactionSpace, TransitionModel};
use weakseg::corpus::Transcript;
use weakseg::grammar::{build_graph, build_grammar, extract_actions};
use weakseg::inference::{align, decode};
use weakseg::Error;

pub const TRIALS: usize = 200;
pub const SCORE_TOL: f64 = 1e-9;

/// A monotone path over the expanded subaction chain of one transcript.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ChainPath {
    pub states: Vec<usize>,
    pub instances: Vec<usize>,
    /// Chain position per frame.
    pub positions: Vec<usize>,
}

pub struct Instance {
    pub space: SubactionSpace,
    pub transitions: TransitionModel,
    pub transcripts: Vec<Transcript>,
    pub scores: Array2<f64>,
    /// Every pair of optimal paths ties exactly, not just up to rounding.
    pub exact_ties: bool,
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let actions = rng.gen_range(1..=3);
    let mut counts = vec![1; actions];
    let budget = 4 - actions;
    for _ in 0..rng.gen_range(0..=budget) {
        let a = rng.gen_range(0..actions);
        counts[a] += 1;
    }
    let labels: Vec<String> = ["A", "B", "C"][..actions].iter().map(|s| s.to_string()).collect();
    let space = SubactionSpace::new(labels.clone(), counts).unwrap();
    let total = space.total();
    let exact_ties = rng.gen_bool(0.3);
    let transitions = if exact_ties || rng.gen_bool(0.2) {
        TransitionModel::uniform(total, 0.5).unwrap()
    } else {
        TransitionModel::new((0..total).map(|_| rng.gen_range(0.05..0.95)).collect()).unwrap()
    };
    let transcripts = (0..rng.gen_range(1..=3))
        .map(|_| {
            let n = rng.gen_range(1..=3);
            Transcript::new((0..n).map(|_| labels[rng.gen_range(0..actions)].clone())).unwrap()
        })
        .collect();
    let frames = rng.gen_range(1..=8);
    // With uniform transitions and one score per frame shared by all states,
    // every path performs the same floating-point operations: exact ties.
    let integer = !exact_ties && rng.gen_bool(0.4);
    let rows: Vec<f64> = (0..frames).map(|_| rng.gen_range(-2.0..1.0)).collect();
    let scores = Array2::from_shape_fn((frames, total), |(t, _)| {
        if exact_ties {
            rows[t]
        } else if integer {
            -(rng.gen_range(0..3) as f64)
        } else {
            rng.gen_range(-3.0..1.0)
        }
    });
    Instance {
        space,
        transitions,
        transcripts,
        scores,
        exact_ties,
    }
}

/// Every monotone path of `frames` frames through the transcript's chain.
pub fn chain_paths(frames: usize, transcript: &Transcript, space: &SubactionSpace) -> Vec<ChainPath> {
    let mut chain = Vec::new();
    let mut chain_instance = Vec::new();
    for (n, label) in transcript.iter().enumerate() {
        let a = space.action_index(label).unwrap();
        for k in 0..space.count(a) {
            chain.push(space.flat(a, k));
            chain_instance.push(n);
        }
    }
    let mut out = Vec::new();
    for mask in 0u32..(1 << (frames - 1)) {
        if mask.count_ones() as usize + 1 != chain.len() {
            continue;
        }
        let mut pos = 0;
        let mut positions = vec![0];
        for t in 1..frames {
            if mask & (1 << (t - 1)) != 0 {
                pos += 1;
            }
            positions.push(pos);
        }
        out.push(ChainPath {
            states: positions.iter().map(|&p| chain[p]).collect(),
            instances: positions.iter().map(|&p| chain_instance[p]).collect(),
            positions,
        });
    }
    out
}

/// Path score accumulated in the same order as the dynamic program.
pub fn path_score(path: &ChainPath, scores: &Array2<f64>, tm: &TransitionModel) -> f64 {
    let mut acc = scores[[0, path.states[0]]];
    for t in 1..path.states.len() {
        let prev = path.states[t - 1];
        acc += if path.positions[t] == path.positions[t - 1] {
            tm.log_stay(prev)
        } else {
            tm.log_advance(prev)
        };
        acc += scores[[t, path.states[t]]];
    }
    acc
}

pub struct Best {
    /// Under the stay-over-advance tie rule: among optimal paths, the one
    /// whose chain positions are largest compared from the last frame back.
    pub path: ChainPath,
    pub score: f64,
    /// No other path comes within the score tolerance.
    pub unique: bool,
}

pub fn oracle_best(paths: &[ChainPath], scores: &Array2<f64>, tm: &TransitionModel) -> Option<Best> {
    let rev_cmp = |a: &ChainPath, b: &ChainPath| -> Ordering {
        a.positions.iter().rev().cmp(b.positions.iter().rev())
    };
    let scored: Vec<(&ChainPath, f64)> = paths.iter().map(|p| (p, path_score(p, scores, tm))).collect();
    let top = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    // Paths equal in exact arithmetic may differ in the last bits depending
    // on summation order, so near-equal scores count as ties.
    let tied: Vec<&ChainPath> = scored
        .into_iter()
        .filter(|(_, s)| top - s <= SCORE_TOL)
        .map(|(p, _)| p)
        .collect();
    let unique = tied.len() == 1;
    tied.into_iter().max_by(|a, b| rev_cmp(a, b)).map(|p| Best {
        path: p.clone(),
        score: top,
        unique,
    })
}

/// The returned path must be optimal; where the tie rule is decidable
/// (exact ties or a unique optimum) it must be the oracle's path.
pub fn check_path(trial: usize, inst: &Instance, al: &Alignment, paths: &[ChainPath], best: &Best) {
    let got = paths
        .iter()
        .find(|p| p.states == al.states() && p.instances == al.instances())
        .unwrap_or_else(|| panic!("trial {trial}: returned path is not a transcript path"));
    let s = path_score(got, &inst.scores, &inst.transitions);
    assert!((s - best.score).abs() <= SCORE_TOL, "trial {trial}: path is not optimal");
    if inst.exact_ties || best.unique {
        assert_eq!(got, &best.path, "trial {trial}: tie rule");
    }
}


/// Checks `align` on one instance; returns whether it was feasible.
pub fn check_align(trial: usize, inst: &Instance) -> bool {
    let tr = &inst.transcripts[0];
    let paths = chain_paths(inst.scores.nrows(), tr, &inst.space);
    let got = align(inst.scores.view(), tr, &inst.space, &inst.transitions);
    match oracle_best(&paths, &inst.scores, &inst.transitions) {
        None => {
            assert!(
                matches!(got, Err(Error::Infeasible { .. })),
                "trial {trial}: expected infeasible"
            );
            false
        }
        Some(best) => {
            let (al, s) = got.unwrap_or_else(|e| panic!("trial {trial}: {e}"));
            assert!((s - best.score).abs() <= SCORE_TOL, "trial {trial}: {s} vs {}", best.score);
            assert_eq!(&extract_actions(&al, &inst.space).unwrap(), tr);
            check_path(trial, inst, &al, &paths, &best);
            true
        }
    }
}

/// Checks `decode` on one instance against every transcript of its grammar.
pub fn check_decode(trial: usize, inst: &Instance) {
    let grammar = build_grammar(&inst.transcripts);
    let graph = build_graph(&grammar, &inst.space, &inst.transitions).unwrap();
    let per_transcript: Vec<(Transcript, Option<Best>)> = grammar
        .transcripts()
        .into_iter()
        .map(|tr| {
            let paths = chain_paths(inst.scores.nrows(), &tr, &inst.space);
            let best = oracle_best(&paths, &inst.scores, &inst.transitions);
            (tr, best)
        })
        .collect();
    let optimum = per_transcript
        .iter()
        .filter_map(|(_, b)| b.as_ref().map(|b| b.score))
        .fold(f64::NEG_INFINITY, f64::max);
    let got = decode(inst.scores.view(), &graph, &inst.space);
    if optimum == f64::NEG_INFINITY {
        assert!(matches!(got, Err(Error::Infeasible { .. })), "trial {trial}");
        return;
    }
    let d = got.unwrap_or_else(|e| panic!("trial {trial}: {e}"));
    assert!((d.score - optimum).abs() <= SCORE_TOL, "trial {trial}");
    assert!(grammar.accepts(&d.transcript), "trial {trial}");
    assert_eq!(extract_actions(&d.alignment, &inst.space).unwrap(), d.transcript);
    let (tr, best) = per_transcript.iter().find(|(tr, _)| *tr == d.transcript).unwrap();
    let best = best.as_ref().unwrap();
    assert!((best.score - d.score).abs() <= SCORE_TOL, "trial {trial}");
    let paths = chain_paths(inst.scores.nrows(), tr, &inst.space);
    check_path(trial, inst, &d.alignment, &paths, best);
    // decode scores at least as well as forced alignment to any member
    for (tr, _) in &per_transcript {
        if let Ok((_, s)) = align(inst.scores.view(), tr, &inst.space, &inst.transitions) {
            assert!(d.score >= s - SCORE_TOL);
        }
    }
}

/// Runs `trials` seeded align and decode checks; returns the number of
/// feasible forced alignments.
pub fn run_trials(seed: u64, trials: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut feasible = 0;
    for trial in 0..trials {
        let inst = random_instance(&mut rng);
        feasible += usize::from(check_align(trial, &inst));
        check_decode(trial, &inst);
    }
    feasible
}

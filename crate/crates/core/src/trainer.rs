//! The iterative weak-learning loop: linear initialization, then repeated
//! fine-model training, forced realignment, and length reestimation until the
//! frame change rate settles.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coarse_model::{
    enforce_feasibility, estimate_transitions, init_subaction_counts, linear_alignment,
    redistribute, reestimate_space, Alignment, SubactionSpace, TransitionModel,
    DEFAULT_FRAMES_PER_SUBACTION,
};
use crate::corpus::{Dataset, Transcript};
use crate::error::{Error, Result};
use crate::fine_model::{
    estimate_prior, posteriors, to_likelihood, train_pass, video_chunks, GruParams, Prior,
    SgdConfig, DEFAULT_HIDDEN, DEFAULT_INIT_SCALE,
};
use crate::grammar::build_grammar;
use crate::inference::align;
use crate::model::Model;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Target frames per subaction.
    pub m: usize,
    /// Stop once consecutive change rates differ by less than this.
    pub theta: f64,
    pub max_iters: usize,
    pub hidden: usize,
    pub init_scale: f64,
    pub sgd: SgdConfig,
    /// Passes over all chunks per iteration.
    pub epochs_per_iter: usize,
    /// Continue from the previous iteration's weights instead of
    /// re-initializing.
    pub warm_start: bool,
    /// Re-derive subaction counts from the realigned lengths.
    pub reestimate: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            m: DEFAULT_FRAMES_PER_SUBACTION,
            theta: 0.02,
            max_iters: 20,
            hidden: DEFAULT_HIDDEN,
            init_scale: DEFAULT_INIT_SCALE,
            sgd: SgdConfig::default(),
            epochs_per_iter: 2,
            warm_start: true,
            reestimate: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.m == 0 {
            return bad("m must be at least 1");
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad("theta must lie in (0, 1)");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if self.hidden == 0 || self.epochs_per_iter == 0 || self.sgd.batch_size == 0 {
            return bad("hidden size, epochs and batch size must be at least 1");
        }
        if !(self.sgd.learning_rate > 0.0 && self.sgd.learning_rate.is_finite()) {
            return bad("learning rate must be positive and finite");
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return bad("init scale must be finite and non-negative");
        }
        Ok(())
    }
}

/// Everything the loop carries between iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerState {
    pub iteration: usize,
    /// One per training video, in dataset order.
    pub alignments: Vec<Alignment>,
    pub space: SubactionSpace,
    pub params: GruParams,
    pub prior: Prior,
    pub transitions: TransitionModel,
    pub changes: Vec<f64>,
}

/// Outcome of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub loss: f64,
    pub change: f64,
    /// Subaction counts per action after reestimation.
    pub counts: Vec<usize>,
    /// The fine model trained in this iteration, packaged with the coarse
    /// model of the alignments it was trained on.
    pub model: Model,
}

impl IterationRecord {
    pub fn progress_line(&self, labels: &[String]) -> String {
        let ks: Vec<String> = labels
            .iter()
            .zip(&self.counts)
            .map(|(a, k)| format!("{a}={k}"))
            .collect();
        format!(
            "iter {:>3}  loss {:.5}  change {:.4}  K [{}]",
            self.iteration,
            self.loss,
            self.change,
            ks.join(" ")
        )
    }
}

fn check_dataset(dataset: &Dataset) -> Result<usize> {
    let dim = dataset
        .feature_dim()
        .ok_or_else(|| Error::Config("training set is empty".into()))?;
    if let Some(s) = dataset.samples.iter().find(|s| s.features.dim() != dim) {
        return Err(Error::Dimension(format!(
            "video `{}` has feature dimension {}, expected {dim}",
            s.id,
            s.features.dim()
        )));
    }
    Ok(dim)
}

fn derive_seed(seed: u64, iteration: usize, epoch: usize) -> u64 {
    seed ^ ((iteration as u64) << 32 | epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn coarse_from(alignments: &[Alignment], space: &SubactionSpace) -> Result<(TransitionModel, Prior)> {
    Ok((
        estimate_transitions(alignments, space)?,
        estimate_prior(alignments, space.total())?,
    ))
}

/// Linear initialization with one shared subaction count per action and
/// seeded random fine-model weights.
pub fn initialize(dataset: &Dataset, config: &TrainConfig) -> Result<TrainerState> {
    config.validate()?;
    let dim = check_dataset(dataset)?;
    let space = init_subaction_counts(dataset, config.m)?;
    let alignments = dataset
        .samples
        .iter()
        .map(|s| linear_alignment(s.frames(), &s.transcript, &space).map_err(|e| e.for_video(&s.id)))
        .collect::<Result<Vec<_>>>()?;
    let (transitions, prior) = coarse_from(&alignments, &space)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = GruParams::random(dim, config.hidden, space.total(), config.init_scale, &mut rng);
    Ok(TrainerState {
        iteration: 0,
        alignments,
        space,
        params,
        prior,
        transitions,
        changes: Vec::new(),
    })
}

/// Fraction of frames whose action label differs between two alignment sets.
pub fn change_rate(
    before: &[Alignment],
    before_space: &SubactionSpace,
    after: &[Alignment],
    after_space: &SubactionSpace,
) -> f64 {
    let (mut diff, mut total) = (0usize, 0usize);
    for (b, a) in before.iter().zip(after) {
        diff += b
            .states()
            .iter()
            .zip(a.states())
            .filter(|(&x, &y)| before_space.label_of(x) != after_space.label_of(y))
            .count();
        total += b.len();
    }
    if total == 0 {
        0.0
    } else {
        diff as f64 / total as f64
    }
}

/// Output column map from `new` to `old`: subaction `k` of `K_new` inherits
/// subaction `floor(k * K_old / K_new)` of the same action.
fn output_map(old: &SubactionSpace, new: &SubactionSpace) -> Vec<usize> {
    (0..new.total())
        .map(|s| {
            let (a, k) = new.locate(s);
            old.flat(a, k * old.count(a) / new.count(a))
        })
        .collect()
}

/// One round: train, realign, reestimate, redistribute.
pub fn iterate(
    state: TrainerState,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<(TrainerState, IterationRecord)> {
    config.validate()?;
    if state.alignments.len() != dataset.len() {
        return Err(Error::LengthMismatch(format!(
            "{} alignments for {} videos",
            state.alignments.len(),
            dataset.len()
        )));
    }
    let iteration = state.iteration + 1;

    // (1) fine model on chunks labelled by the current alignments
    let mut params = if config.warm_start || iteration == 1 {
        state.params
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, iteration, usize::MAX));
        GruParams::random(
            state.params.input_dim(),
            config.hidden,
            state.space.total(),
            config.init_scale,
            &mut rng,
        )
    };
    let mut chunks = Vec::with_capacity(dataset.total_frames());
    for (s, al) in dataset.samples.iter().zip(&state.alignments) {
        chunks.extend(video_chunks(&s.features, al).map_err(|e| e.for_video(&s.id))?);
    }
    let mut loss = 0.0;
    for epoch in 0..config.epochs_per_iter {
        loss += train_pass(&mut params, &chunks, config.sgd, derive_seed(config.seed, iteration, epoch))?;
    }
    loss /= config.epochs_per_iter as f64;
    drop(chunks);

    let model = Model {
        params: params.clone(),
        prior: state.prior.clone(),
        space: state.space.clone(),
        transitions: state.transitions.clone(),
        grammar: build_grammar(dataset.samples.iter().map(|s| &s.transcript)),
    };

    // (2) forced realignment to each video's own transcript
    let realigned = dataset
        .samples
        .par_iter()
        .map(|s| {
            let scores = to_likelihood(&posteriors(&params, &s.features)?, &state.prior)?;
            align(scores.view(), &s.transcript, &state.space, &state.transitions)
                .map(|(al, _)| al)
                .map_err(|e| e.for_video(&s.id))
        })
        .collect::<Result<Vec<_>>>()?;
    let change = change_rate(&state.alignments, &state.space, &realigned, &state.space);

    // (3) lengths and counts, then (4) uniform redistribution
    let (space, alignments) = if config.reestimate {
        let re = reestimate_space(&realigned, &state.space, config.m)?;
        let videos: Vec<(usize, &Transcript)> =
            dataset.samples.iter().map(|s| (s.frames(), &s.transcript)).collect();
        let space = enforce_feasibility(re.space, &videos)?;
        let alignments = realigned
            .iter()
            .zip(&dataset.samples)
            .map(|(al, s)| redistribute(al, &state.space, &space).map_err(|e| e.for_video(&s.id)))
            .collect::<Result<Vec<_>>>()?;
        (space, alignments)
    } else {
        (state.space.clone(), realigned)
    };
    if space != state.space {
        params = params.remap_outputs(&output_map(&state.space, &space));
    }
    let (transitions, prior) = coarse_from(&alignments, &space)?;

    let mut changes = state.changes;
    changes.push(change);
    let record = IterationRecord {
        iteration,
        loss,
        change,
        counts: space.counts().to_vec(),
        model,
    };
    log::info!("{}", record.progress_line(space.labels()));
    Ok((
        TrainerState {
            iteration,
            alignments,
            space,
            params,
            prior,
            transitions,
            changes,
        },
        record,
    ))
}

/// True iff the last two change rates differ by less than `theta`; never
/// true with fewer than two entries.
pub fn should_stop(changes: &[f64], theta: f64) -> bool {
    match changes {
        [.., prev, last] => (last - prev).abs() < theta,
        _ => false,
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: Model,
    pub records: Vec<IterationRecord>,
    /// Iteration at which the stop criterion fired, if it did.
    pub stopped_at: Option<usize>,
    /// Iteration whose model was returned.
    pub selected: usize,
    pub final_state: TrainerState,
}

impl FitResult {
    /// `iteration,loss,change,subactions` rows.
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from("iteration,loss,change,subactions\n");
        for r in &self.records {
            let total: usize = r.counts.iter().sum();
            out.push_str(&format!("{},{:.6},{:.6},{total}\n", r.iteration, r.loss, r.change));
        }
        out
    }
}

/// Runs the loop until the stop criterion or `max_iters`. When the criterion
/// fires at iteration `k`, the model of iteration `k - 1` is returned.
pub fn fit(dataset: &Dataset, config: &TrainConfig) -> Result<FitResult> {
    let mut state = initialize(dataset, config)?;
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut stopped_at = None;
    for _ in 0..config.max_iters {
        let (next, record) = iterate(state, dataset, config)?;
        state = next;
        records.push(record);
        if should_stop(&state.changes, config.theta) {
            stopped_at = Some(state.iteration);
            break;
        }
    }
    let pick = if stopped_at.is_some() {
        records.len() - 2
    } else {
        records.len() - 1
    };
    Ok(FitResult {
        model: records[pick].model.clone(),
        selected: records[pick].iteration,
        records,
        stopped_at,
        final_state: state,
    })
}

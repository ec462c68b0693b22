//! Frame-level subaction classifier: a single GRU layer with a softmax output
//! over all subaction states.
//!
//! Training and inference operate on short chunks ending at each frame, so
//! only the last [`CHUNK_LEN`] frames of context reach any output. The loss
//! supervises the final frame of each chunk.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coarse_model::Alignment;
use crate::corpus::FrameMatrix;
use crate::error::{Error, Result};

/// Frames per chunk: the current frame and the 20 before it.
pub const CHUNK_LEN: usize = 21;
/// Floor applied to probabilities before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-10;
pub const DEFAULT_HIDDEN: usize = 64;
pub const DEFAULT_INIT_SCALE: f64 = 0.08;

const INFER_BATCH: usize = 256;

/// GRU weights. Input matrices are `D x H`, recurrent matrices `H x H`, the
/// output matrix `H x S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruParams {
    pub w_z: Array2<f64>,
    pub u_z: Array2<f64>,
    pub b_z: Array1<f64>,
    pub w_r: Array2<f64>,
    pub u_r: Array2<f64>,
    pub b_r: Array1<f64>,
    pub w_h: Array2<f64>,
    pub u_h: Array2<f64>,
    pub b_h: Array1<f64>,
    pub w_out: Array2<f64>,
    pub b_out: Array1<f64>,
}

impl GruParams {
    pub fn zeros(input: usize, hidden: usize, outputs: usize) -> Self {
        let m = |r, c| Array2::zeros((r, c));
        Self {
            w_z: m(input, hidden),
            u_z: m(hidden, hidden),
            b_z: Array1::zeros(hidden),
            w_r: m(input, hidden),
            u_r: m(hidden, hidden),
            b_r: Array1::zeros(hidden),
            w_h: m(input, hidden),
            u_h: m(hidden, hidden),
            b_h: Array1::zeros(hidden),
            w_out: m(hidden, outputs),
            b_out: Array1::zeros(outputs),
        }
    }

    /// Uniform initialization in `[-scale, scale]`.
    pub fn random(input: usize, hidden: usize, outputs: usize, scale: f64, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(input, hidden, outputs);
        for t in p.tensors_mut() {
            t.iter_mut().for_each(|v| *v = rng.gen_range(-scale..=scale));
        }
        p
    }

    pub fn input_dim(&self) -> usize {
        self.w_z.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.u_z.nrows()
    }

    pub fn num_outputs(&self) -> usize {
        self.b_out.len()
    }

    pub const NAMES: [&'static str; 11] = [
        "w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_h", "u_h", "b_h", "w_out", "b_out",
    ];

    /// All parameter tensors as flat row-major slices, in [`Self::NAMES`] order.
    pub fn tensors(&self) -> [&[f64]; 11] {
        fn f(a: Option<&[f64]>) -> &[f64] {
            a.expect("standard layout")
        }
        [
            f(self.w_z.as_slice()),
            f(self.u_z.as_slice()),
            f(self.b_z.as_slice()),
            f(self.w_r.as_slice()),
            f(self.u_r.as_slice()),
            f(self.b_r.as_slice()),
            f(self.w_h.as_slice()),
            f(self.u_h.as_slice()),
            f(self.b_h.as_slice()),
            f(self.w_out.as_slice()),
            f(self.b_out.as_slice()),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 11] {
        fn f(a: Option<&mut [f64]>) -> &mut [f64] {
            a.expect("standard layout")
        }
        [
            f(self.w_z.as_slice_mut()),
            f(self.u_z.as_slice_mut()),
            f(self.b_z.as_slice_mut()),
            f(self.w_r.as_slice_mut()),
            f(self.u_r.as_slice_mut()),
            f(self.b_r.as_slice_mut()),
            f(self.w_h.as_slice_mut()),
            f(self.u_h.as_slice_mut()),
            f(self.b_h.as_slice_mut()),
            f(self.w_out.as_slice_mut()),
            f(self.b_out.as_slice_mut()),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let (d, h, s) = (self.input_dim(), self.hidden_dim(), self.num_outputs());
        let shapes = [
            (self.w_z.dim(), (d, h)),
            (self.w_r.dim(), (d, h)),
            (self.w_h.dim(), (d, h)),
            (self.u_z.dim(), (h, h)),
            (self.u_r.dim(), (h, h)),
            (self.u_h.dim(), (h, h)),
            (self.w_out.dim(), (h, s)),
            ((self.b_z.len(), 1), (h, 1)),
            ((self.b_r.len(), 1), (h, 1)),
            ((self.b_h.len(), 1), (h, 1)),
        ];
        if let Some((got, want)) = shapes.iter().find(|(g, w)| g != w) {
            return Err(Error::Dimension(format!(
                "parameter shape {got:?}, expected {want:?}"
            )));
        }
        if self.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return Err(Error::Format("non-finite GRU parameter".into()));
        }
        Ok(())
    }

    /// Rebuilds the output layer: new output `j` copies old output `map[j]`.
    pub fn remap_outputs(&self, map: &[usize]) -> Self {
        let h = self.hidden_dim();
        let mut p = self.clone();
        p.w_out = Array2::zeros((h, map.len()));
        p.b_out = Array1::zeros(map.len());
        for (j, &old) in map.iter().enumerate() {
            p.w_out.column_mut(j).assign(&self.w_out.column(old));
            p.b_out[j] = self.b_out[old];
        }
        p
    }

    fn check_input(&self, dim: usize) -> Result<()> {
        if dim != self.input_dim() {
            return Err(Error::Dimension(format!(
                "features have dimension {dim}, model expects {}",
                self.input_dim()
            )));
        }
        Ok(())
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Row-wise softmax of logits, in place.
fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

struct Step {
    x: Array2<f64>,
    h_prev: Array2<f64>,
    z: Array2<f64>,
    r: Array2<f64>,
    c: Array2<f64>,
    /// Rows that are still in their padding prefix.
    padded: Vec<usize>,
}

/// Runs a batch of windows right-aligned on the last frame. Shorter windows
/// are left-padded with steps that keep the hidden state at zero.
struct BatchRun {
    steps: Vec<Step>,
    hidden: Array2<f64>,
}

fn affine(x: &Array2<f64>, w: &Array2<f64>, h: &Array2<f64>, u: &Array2<f64>, b: &Array1<f64>) -> Array2<f64> {
    let mut a = x.dot(w);
    general_mat_mul(1.0, h, u, 1.0, &mut a);
    a += b;
    a
}

fn run_batch(p: &GruParams, windows: &[ArrayView2<'_, f32>], keep_steps: bool) -> BatchRun {
    let batch = windows.len();
    let (d, hd) = (p.input_dim(), p.hidden_dim());
    let len = windows.iter().map(|w| w.nrows()).max().unwrap_or(0);
    let mut h = Array2::<f64>::zeros((batch, hd));
    let mut steps = Vec::with_capacity(if keep_steps { len } else { 0 });
    for j in 0..len {
        let mut x = Array2::<f64>::zeros((batch, d));
        let mut padded = Vec::new();
        for (i, w) in windows.iter().enumerate() {
            let offset = len - w.nrows();
            if j < offset {
                padded.push(i);
            } else {
                Zip::from(x.row_mut(i))
                    .and(w.row(j - offset))
                    .for_each(|o, &v| *o = f64::from(v));
            }
        }
        let z = affine(&x, &p.w_z, &h, &p.u_z, &p.b_z).mapv_into(sigmoid);
        let r = affine(&x, &p.w_r, &h, &p.u_r, &p.b_r).mapv_into(sigmoid);
        let rh = &r * &h;
        let c = affine(&x, &p.w_h, &rh, &p.u_h, &p.b_h).mapv_into(f64::tanh);
        let mut h_new = &h + &(&z * &(&c - &h));
        for &i in &padded {
            h_new.row_mut(i).fill(0.0);
        }
        if keep_steps {
            steps.push(Step {
                x,
                h_prev: h,
                z,
                r,
                c,
                padded,
            });
        }
        h = h_new;
    }
    BatchRun { steps, hidden: h }
}

fn output_probs(p: &GruParams, hidden: &Array2<f64>) -> Array2<f64> {
    let mut logits = hidden.dot(&p.w_out);
    logits += &p.b_out;
    softmax_rows(&mut logits);
    logits
}

/// Posterior rows for every frame of `window`, starting from a zero state.
pub fn forward(params: &GruParams, window: ArrayView2<'_, f32>) -> Result<Array2<f64>> {
    params.check_input(window.ncols())?;
    if window.nrows() == 0 {
        return Err(Error::Dimension("empty window".into()));
    }
    let mut out = Array2::zeros((window.nrows(), params.num_outputs()));
    let run = run_batch(params, &[window], true);
    for (t, step) in run.steps.iter().enumerate().skip(1) {
        out.row_mut(t - 1).assign(&output_probs(params, &step.h_prev).row(0));
    }
    out.row_mut(window.nrows() - 1)
        .assign(&output_probs(params, &run.hidden).row(0));
    Ok(out)
}

/// Per-frame subaction posteriors `p(s | x_t)`, `T x S`.
#[derive(Debug, Clone, PartialEq)]
pub struct Posteriors(pub Array2<f64>);

impl Posteriors {
    pub fn frames(&self) -> usize {
        self.0.nrows()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    /// Most probable state per frame.
    pub fn argmax(&self) -> Vec<usize> {
        self.0
            .rows()
            .into_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b })
                    .0
            })
            .collect()
    }
}

/// The window `x[max(0, t-20) ..= t]`.
pub fn chunk_window(video: &FrameMatrix, t: usize) -> ArrayView2<'_, f32> {
    let start = (t + 1).saturating_sub(CHUNK_LEN);
    video.view().slice_move(s![start..=t, ..])
}

/// Row `t` is the final-frame output of the chunk ending at frame `t`.
pub fn posteriors(params: &GruParams, video: &FrameMatrix) -> Result<Posteriors> {
    params.check_input(video.dim())?;
    let frames = video.frames();
    let starts: Vec<usize> = (0..frames).step_by(INFER_BATCH).collect();
    let blocks: Vec<Array2<f64>> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + INFER_BATCH).min(frames);
            let windows: Vec<_> = (start..end).map(|t| chunk_window(video, t)).collect();
            let run = run_batch(params, &windows, false);
            output_probs(params, &run.hidden)
        })
        .collect();
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    let all = ndarray::concatenate(Axis(0), &views).map_err(|e| Error::Dimension(e.to_string()))?;
    Ok(Posteriors(all))
}

/// A training chunk: a window of frames and the subaction of its last frame.
#[derive(Debug, Clone)]
pub struct Chunk<'a> {
    pub frames: ArrayView2<'a, f32>,
    pub target: usize,
}

/// One chunk per frame, labelled with the aligned subaction of that frame.
pub fn video_chunks<'a>(video: &'a FrameMatrix, alignment: &Alignment) -> Result<Vec<Chunk<'a>>> {
    if alignment.len() != video.frames() {
        return Err(Error::LengthMismatch(format!(
            "alignment covers {} frames, video has {}",
            alignment.len(),
            video.frames()
        )));
    }
    Ok(alignment
        .states()
        .iter()
        .enumerate()
        .map(|(t, &target)| Chunk {
            frames: chunk_window(video, t),
            target,
        })
        .collect())
}

/// Mean cross-entropy of the final-frame outputs and its gradient with
/// respect to every parameter.
pub fn loss_and_gradient(params: &GruParams, chunks: &[Chunk<'_>]) -> Result<(f64, GruParams)> {
    if chunks.is_empty() {
        return Err(Error::Config("no chunks".into()));
    }
    let s_count = params.num_outputs();
    for c in chunks {
        params.check_input(c.frames.ncols())?;
        if c.target >= s_count {
            return Err(Error::Dimension(format!(
                "target {} outside {s_count} outputs",
                c.target
            )));
        }
        if c.frames.nrows() == 0 {
            return Err(Error::Dimension("empty chunk".into()));
        }
    }
    let windows: Vec<_> = chunks.iter().map(|c| c.frames).collect();
    let run = run_batch(params, &windows, true);
    let batch = chunks.len() as f64;

    let mut probs = output_probs(params, &run.hidden);
    let mut loss = 0.0;
    for (i, c) in chunks.iter().enumerate() {
        let p = probs[[i, c.target]];
        // `max` would swallow a NaN
        loss -= if p.is_nan() { p } else { p.max(f64::MIN_POSITIVE).ln() };
        probs[[i, c.target]] -= 1.0;
    }
    let d_logits = probs / batch;
    let mut g = GruParams::zeros(params.input_dim(), params.hidden_dim(), s_count);
    g.w_out = run.hidden.t().dot(&d_logits);
    g.b_out = d_logits.sum_axis(Axis(0));
    let mut d_h = d_logits.dot(&params.w_out.t());

    for step in run.steps.iter().rev() {
        let Step {
            x,
            h_prev,
            z,
            r,
            c,
            padded,
        } = step;
        let mut d_hp = &d_h * &z.mapv(|v| 1.0 - v);
        let mut d_ah = &d_h * z * &c.mapv(|v| 1.0 - v * v);
        let mut d_az = &d_h * &(c - h_prev) * &z.mapv(|v| v * (1.0 - v));
        for &i in padded {
            d_ah.row_mut(i).fill(0.0);
            d_az.row_mut(i).fill(0.0);
        }
        let rh = r * h_prev;
        general_mat_mul(1.0, &x.t(), &d_ah, 1.0, &mut g.w_h);
        general_mat_mul(1.0, &rh.t(), &d_ah, 1.0, &mut g.u_h);
        g.b_h += &d_ah.sum_axis(Axis(0));
        let d_rh = d_ah.dot(&params.u_h.t());
        d_hp += &(&d_rh * r);
        let mut d_ar = &d_rh * h_prev * &r.mapv(|v| v * (1.0 - v));
        for &i in padded {
            d_ar.row_mut(i).fill(0.0);
        }

        general_mat_mul(1.0, &x.t(), &d_az, 1.0, &mut g.w_z);
        general_mat_mul(1.0, &h_prev.t(), &d_az, 1.0, &mut g.u_z);
        g.b_z += &d_az.sum_axis(Axis(0));
        general_mat_mul(1.0, &d_az, &params.u_z.t(), 1.0, &mut d_hp);

        general_mat_mul(1.0, &x.t(), &d_ar, 1.0, &mut g.w_r);
        general_mat_mul(1.0, &h_prev.t(), &d_ar, 1.0, &mut g.u_r);
        g.b_r += &d_ar.sum_axis(Axis(0));
        general_mat_mul(1.0, &d_ar, &params.u_r.t(), 1.0, &mut d_hp);

        d_h = d_hp;
    }
    Ok((loss / batch, g))
}

/// Plain minibatch gradient descent settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 64,
        }
    }
}

/// One pass over `chunks` in a seeded shuffled order. Returns the mean loss
/// over all chunks, each measured before its minibatch's update.
pub fn train_pass(
    params: &mut GruParams,
    chunks: &[Chunk<'_>],
    sgd: SgdConfig,
    seed: u64,
) -> Result<f64> {
    if chunks.is_empty() {
        return Err(Error::Config("no chunks to train on".into()));
    }
    if !(sgd.learning_rate >= 0.0 && sgd.learning_rate.is_finite()) || sgd.batch_size == 0 {
        return Err(Error::Config(
            "learning rate must be finite and >= 0, batch size >= 1".into(),
        ));
    }
    let mut order: Vec<usize> = (0..chunks.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut total = 0.0;
    let mut batch = Vec::with_capacity(sgd.batch_size);
    for ids in order.chunks(sgd.batch_size) {
        batch.clear();
        batch.extend(ids.iter().map(|&i| chunks[i].clone()));
        let (loss, grad) = loss_and_gradient(params, &batch)?;
        if !loss.is_finite() {
            return Err(Error::Divergence);
        }
        total += loss * ids.len() as f64;
        if sgd.learning_rate > 0.0 {
            for (w, g) in params.tensors_mut().into_iter().zip(grad.tensors()) {
                w.iter_mut().zip(g).for_each(|(w, g)| *w -= sgd.learning_rate * g);
            }
        }
    }
    Ok(total / chunks.len() as f64)
}

/// Subaction prior `p(s)`, strictly positive and summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prior(pub Vec<f64>);

/// Relative state frequency with add-one smoothing:
/// `(count(s) + 1) / (frames + S)`.
pub fn estimate_prior(alignments: &[Alignment], num_states: usize) -> Result<Prior> {
    if alignments.is_empty() || num_states == 0 {
        return Err(Error::Config("prior needs alignments and states".into()));
    }
    let mut counts = vec![0usize; num_states];
    let mut total = 0usize;
    for al in alignments {
        for &s in al.states() {
            let slot = counts
                .get_mut(s)
                .ok_or_else(|| Error::Dimension(format!("state {s} outside {num_states} states")))?;
            *slot += 1;
            total += 1;
        }
    }
    let denom = (total + num_states) as f64;
    Ok(Prior(counts.iter().map(|&c| (c as f64 + 1.0) / denom).collect()))
}

/// Converts posteriors to scaled log-likelihoods:
/// `log max(p(s|x_t), 1e-10) - log p(s)`.
pub fn to_likelihood(post: &Posteriors, prior: &Prior) -> Result<Array2<f64>> {
    if post.0.ncols() != prior.0.len() {
        return Err(Error::Dimension(format!(
            "{} posterior columns, {} prior entries",
            post.0.ncols(),
            prior.0.len()
        )));
    }
    if prior.0.iter().any(|&p| p.is_nan() || p <= 0.0) {
        return Err(Error::Config("prior must be strictly positive".into()));
    }
    let log_prior: Vec<f64> = prior.0.iter().map(|p| p.ln()).collect();
    let mut out = post.0.mapv(|p| p.max(PROB_FLOOR).ln());
    for mut row in out.rows_mut() {
        Zip::from(&mut row).and(&log_prior[..]).for_each(|v, lp| *v -= lp);
    }
    Ok(out)
}

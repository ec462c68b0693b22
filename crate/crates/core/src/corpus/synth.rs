use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{equal_split, Dataset, FrameMatrix, Transcript, VideoSample};
use crate::error::{Error, Result};

/// Scale applied to the unit-variance phase means.
const MEAN_SEPARATION: f64 = 4.0;

/// Parameters of the synthetic corpus. Each class owns `phases_per_class`
/// latent phases with a Gaussian emission each; videos are permutations of
/// the classes drawn from `num_orderings` fixed orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_classes: usize,
    pub num_videos: usize,
    pub feature_dim: usize,
    pub phases_per_class: usize,
    /// Either one value shared by all classes or one value per class.
    pub mean_len_per_class: Vec<f64>,
    pub len_jitter: f64,
    pub noise_sigma: f64,
    pub num_orderings: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_classes: 3,
            num_videos: 40,
            feature_dim: 16,
            phases_per_class: 2,
            mean_len_per_class: vec![30.0, 60.0, 90.0],
            len_jitter: 0.2,
            noise_sigma: 0.5,
            num_orderings: 3,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("num_classes", self.num_classes),
            ("num_videos", self.num_videos),
            ("feature_dim", self.feature_dim),
            ("phases_per_class", self.phases_per_class),
            ("num_orderings", self.num_orderings),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config("noise_sigma must be finite and >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.len_jitter) {
            return Err(Error::Config("len_jitter must lie in [0, 1)".into()));
        }
        let n = self.mean_len_per_class.len();
        if n != 1 && n != self.num_classes {
            return Err(Error::Config(format!(
                "mean_len_per_class has {n} entries for {} classes",
                self.num_classes
            )));
        }
        if self
            .mean_len_per_class
            .iter()
            .any(|&l| !(l.is_finite() && l >= 1.0))
        {
            return Err(Error::Config("mean lengths must be >= 1 frame".into()));
        }
        Ok(())
    }

    pub fn mean_len(&self, class: usize) -> f64 {
        if self.mean_len_per_class.len() == 1 {
            self.mean_len_per_class[0]
        } else {
            self.mean_len_per_class[class]
        }
    }

    pub fn label(class: usize) -> String {
        format!("action_{class}")
    }
}

pub fn generate_synthetic(config: &SynthConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dim = config.feature_dim;

    // means[class][phase] is a D-vector
    let means: Vec<Vec<Vec<f64>>> = (0..config.num_classes)
        .map(|_| {
            (0..config.phases_per_class)
                .map(|_| {
                    (0..dim)
                        .map(|_| MEAN_SEPARATION * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect()
        })
        .collect();

    let orderings: Vec<Vec<usize>> = (0..config.num_orderings)
        .map(|_| {
            let mut order: Vec<usize> = (0..config.num_classes).collect();
            order.shuffle(&mut rng);
            order
        })
        .collect();

    let noise = Normal::new(0.0, config.noise_sigma).expect("validated sigma");
    let labels: Vec<String> = (0..config.num_classes).map(SynthConfig::label).collect();
    let mut samples = Vec::with_capacity(config.num_videos);

    for v in 0..config.num_videos {
        let order = &orderings[rng.gen_range(0..orderings.len())];
        let mut rows: Vec<f32> = Vec::new();
        let mut gt: Vec<String> = Vec::new();
        for &class in order {
            let mean = config.mean_len(class);
            let lo = (mean * (1.0 - config.len_jitter)).ceil() as usize;
            let hi = ((mean * (1.0 + config.len_jitter)).floor() as usize).max(lo);
            let len = rng.gen_range(lo..=hi).max(config.phases_per_class);
            for (phase, span) in equal_split(len, config.phases_per_class)
                .into_iter()
                .enumerate()
            {
                for _ in 0..span {
                    rows.extend(
                        means[class][phase]
                            .iter()
                            .map(|&m| (m + noise.sample(&mut rng)) as f32),
                    );
                    gt.push(labels[class].clone());
                }
            }
        }
        let frames = gt.len();
        let data = Array2::from_shape_vec((frames, dim), rows).expect("row-major frames");
        samples.push(VideoSample {
            id: format!("vid_{v:04}"),
            features: FrameMatrix::new(data)?,
            transcript: Transcript::new(order.iter().map(|&c| labels[c].clone()))?,
            ground_truth: Some(gt),
        });
    }
    Dataset::new(samples, labels)
}

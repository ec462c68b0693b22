//! Weakly supervised temporal action segmentation.
//!
//! A video is a sequence of feature vectors and its only annotation is the
//! ordered list of actions it contains. Each action is modeled by a chain of
//! latent subactions; a recurrent network scores frames against subactions,
//! and a left-to-right HMM with a transcript grammar turns those scores into
//! segmentations by Viterbi decoding. Training alternates between fitting
//! the network to the current alignment and realigning with it.
//!
//! * [`corpus`]: data model, file formats, synthetic corpus generator
//! * [`fine_model`]: GRU subaction classifier, prior, likelihood conversion
//! * [`coarse_model`]: subaction space, transitions, initialization, reestimation
//! * [`grammar`]: transcript prefix tree, decoding graph, action extraction
//! * [`inference`]: forced alignment and grammar decoding
//! * [`trainer`]: the iterative training loop
//! * [`eval`]: MoF, Jaccard IoU and IoD
//! * [`model`]: the serialized model document
//! * [`cli`]: the command-line front end

pub mod cli;
pub mod coarse_model;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod fine_model;
pub mod grammar;
pub mod inference;
pub mod model;
pub mod trainer;

pub use error::{Error, Result};
pub use model::Model;

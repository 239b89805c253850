//! Evaluation of discrete speech codes against phoneme annotations.
//!
//! A corpus pairs per-utterance code sequences with time-aligned phoneme
//! labels. Four families of scores are provided:
//!
//! * [`infometrics`]: normalized mutual information between frame codes and
//!   frame labels.
//! * [`probe`]: closed-form and trained softmax classifiers predicting
//!   phonemes (or speakers) from codes.
//! * [`rsa`]: correlation between code-string and phoneme-string edit
//!   distances over sampled utterance pairs.
//! * [`abx`]: minimal-pair discrimination with edit distance on code strings.
//!
//! [`synth`] generates corpora from a parametric code channel so the scores
//! can be checked against a known ground truth, [`cli::sweep`] runs grids of
//! such corpora, and [`stats`] holds the correlation and smoothing helpers.

pub mod abx;
pub mod cli;
pub mod corpus;
pub mod editdist;
pub mod infometrics;
pub mod probe;
pub mod quantize;
pub mod rsa;
pub mod stats;
pub mod synth;

pub use corpus::{AlignedUtterance, CodeSequence, PhonemeInterval};
pub use synth::ChannelConfig;

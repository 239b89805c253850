//! Diagnostic classifiers over discrete codes.
//!
//! Three probes live here:
//!
//! * [`ClosedFormProbe`]: a logistic classifier on one-hot codes whose
//!   weights are the log empirical conditionals `ln P(label | code)`. Its
//!   softmax reproduces those conditionals, so its cross-entropy on the
//!   fitting data is exactly the empirical `H(label | code)`.
//! * [`TrainedProbe`]: multinomial logistic regression fitted by full-batch
//!   gradient descent, either on one-hot codes ([`train_logistic`]) or on
//!   dense feature vectors ([`train_logistic_dense`]).
//! * [`speaker_probe`]: the trained probe applied to per-utterance code
//!   frequency vectors to predict the speaker.
//!
//! Codes never seen while fitting predict the uniform distribution.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{split_indices, CodeSequence, CorpusError, Vocab};
use crate::infometrics::JointHistogram;

/// Floor for zero conditionals in the closed-form probe.
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// Version tag written into saved probe files.
pub const PROBE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ProbeError {
    #[error("no frames to evaluate or train on")]
    Empty,
    #[error("degenerate labels: training data has fewer than 2 distinct labels")]
    DegenerateLabels,
    #[error("need at least 2 speakers, got {0}")]
    TooFewSpeakers(usize),
    #[error("speaker {0:?} is absent from one half of the split; use a stratified split or more utterances per speaker")]
    SpeakerMissingFromHalf(String),
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported probe file version {0} (expected {PROBE_FORMAT_VERSION})")]
    Version(u32),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("probe file error: {0}")]
    Io(#[from] std::io::Error),
    #[error("probe file error: {0}")]
    Json(#[from] serde_json::Error),
}

/// A classifier from a single code to a distribution over label ids.
pub trait CodeClassifier {
    fn n_labels(&self) -> usize;

    /// Log-probabilities over all labels for `code`.
    fn log_proba(&self, code: u32) -> Vec<f64>;

    /// Most probable label; ties go to the lowest label id.
    fn predict(&self, code: u32) -> u32 {
        argmax(&self.log_proba(code)) as u32
    }
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn log_softmax(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    for z in logits {
        *z -= lse;
    }
}

fn uniform_log_proba(n: usize) -> Vec<f64> {
    vec![-(n as f64).ln(); n]
}

// Log-probability of `label`, flooring labels the probe never saw.
fn label_log_proba(lp: &[f64], label: u32) -> f64 {
    lp.get(label as usize).copied().unwrap_or(DEFAULT_EPSILON.ln())
}

fn cached_log_probas<P: CodeClassifier + ?Sized>(probe: &P, frames: &[(u32, u32)]) -> BTreeMap<u32, Vec<f64>> {
    let mut cache = BTreeMap::new();
    for &(code, _) in frames {
        cache.entry(code).or_insert_with(|| probe.log_proba(code));
    }
    cache
}

/// Mean negative log-probability of the true label.
pub fn cross_entropy<P: CodeClassifier + ?Sized>(probe: &P, frames: &[(u32, u32)]) -> Result<f64, ProbeError> {
    if frames.is_empty() {
        return Err(ProbeError::Empty);
    }
    let cache = cached_log_probas(probe, frames);
    let total: f64 = frames.iter().map(|&(code, label)| -label_log_proba(&cache[&code], label)).sum();
    Ok(total / frames.len() as f64)
}

/// Fraction of frames whose predicted label is correct.
pub fn accuracy<P: CodeClassifier + ?Sized>(probe: &P, frames: &[(u32, u32)]) -> Result<f64, ProbeError> {
    if frames.is_empty() {
        return Err(ProbeError::Empty);
    }
    let cache = cached_log_probas(probe, frames);
    let hits = frames
        .iter()
        .filter(|&&(code, label)| argmax(&cache[&code]) as u32 == label)
        .count();
    Ok(hits as f64 / frames.len() as f64)
}

/// Logistic probe with weights `W[label][code] = ln P(label | code)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormProbe {
    n_codes: usize,
    n_labels: usize,
    /// Row-major `n_labels x n_codes`.
    weights: Vec<f64>,
    supported: Vec<bool>,
    epsilon: f64,
}

/// Sets the weights to log empirical conditionals; zero conditionals are
/// floored at `ln(epsilon)`.
pub fn fit_closed_form(h: &JointHistogram, epsilon: f64) -> ClosedFormProbe {
    let (n_codes, n_labels) = (h.n_codes(), h.n_labels());
    let mut weights = vec![0.0; n_labels * n_codes];
    let mut supported = vec![false; n_codes];
    let floor = epsilon.ln();
    for x in 0..n_codes {
        let row = h.row(x);
        let nx: u64 = row.iter().sum();
        if nx == 0 {
            continue;
        }
        supported[x] = true;
        for (y, &c) in row.iter().enumerate() {
            weights[y * n_codes + x] = if c > 0 { (c as f64 / nx as f64).ln() } else { floor };
        }
    }
    ClosedFormProbe { n_codes, n_labels, weights, supported, epsilon }
}

impl ClosedFormProbe {
    pub fn weight(&self, label: usize, code: usize) -> f64 {
        self.weights[label * self.n_codes + code]
    }

    pub fn n_codes(&self) -> usize {
        self.n_codes
    }

    pub fn is_supported(&self, code: u32) -> bool {
        self.supported.get(code as usize).copied().unwrap_or(false)
    }
}

impl CodeClassifier for ClosedFormProbe {
    fn n_labels(&self) -> usize {
        self.n_labels
    }

    fn log_proba(&self, code: u32) -> Vec<f64> {
        if !self.is_supported(code) {
            return uniform_log_proba(self.n_labels);
        }
        let mut logits: Vec<f64> = (0..self.n_labels).map(|y| self.weight(y, code as usize)).collect();
        log_softmax(&mut logits);
        logits
    }
}

/// Gradient-descent settings for [`TrainedProbe`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self { learning_rate: 0.1, epochs: 200, l2: 1e-4, seed: 0 }
    }
}

impl TrainerConfig {
    /// Default for the speaker probe. Normalized frequency vectors have
    /// entries near `1/K`, so the step size is raised to 1.0.
    pub fn frequency_vectors() -> Self {
        Self { learning_rate: 1.0, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum InputKind {
    OneHot { seen: Vec<bool> },
    Dense,
}

/// Multinomial logistic regression `softmax(W x + b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedProbe {
    n_labels: usize,
    dim: usize,
    /// Row-major `n_labels x dim`.
    weights: Vec<f64>,
    bias: Vec<f64>,
    config: TrainerConfig,
    input: InputKind,
    /// Training objective before each epoch's update, plus the final value.
    loss_history: Vec<f64>,
}

impl TrainedProbe {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.config
    }

    pub fn loss_history(&self) -> &[f64] {
        &self.loss_history
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Log-probabilities for a sparse `(index, value)` input.
    pub fn log_proba_sparse(&self, x: &[(u32, f64)]) -> Vec<f64> {
        let mut logits = self.bias.clone();
        for (y, z) in logits.iter_mut().enumerate() {
            let row = &self.weights[y * self.dim..(y + 1) * self.dim];
            for &(i, v) in x {
                if let Some(w) = row.get(i as usize) {
                    *z += w * v;
                }
            }
        }
        log_softmax(&mut logits);
        logits
    }

    pub fn log_proba_dense(&self, x: &[f64]) -> Result<Vec<f64>, ProbeError> {
        if x.len() != self.dim {
            return Err(ProbeError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(self.log_proba_sparse(&sparse(x)))
    }

    pub fn predict_dense(&self, x: &[f64]) -> Result<u32, ProbeError> {
        Ok(argmax(&self.log_proba_dense(x)?) as u32)
    }
}

impl CodeClassifier for TrainedProbe {
    fn n_labels(&self) -> usize {
        self.n_labels
    }

    fn log_proba(&self, code: u32) -> Vec<f64> {
        let seen = match &self.input {
            InputKind::OneHot { seen } => seen.get(code as usize).copied().unwrap_or(false),
            InputKind::Dense => (code as usize) < self.dim,
        };
        if !seen {
            return uniform_log_proba(self.n_labels);
        }
        self.log_proba_sparse(&[(code, 1.0)])
    }
}

fn sparse(x: &[f64]) -> Vec<(u32, f64)> {
    x.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(i, &v)| (i as u32, v)).collect()
}

// Sparse input, label, multiplicity.
type Example = (Vec<(u32, f64)>, u32, f64);

// Full-batch gradient descent on mean cross-entropy + l2/2 |W|^2. Each
// example is a sparse input with an integer multiplicity, which lets
// one-hot data train from its histogram.
fn gradient_descent(
    examples: &[Example],
    n_labels: usize,
    dim: usize,
    config: &TrainerConfig,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let total: f64 = examples.iter().map(|e| e.2).sum();
    let mut w = vec![0.0; n_labels * dim];
    let mut b = vec![0.0; n_labels];
    let mut gw = vec![0.0; n_labels * dim];
    let mut gb = vec![0.0; n_labels];
    let mut logits = vec![0.0; n_labels];
    let mut history = Vec::with_capacity(config.epochs + 1);

    for epoch in 0..=config.epochs {
        gw.fill(0.0);
        gb.fill(0.0);
        let mut loss = 0.0;
        for (x, label, mult) in examples {
            logits.copy_from_slice(&b);
            for (y, z) in logits.iter_mut().enumerate() {
                let row = &w[y * dim..(y + 1) * dim];
                for &(i, v) in x {
                    *z += row[i as usize] * v;
                }
            }
            log_softmax(&mut logits);
            loss -= mult * logits[*label as usize];
            let scale = mult / total;
            for (y, &lp) in logits.iter().enumerate() {
                let delta = scale * (lp.exp() - f64::from(u8::from(y as u32 == *label)));
                gb[y] += delta;
                let grow = &mut gw[y * dim..(y + 1) * dim];
                for &(i, v) in x {
                    grow[i as usize] += delta * v;
                }
            }
        }
        let penalty: f64 = 0.5 * config.l2 * w.iter().map(|v| v * v).sum::<f64>();
        history.push(loss / total + penalty);
        if epoch == config.epochs {
            break;
        }
        for (wi, gi) in w.iter_mut().zip(&gw) {
            *wi -= config.learning_rate * (gi + config.l2 * *wi);
        }
        for (bi, gi) in b.iter_mut().zip(&gb) {
            *bi -= config.learning_rate * gi;
        }
    }
    (w, b, history)
}

fn count_labels(labels: impl Iterator<Item = u32>) -> Result<usize, ProbeError> {
    let mut distinct = std::collections::BTreeSet::new();
    for l in labels {
        distinct.insert(l);
    }
    if distinct.is_empty() {
        return Err(ProbeError::Empty);
    }
    if distinct.len() < 2 {
        return Err(ProbeError::DegenerateLabels);
    }
    Ok(*distinct.last().unwrap() as usize + 1)
}

/// Multinomial logistic regression on one-hot codes.
///
/// Full-batch gradients depend on the frames only through their joint
/// counts, so training runs over histogram cells.
pub fn train_logistic(frames: &[(u32, u32)], config: &TrainerConfig) -> Result<TrainedProbe, ProbeError> {
    let n_labels = count_labels(frames.iter().map(|f| f.1))?;
    let mut counts: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    for &f in frames {
        *counts.entry(f).or_default() += 1;
    }
    let dim = frames.iter().map(|f| f.0).max().unwrap_or(0) as usize + 1;
    let mut seen = vec![false; dim];
    let examples: Vec<Example> = counts
        .into_iter()
        .map(|((code, label), c)| {
            seen[code as usize] = true;
            (vec![(code, 1.0)], label, c as f64)
        })
        .collect();
    let (weights, bias, loss_history) = gradient_descent(&examples, n_labels, dim, config);
    Ok(TrainedProbe {
        n_labels,
        dim,
        weights,
        bias,
        config: *config,
        input: InputKind::OneHot { seen },
        loss_history,
    })
}

/// Multinomial logistic regression on dense feature vectors.
pub fn train_logistic_dense(
    features: &[Vec<f64>],
    labels: &[u32],
    config: &TrainerConfig,
) -> Result<TrainedProbe, ProbeError> {
    if features.len() != labels.len() {
        return Err(ProbeError::DimensionMismatch { expected: features.len(), got: labels.len() });
    }
    let n_labels = count_labels(labels.iter().copied())?;
    let dim = features[0].len();
    if let Some(bad) = features.iter().find(|f| f.len() != dim) {
        return Err(ProbeError::DimensionMismatch { expected: dim, got: bad.len() });
    }
    let examples: Vec<Example> =
        features.iter().zip(labels).map(|(f, &l)| (sparse(f), l, 1.0)).collect();
    let (weights, bias, loss_history) = gradient_descent(&examples, n_labels, dim, config);
    Ok(TrainedProbe {
        n_labels,
        dim,
        weights,
        bias,
        config: *config,
        input: InputKind::Dense,
        loss_history,
    })
}

/// Per-utterance code counts over a codebook of size `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeFrequencyVector(pub Vec<f64>);

impl CodeFrequencyVector {
    pub fn counts(codes: &[u32], codebook_size: usize) -> Self {
        let mut v = vec![0.0; codebook_size];
        for &c in codes {
            v[c as usize] += 1.0;
        }
        Self(v)
    }

    /// Relative frequencies summing to 1.
    pub fn normalized(codes: &[u32], codebook_size: usize) -> Self {
        let mut v = Self::counts(codes, codebook_size);
        let n = codes.len().max(1) as f64;
        v.0.iter_mut().for_each(|x| *x /= n);
        v
    }
}

/// Speaker identification from normalized code-frequency vectors.
///
/// Trains on one half of a seeded utterance-level split and returns the
/// accuracy on the other half.
pub fn speaker_probe(corpus: &[CodeSequence], split_seed: u64, config: &TrainerConfig) -> Result<f64, ProbeError> {
    let mut speakers = Vocab::new();
    let mut ids: Vec<&str> = corpus.iter().map(|s| s.speaker_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    for id in &ids {
        speakers.intern(id);
    }
    if speakers.len() < 2 {
        return Err(ProbeError::TooFewSpeakers(speakers.len()));
    }
    let (train, eval) = split_indices(corpus.len(), split_seed)?;
    for half in [&train, &eval] {
        let mut present = vec![false; speakers.len()];
        for &i in half.iter() {
            present[speakers.get(&corpus[i].speaker_id).unwrap() as usize] = true;
        }
        if let Some(missing) = present.iter().position(|&p| !p) {
            return Err(ProbeError::SpeakerMissingFromHalf(speakers.name(missing as u32).to_owned()));
        }
    }
    let k = corpus.iter().map(|s| s.codebook_size as usize).max().unwrap_or(1);
    let encode = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<u32>) {
        idx.iter()
            .map(|&i| {
                let s = &corpus[i];
                (
                    CodeFrequencyVector::normalized(&s.codes, k).0,
                    speakers.get(&s.speaker_id).unwrap(),
                )
            })
            .unzip()
    };
    let (xtr, ytr) = encode(&train);
    let (xev, yev) = encode(&eval);
    let probe = train_logistic_dense(&xtr, &ytr, config)?;
    let mut hits = 0usize;
    for (x, &y) in xev.iter().zip(&yev) {
        if probe.predict_dense(x)? == y {
            hits += 1;
        }
    }
    Ok(hits as f64 / yev.len() as f64)
}

/// On-disk form of a fitted probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SavedProbe {
    ClosedForm(ClosedFormProbe),
    Trained(TrainedProbe),
}

#[derive(Serialize, Deserialize)]
struct ProbeFile {
    format_version: u32,
    probe: SavedProbe,
}

impl SavedProbe {
    pub fn to_json(&self) -> Result<String, ProbeError> {
        Ok(serde_json::to_string(&ProbeFile { format_version: PROBE_FORMAT_VERSION, probe: self.clone() })?)
    }

    pub fn from_json(text: &str) -> Result<Self, ProbeError> {
        let file: ProbeFile = serde_json::from_str(text)?;
        if file.format_version != PROBE_FORMAT_VERSION {
            return Err(ProbeError::Version(file.format_version));
        }
        Ok(file.probe)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ProbeError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ProbeError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

//! Four-metric evaluation of one aligned corpus.

use std::fmt;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::abx::{abx_score, build_triples, extract_segments, parse_triples, AbxError, Segment, TripleConfig, TripleSet};
use crate::corpus::{frame_pairs, split_indices, AlignedUtterance, CodeSequence, CorpusError, Vocab, SILENCE_LABEL};
use crate::editdist::{PairSampler, SymbolString};
use crate::infometrics::{build_histogram, nmi, InfoError};
use crate::probe::{accuracy, train_logistic, ProbeError, TrainerConfig};
use crate::rsa::{rsa_distances, rsa_score, RsaError, StimulusKind, DEFAULT_PAIR_BUDGET};
use crate::stats::CorrelationKind;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("abx needs triples: pass --triples FILE or --make-triples")]
    MissingTriples,
    #[error("no utterance has a non-silence phoneme to compare")]
    NoStimuli,
    #[error("nmi: {0}")]
    Info(#[from] InfoError),
    #[error("dc: {0}")]
    Probe(#[from] ProbeError),
    #[error("rsa: {0}")]
    Rsa(#[from] RsaError),
    #[error("abx: {0}")]
    Abx(#[from] AbxError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Nmi,
    Dc,
    Rsa,
    Abx,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Nmi, Metric::Dc, Metric::Rsa, Metric::Abx];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Nmi => "nmi",
            Metric::Dc => "dc",
            Metric::Rsa => "rsa",
            Metric::Abx => "abx",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which stimuli RSA compares.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RsaInput {
    #[default]
    Complete,
    Triplet,
    Both,
}

impl RsaInput {
    pub fn kinds(self) -> &'static [StimulusKind] {
        match self {
            RsaInput::Complete => &[StimulusKind::Complete],
            RsaInput::Triplet => &[StimulusKind::Triplet],
            RsaInput::Both => &[StimulusKind::Complete, StimulusKind::Triplet],
        }
    }
}

/// How the supplied codes were produced for ABX; recorded, not acted on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbxRegime {
    /// Trigram codes cut out of whole-utterance encodings.
    #[default]
    Slice,
    /// Each trigram encoded on its own.
    Segment,
}

impl AbxRegime {
    pub fn input_kind(self) -> &'static str {
        match self {
            AbxRegime::Slice => "slice-encoded",
            AbxRegime::Segment => "segment-encoded",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TripleSource {
    /// Build triples from the evaluation half.
    Build(TripleConfig),
    /// Contents of a triples file, resolved against all code sequences.
    File(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOptions {
    pub metrics: Vec<Metric>,
    pub keep_silence: bool,
    pub split_seed: u64,
    pub sampler_seed: u64,
    pub pair_budget: usize,
    pub correlation: CorrelationKind,
    pub rsa_input: RsaInput,
    pub trainer: TrainerConfig,
    pub triples: Option<TripleSource>,
    pub abx_regime: AbxRegime,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            metrics: Metric::ALL.to_vec(),
            keep_silence: false,
            split_seed: 0,
            sampler_seed: 0,
            pair_budget: DEFAULT_PAIR_BUDGET,
            correlation: CorrelationKind::Pearson,
            rsa_input: RsaInput::Complete,
            trainer: TrainerConfig::default(),
            triples: Some(TripleSource::Build(TripleConfig::default())),
            abx_regime: AbxRegime::Slice,
        }
    }
}

/// One measured value, before run metadata is attached.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub metric: String,
    pub input_kind: String,
    pub n: u64,
    pub value: f64,
}

/// Code strings paired with reference phoneme strings for RSA.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Stimuli {
    pub codes: Vec<SymbolString>,
    pub references: Vec<SymbolString>,
}

/// Whole utterances. Silence frames and labels are dropped unless
/// `keep_silence` is set; utterances left empty are skipped.
pub fn complete_stimuli(utts: &[AlignedUtterance], vocab: &mut Vocab, keep_silence: bool) -> Stimuli {
    let mut out = Stimuli::default();
    for u in utts {
        let mut codes = Vec::with_capacity(u.codes().len());
        let mut refs = Vec::with_capacity(u.intervals.len());
        for iv in &u.intervals {
            if iv.label == SILENCE_LABEL && !keep_silence {
                continue;
            }
            codes.extend_from_slice(&u.codes()[iv.start..iv.end]);
            refs.push(vocab.intern(&iv.label));
        }
        if !refs.is_empty() {
            out.codes.push(SymbolString::new(codes));
            out.references.push(SymbolString::new(refs));
        }
    }
    out
}

/// Trigram segments with their three phoneme labels as reference.
pub fn triplet_stimuli(segments: &[Segment], vocab: &mut Vocab) -> Stimuli {
    let mut out = Stimuli::default();
    for s in segments {
        out.codes.push(s.code_slice.clone());
        out.references.push(SymbolString::new(s.trigram.0.iter().map(|l| vocab.intern(l)).collect()));
    }
    out
}

fn select(utts: &[AlignedUtterance], idx: &[usize]) -> Vec<AlignedUtterance> {
    idx.iter().map(|&i| utts[i].clone()).collect()
}

/// Runs the requested metrics. NMI, RSA and built ABX triples use the
/// evaluation half of a seeded utterance split; the diagnostic classifier is
/// trained on the other half and scored on the evaluation half.
pub fn evaluate(corpus: &[AlignedUtterance], opts: &EvalOptions) -> Result<Vec<MetricValue>, EvalError> {
    let (train_idx, eval_idx) = split_indices(corpus.len(), opts.split_seed)?;
    let train = select(corpus, &train_idx);
    let eval = select(corpus, &eval_idx);
    let mut vocab = Vocab::new();
    let eval_frames = frame_pairs(&eval, &mut vocab, opts.keep_silence);

    let mut metrics = opts.metrics.clone();
    metrics.sort();
    metrics.dedup();

    log::info!("evaluating {} utterances ({} train, {} eval)", corpus.len(), train.len(), eval.len());
    let mut out = Vec::new();
    for metric in metrics {
        log::debug!("computing {metric:?}");
        match metric {
            Metric::Nmi => {
                let (codes, labels): (Vec<u32>, Vec<u32>) = eval_frames.iter().copied().unzip();
                let h = build_histogram(&codes, &labels)?;
                out.push(MetricValue {
                    metric: "nmi".into(),
                    input_kind: "frame".into(),
                    n: h.total(),
                    value: nmi(&h)?,
                });
            }
            Metric::Dc => {
                let train_frames = frame_pairs(&train, &mut vocab, opts.keep_silence);
                let probe = train_logistic(&train_frames, &opts.trainer)?;
                out.push(MetricValue {
                    metric: "dc".into(),
                    input_kind: "frame".into(),
                    n: eval_frames.len() as u64,
                    value: accuracy(&probe, &eval_frames)?,
                });
            }
            Metric::Rsa => {
                let sampler = PairSampler::budgeted(opts.pair_budget, opts.sampler_seed);
                for &kind in opts.rsa_input.kinds() {
                    let stimuli = match kind {
                        StimulusKind::Complete => complete_stimuli(&eval, &mut vocab, opts.keep_silence),
                        StimulusKind::Triplet => triplet_stimuli(&extract_segments(&eval), &mut vocab),
                    };
                    if stimuli.codes.is_empty() {
                        return Err(EvalError::NoStimuli);
                    }
                    let pairs = rsa_distances(&stimuli.codes, &stimuli.references, &sampler)?;
                    let r = rsa_score(&pairs, opts.correlation)?;
                    out.push(MetricValue {
                        metric: "rsa".into(),
                        input_kind: kind.to_string(),
                        n: r.n_pairs as u64,
                        value: r.correlation,
                    });
                }
            }
            Metric::Abx => {
                let triples = build_abx_triples(corpus, &eval, opts.triples.as_ref())?;
                let s = abx_score(&triples)?;
                out.push(MetricValue {
                    metric: "abx".into(),
                    input_kind: opts.abx_regime.input_kind().into(),
                    n: s.n_triples as u64,
                    value: s.accuracy,
                });
            }
        }
    }
    Ok(out)
}

fn build_abx_triples(
    corpus: &[AlignedUtterance],
    eval: &[AlignedUtterance],
    source: Option<&TripleSource>,
) -> Result<TripleSet, EvalError> {
    match source {
        None => Err(EvalError::MissingTriples),
        Some(TripleSource::Build(cfg)) => Ok(build_triples(&extract_segments(eval), cfg)?),
        Some(TripleSource::File(text)) => {
            let codes: Vec<CodeSequence> = corpus.iter().map(|u| u.code_sequence.clone()).collect();
            Ok(parse_triples(text, &codes)?)
        }
    }
}

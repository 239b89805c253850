//! ABX discriminability on phoneme-trigram minimal pairs.
//!
//! Segments are non-overlapping trigrams cut from aligned utterances.
//! A triple `(A, B, X)` takes `A` and `X` from two different segments of
//! one trigram and `B` from a trigram that differs only in its centre
//! phoneme. The per-triple error is 1 when `X` is closer to `B`, 1/2 on a
//! tie and 0 otherwise, with repetition-collapsed normalized edit distance.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{AlignedUtterance, CodeSequence, SILENCE_LABEL};
use crate::editdist::{collapse_repeats, levenshtein, EditDistError, SymbolString};

/// Default cap on sampled triples per contrast.
pub const DEFAULT_MAX_PER_CONTRAST: usize = 500;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum AbxError {
    #[error("no minimal pairs: no trigram has two segments and a centre-phoneme contrast")]
    NoMinimalPairs,
    #[error("empty triple set")]
    Empty,
    #[error(transparent)]
    EditDist(#[from] EditDistError),
    #[error("triples file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("phoneme label {0:?} cannot be written in a trigram field")]
    BadLabel(String),
}

/// Three consecutive phoneme labels.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Trigram(pub [String; 3]);

impl Trigram {
    pub fn new(left: &str, center: &str, right: &str) -> Self {
        Self([left.to_owned(), center.to_owned(), right.to_owned()])
    }

    pub fn left(&self) -> &str {
        &self.0[0]
    }

    pub fn center(&self) -> &str {
        &self.0[1]
    }

    pub fn right(&self) -> &str {
        &self.0[2]
    }

    /// True when both share context and differ in the centre phoneme.
    pub fn is_minimal_pair(&self, other: &Trigram) -> bool {
        self.left() == other.left() && self.right() == other.right() && self.center() != other.center()
    }
}

impl fmt::Display for Trigram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.0[0], self.0[1], self.0[2])
    }
}

impl FromStr for Trigram {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('-').collect();
        match parts.as_slice() {
            [l, c, r] if !l.is_empty() && !c.is_empty() && !r.is_empty() => Ok(Self::new(l, c, r)),
            _ => Err(format!("malformed trigram {s:?}")),
        }
    }
}

/// The code frames spanned by one trigram of one utterance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub utterance_id: String,
    pub speaker_id: String,
    pub trigram: Trigram,
    pub start: usize,
    pub end: usize,
    pub code_slice: SymbolString,
}

/// Cuts each utterance into disjoint trigrams, greedily from the start.
///
/// A silence interval or an unaligned gap ends the current run of
/// phonemes; leftover groups of fewer than three phonemes are dropped.
pub fn extract_segments(corpus: &[AlignedUtterance]) -> Vec<Segment> {
    let mut out = Vec::new();
    for u in corpus {
        let mut run: Vec<&crate::corpus::PhonemeInterval> = Vec::with_capacity(3);
        for iv in &u.intervals {
            let contiguous = run.last().is_none_or(|prev| prev.end == iv.start);
            if iv.label == SILENCE_LABEL || !contiguous {
                run.clear();
                if iv.label == SILENCE_LABEL {
                    continue;
                }
            }
            run.push(iv);
            if run.len() == 3 {
                let (start, end) = (run[0].start, run[2].end);
                out.push(Segment {
                    utterance_id: u.utterance_id().to_owned(),
                    speaker_id: u.speaker_id().to_owned(),
                    trigram: Trigram::new(&run[0].label, &run[1].label, &run[2].label),
                    start,
                    end,
                    code_slice: SymbolString::new(u.codes()[start..end].to_vec()),
                });
                run.clear();
            }
        }
    }
    out
}

/// Indices into [`TripleSet::segments`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triple {
    pub a: usize,
    pub b: usize,
    pub x: usize,
}

/// All triples sharing an ordered (A-category, B-category) pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contrast {
    pub a_category: Trigram,
    pub b_category: Trigram,
    pub triples: Vec<Triple>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleSet {
    pub segments: Vec<Segment>,
    pub contrasts: Vec<Contrast>,
}

impl TripleSet {
    pub fn n_triples(&self) -> usize {
        self.contrasts.iter().map(|c| c.triples.len()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleConfig {
    pub max_per_contrast: usize,
    pub seed: u64,
    /// Restrict A, B and X to a single speaker.
    pub within_speaker: bool,
    /// Optional cap on the total, applied after the per-contrast cap.
    pub max_total: Option<usize>,
}

impl Default for TripleConfig {
    fn default() -> Self {
        Self { max_per_contrast: DEFAULT_MAX_PER_CONTRAST, seed: 0, within_speaker: false, max_total: None }
    }
}

// Segments of one category for one speaker key ("" when pooling speakers).
type CategoryIndex<'a> = BTreeMap<&'a Trigram, BTreeMap<&'a str, Vec<usize>>>;

/// Enumerates minimal-pair triples, sampling down to the configured caps.
pub fn build_triples(segments: &[Segment], config: &TripleConfig) -> Result<TripleSet, AbxError> {
    let mut categories: CategoryIndex = BTreeMap::new();
    for (i, s) in segments.iter().enumerate() {
        let key = if config.within_speaker { s.speaker_id.as_str() } else { "" };
        categories.entry(&s.trigram).or_default().entry(key).or_default().push(i);
    }
    let mut by_context: BTreeMap<(&str, &str), Vec<&Trigram>> = BTreeMap::new();
    for t in categories.keys() {
        by_context.entry((t.left(), t.right())).or_default().push(t);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut contrasts = Vec::new();
    for (&cat_a, spk_a) in &categories {
        for &cat_b in &by_context[&(cat_a.left(), cat_a.right())] {
            if cat_b == cat_a {
                continue;
            }
            let spk_b = &categories[cat_b];
            // (A indices, B indices, triple count) per shared speaker key.
            let blocks: Vec<(&[usize], &[usize], usize)> = spk_a
                .iter()
                .filter_map(|(spk, a_idx)| {
                    let b_idx = spk_b.get(spk)?;
                    let n = a_idx.len() * (a_idx.len() - 1) * b_idx.len();
                    (n > 0).then_some((a_idx.as_slice(), b_idx.as_slice(), n))
                })
                .collect();
            let total: usize = blocks.iter().map(|b| b.2).sum();
            if total == 0 {
                continue;
            }
            let picks: Vec<usize> = if total <= config.max_per_contrast {
                (0..total).collect()
            } else {
                let mut p = index::sample(&mut rng, total, config.max_per_contrast).into_vec();
                p.sort_unstable();
                p
            };
            let triples = picks.into_iter().map(|k| decode_triple(&blocks, k)).collect();
            contrasts.push(Contrast { a_category: cat_a.clone(), b_category: cat_b.clone(), triples });
        }
    }
    if contrasts.is_empty() {
        return Err(AbxError::NoMinimalPairs);
    }
    if let Some(max_total) = config.max_total {
        cap_total(&mut contrasts, max_total, &mut rng);
    }
    Ok(TripleSet { segments: segments.to_vec(), contrasts })
}

fn decode_triple(blocks: &[(&[usize], &[usize], usize)], mut k: usize) -> Triple {
    for &(a_idx, b_idx, n) in blocks {
        if k >= n {
            k -= n;
            continue;
        }
        let nb = b_idx.len();
        let na1 = a_idx.len() - 1;
        let b = b_idx[k % nb];
        let rest = k / nb;
        let ai = rest / na1;
        let mut xi = rest % na1;
        if xi >= ai {
            xi += 1;
        }
        return Triple { a: a_idx[ai], b, x: a_idx[xi] };
    }
    unreachable!("triple index beyond block total")
}

fn cap_total(contrasts: &mut Vec<Contrast>, max_total: usize, rng: &mut ChaCha8Rng) {
    let total: usize = contrasts.iter().map(|c| c.triples.len()).sum();
    if total <= max_total {
        return;
    }
    let mut keep = index::sample(rng, total, max_total).into_vec();
    keep.sort_unstable();
    let mut keep = keep.into_iter().peekable();
    let mut offset = 0;
    for c in contrasts.iter_mut() {
        let len = c.triples.len();
        let mut kept = Vec::new();
        while let Some(&k) = keep.peek() {
            if k >= offset + len {
                break;
            }
            kept.push(c.triples[k - offset]);
            keep.next();
        }
        offset += len;
        c.triples = kept;
    }
    contrasts.retain(|c| !c.triples.is_empty());
}

fn abx_from_distances(d_ax: f64, d_bx: f64) -> f64 {
    if d_ax > d_bx {
        1.0
    } else if d_ax == d_bx {
        0.5
    } else {
        0.0
    }
}

fn distance_collapsed(a: &[u32], b: &[u32]) -> Result<f64, EditDistError> {
    let longer = a.len().max(b.len());
    if longer == 0 {
        return Err(EditDistError::DegeneratePair);
    }
    Ok(levenshtein(a, b) as f64 / longer as f64)
}

/// Error of a single triple: 1, 1/2 or 0.
pub fn abx_error_one(a: &[u32], b: &[u32], x: &[u32]) -> Result<f64, AbxError> {
    let (a, b, x) = (collapse_repeats(a), collapse_repeats(b), collapse_repeats(x));
    Ok(abx_from_distances(distance_collapsed(&a, &x)?, distance_collapsed(&b, &x)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbxScore {
    pub n_contrasts: usize,
    pub n_triples: usize,
    /// Mean over contrasts of the per-contrast mean error.
    pub macro_error: f64,
    /// Mean over all triples.
    pub micro_error: f64,
    /// `1 - macro_error`.
    pub accuracy: f64,
}

/// Per-triple errors, grouped as in `triples.contrasts`.
pub fn triple_errors(triples: &TripleSet) -> Result<Vec<Vec<f64>>, AbxError> {
    let collapsed: Vec<Vec<u32>> = triples.segments.iter().map(|s| collapse_repeats(&s.code_slice)).collect();
    triples
        .contrasts
        .iter()
        .map(|c| {
            c.triples
                .par_iter()
                .with_min_len(64)
                .map(|t| {
                    let x = &collapsed[t.x];
                    Ok(abx_from_distances(
                        distance_collapsed(&collapsed[t.a], x)?,
                        distance_collapsed(&collapsed[t.b], x)?,
                    ))
                })
                .collect()
        })
        .collect()
}

/// Macro- and micro-averaged ABX error over a triple set.
pub fn abx_score(triples: &TripleSet) -> Result<AbxScore, AbxError> {
    let errors = triple_errors(triples)?;
    let n_triples: usize = errors.iter().map(Vec::len).sum();
    if n_triples == 0 {
        return Err(AbxError::Empty);
    }
    let mut macro_sum = 0.0;
    let mut micro_sum = 0.0;
    let mut n_contrasts = 0;
    for e in errors.iter().filter(|e| !e.is_empty()) {
        let s: f64 = e.iter().sum();
        micro_sum += s;
        macro_sum += s / e.len() as f64;
        n_contrasts += 1;
    }
    let macro_error = macro_sum / n_contrasts as f64;
    Ok(AbxScore {
        n_contrasts,
        n_triples,
        macro_error,
        micro_error: micro_sum / n_triples as f64,
        accuracy: 1.0 - macro_error,
    })
}

/// Serializes triples as `contrast_id, role, utterance_id, start, end, trigram`
/// tab-separated lines, three lines (A, B, X) per triple.
pub fn format_triples(triples: &TripleSet) -> Result<String, AbxError> {
    for s in &triples.segments {
        if let Some(bad) = s.trigram.0.iter().find(|l| l.contains(['-', '\t', '\n'])) {
            return Err(AbxError::BadLabel(bad.clone()));
        }
    }
    let mut out = String::new();
    for (cid, c) in triples.contrasts.iter().enumerate() {
        for t in &c.triples {
            for (role, idx) in [("A", t.a), ("B", t.b), ("X", t.x)] {
                let s = &triples.segments[idx];
                let _ = writeln!(out, "{cid}\t{role}\t{}\t{}\t{}\t{}", s.utterance_id, s.start, s.end, s.trigram);
            }
        }
    }
    Ok(out)
}

/// Reads a triples file, slicing codes out of `codes` by utterance and span.
pub fn parse_triples(text: &str, codes: &[CodeSequence]) -> Result<TripleSet, AbxError> {
    let by_id: HashMap<&str, &CodeSequence> = codes.iter().map(|c| (c.utterance_id.as_str(), c)).collect();
    let mut segments: Vec<Segment> = Vec::new();
    let mut seg_index: HashMap<(String, usize, usize), usize> = HashMap::new();
    let mut contrasts: Vec<Contrast> = Vec::new();
    let mut contrast_ids: HashMap<String, usize> = HashMap::new();
    let mut pending: Vec<(usize, &str, usize)> = Vec::with_capacity(3);

    let lines = text
        .split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty());
    for (line, l) in lines {
        let err = |message: String| AbxError::Parse { line, message };
        let f: Vec<&str> = l.split('\t').collect();
        if f.len() != 6 {
            return Err(err(format!("expected 6 tab-separated fields, got {}", f.len())));
        }
        let start: usize = f[3].parse().map_err(|_| err(format!("bad start {:?}", f[3])))?;
        let end: usize = f[4].parse().map_err(|_| err(format!("bad end {:?}", f[4])))?;
        let trigram: Trigram = f[5].parse().map_err(err)?;
        let seq = by_id.get(f[2]).ok_or_else(|| err(format!("unknown utterance {:?}", f[2])))?;
        if start >= end || end > seq.codes.len() {
            return Err(err(format!("span [{start}, {end}) outside utterance of {} frames", seq.codes.len())));
        }
        let key = (f[2].to_owned(), start, end);
        let idx = *seg_index.entry(key).or_insert_with(|| {
            segments.push(Segment {
                utterance_id: seq.utterance_id.clone(),
                speaker_id: seq.speaker_id.clone(),
                trigram,
                start,
                end,
                code_slice: SymbolString::new(seq.codes[start..end].to_vec()),
            });
            segments.len() - 1
        });
        let expected_role = ["A", "B", "X"][pending.len()];
        if f[1] != expected_role {
            return Err(err(format!("expected role {expected_role}, got {:?}", f[1])));
        }
        pending.push((line, f[0], idx));
        if pending.len() == 3 {
            let cid = pending[0].1;
            if pending.iter().any(|p| p.1 != cid) {
                return Err(err("A, B and X lines carry different contrast ids".into()));
            }
            let (a, b, x) = (pending[0].2, pending[1].2, pending[2].2);
            let ci = *contrast_ids.entry(cid.to_owned()).or_insert_with(|| {
                contrasts.push(Contrast {
                    a_category: segments[a].trigram.clone(),
                    b_category: segments[b].trigram.clone(),
                    triples: Vec::new(),
                });
                contrasts.len() - 1
            });
            contrasts[ci].triples.push(Triple { a, b, x });
            pending.clear();
        }
    }
    if let Some(&(line, _, _)) = pending.first() {
        return Err(AbxError::Parse { line, message: "incomplete triple at end of file".into() });
    }
    if contrasts.is_empty() {
        return Err(AbxError::Empty);
    }
    Ok(TripleSet { segments, contrasts })
}

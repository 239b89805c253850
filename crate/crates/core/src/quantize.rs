//! Nearest-prototype vector quantization against a stored codebook.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::CodeSequence;

#[derive(Debug, thiserror::Error)]
pub enum QuantizeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("codebook needs at least one prototype of positive dimension")]
    EmptyCodebook,
    #[error("{source_name}:{line}: {message}")]
    Parse { source_name: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
}

/// `K` prototypes of dimension `d`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    dim: usize,
    data: Vec<f64>,
}

impl Codebook {
    pub fn new(prototypes: Vec<Vec<f64>>) -> Result<Self, QuantizeError> {
        let dim = prototypes.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(QuantizeError::EmptyCodebook);
        }
        let mut data = Vec::with_capacity(prototypes.len() * dim);
        for p in &prototypes {
            if p.len() != dim {
                return Err(QuantizeError::DimensionMismatch { expected: dim, got: p.len() });
            }
            data.extend_from_slice(p);
        }
        let book = Self { dim, data };
        let mut seen = HashSet::new();
        for i in 0..book.len() {
            let bits: Vec<u64> = book.prototype(i).iter().map(|x| x.to_bits()).collect();
            if !seen.insert(bits) {
                log::warn!("codebook prototype {i} duplicates an earlier one; it will never be selected");
            }
        }
        Ok(book)
    }

    /// Number of prototypes `K`.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn prototype(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Index of the nearest prototype by squared Euclidean distance; the
    /// lowest index wins exact ties.
    pub fn nearest(&self, v: &[f64]) -> Result<u32, QuantizeError> {
        if v.len() != self.dim {
            return Err(QuantizeError::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        let mut best = 0u32;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.data.chunks_exact(self.dim).enumerate() {
            let mut d = 0.0;
            for (a, b) in v.iter().zip(p) {
                let t = a - b;
                d += t * t;
                // Partial sums never decrease, so this prototype cannot win.
                if d >= best_d {
                    break;
                }
            }
            if d < best_d {
                best_d = d;
                best = i as u32;
            }
        }
        Ok(best)
    }
}

/// One utterance's continuous frames.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSequence {
    pub utterance_id: String,
    pub speaker_id: String,
    pub frames: Vec<Vec<f64>>,
}

impl FeatureSequence {
    pub fn dim(&self) -> Option<usize> {
        self.frames.first().map(Vec::len)
    }
}

/// Code index of every frame.
pub fn quantize(features: &[Vec<f64>], codebook: &Codebook) -> Result<Vec<u32>, QuantizeError> {
    features
        .par_iter()
        .with_min_len(256)
        .map(|f| codebook.nearest(f))
        .collect()
}

/// Quantizes whole utterances into code sequences with `K` = codebook size.
pub fn quantize_sequences(seqs: &[FeatureSequence], codebook: &Codebook) -> Result<Vec<CodeSequence>, QuantizeError> {
    seqs.iter()
        .map(|s| {
            let codes = quantize(&s.frames, codebook)?;
            Ok(CodeSequence::new(&s.utterance_id, &s.speaker_id, codes, codebook.len() as u32)?)
        })
        .collect()
}

fn parse_row(line: &str, source: &str, lineno: usize) -> Result<Vec<f64>, QuantizeError> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| QuantizeError::Parse {
                source_name: source.to_owned(),
                line: lineno,
                message: format!("not a finite number: {t:?}"),
            })
        })
        .collect()
}

/// Parses `K d` followed by `K` rows of `d` numbers.
pub fn parse_codebook(text: &str, source: &str) -> Result<Codebook, QuantizeError> {
    let perr = |line: usize, message: String| QuantizeError::Parse { source_name: source.to_owned(), line, message };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hl, header) = lines.next().ok_or_else(|| perr(1, "missing `K d` header".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| perr(hl + 1, format!("bad header field {t:?}"))))
        .collect::<Result<_, _>>()?;
    let [k, d] = dims[..] else {
        return Err(perr(hl + 1, "header must be `K d`".into()));
    };
    let mut rows = Vec::with_capacity(k);
    for (i, line) in lines {
        let row = parse_row(line, source, i + 1)?;
        if row.len() != d {
            return Err(perr(i + 1, format!("expected {d} values, got {}", row.len())));
        }
        rows.push(row);
    }
    if rows.len() != k {
        return Err(perr(hl + 1, format!("header declares {k} prototypes, found {}", rows.len())));
    }
    Codebook::new(rows)
}

pub fn format_codebook(c: &Codebook) -> String {
    let mut out = format!("{} {}\n", c.len(), c.dim());
    for i in 0..c.len() {
        out.push_str(&join_row(c.prototype(i)));
        out.push('\n');
    }
    out
}

fn join_row(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

/// Parses feature blocks: an `utt<TAB>spk` line, frame rows, then a blank
/// line before the next block.
pub fn parse_features(text: &str, source: &str) -> Result<Vec<FeatureSequence>, QuantizeError> {
    let perr = |line: usize, message: String| QuantizeError::Parse { source_name: source.to_owned(), line, message };
    let mut out: Vec<FeatureSequence> = Vec::new();
    let mut current: Option<FeatureSequence> = None;
    let mut dim: Option<usize> = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            out.extend(current.take());
            continue;
        }
        match current.as_mut() {
            None => {
                let (utt, spk) = line
                    .split_once('\t')
                    .ok_or_else(|| perr(lineno, "expected `utterance_id<TAB>speaker_id`".into()))?;
                current = Some(FeatureSequence {
                    utterance_id: utt.trim().to_owned(),
                    speaker_id: spk.trim().to_owned(),
                    frames: Vec::new(),
                });
            }
            Some(seq) => {
                let row = parse_row(line, source, lineno)?;
                match dim {
                    Some(d) if d != row.len() => {
                        return Err(perr(lineno, format!("expected {d} values, got {}", row.len())));
                    }
                    _ => dim = Some(row.len()),
                }
                seq.frames.push(row);
            }
        }
    }
    out.extend(current);
    if let Some(empty) = out.iter().find(|s| s.frames.is_empty()) {
        return Err(perr(0, format!("utterance {} has no frames", empty.utterance_id)));
    }
    Ok(out)
}

pub fn format_features(seqs: &[FeatureSequence]) -> String {
    let mut out = String::new();
    for (i, s) in seqs.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("{}\t{}\n", s.utterance_id, s.speaker_id));
        for f in &s.frames {
            out.push_str(&join_row(f));
            out.push('\n');
        }
    }
    out
}

fn read(path: &Path) -> Result<String, QuantizeError> {
    fs::read_to_string(path).map_err(|source| QuantizeError::Io { path: path.display().to_string(), source })
}

pub fn load_codebook(path: impl AsRef<Path>) -> Result<Codebook, QuantizeError> {
    let path = path.as_ref();
    parse_codebook(&read(path)?, &path.display().to_string())
}

pub fn load_features(path: impl AsRef<Path>) -> Result<Vec<FeatureSequence>, QuantizeError> {
    let path = path.as_ref();
    parse_features(&read(path)?, &path.display().to_string())
}

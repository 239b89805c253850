//! Code sequences, phoneme alignments and their join into frame-labelled
//! utterances.
//!
//! File formats (UTF-8, LF or CRLF line endings):
//!
//! ```text
//! codes:      utterance_id <TAB> speaker_id <TAB> c0 c1 c2 ...
//! alignment:  utterance_id <TAB> label <TAB> start_frame <TAB> end_frame
//! ```
//!
//! Alignment intervals are half-open and expressed in code frames once
//! loaded.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Label given to frames not covered by any phoneme interval.
pub const SILENCE_LABEL: &str = "SIL";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: line {line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}: CR-only line endings are not supported")]
    CrLineEndings { path: String },
    #[error("utterance {utterance}: {message}")]
    Invalid { utterance: String, message: String },
    #[error("split needs at least 2 utterances, got {0}")]
    TooSmallToSplit(usize),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(utterance: &str, message: impl Into<String>) -> CorpusError {
    CorpusError::Invalid { utterance: utterance.to_owned(), message: message.into() }
}

/// One utterance's frame-wise code indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSequence {
    pub utterance_id: String,
    pub speaker_id: String,
    pub codes: Vec<u32>,
    pub codebook_size: u32,
}

impl CodeSequence {
    pub fn new(
        utterance_id: impl Into<String>,
        speaker_id: impl Into<String>,
        codes: Vec<u32>,
        codebook_size: u32,
    ) -> Result<Self, CorpusError> {
        let seq = Self {
            utterance_id: utterance_id.into(),
            speaker_id: speaker_id.into(),
            codes,
            codebook_size,
        };
        if seq.codes.is_empty() {
            return Err(invalid(&seq.utterance_id, "empty code list"));
        }
        if let Some(&c) = seq.codes.iter().find(|&&c| c >= codebook_size) {
            return Err(invalid(&seq.utterance_id, format!("code out of range: {c} >= {codebook_size}")));
        }
        Ok(seq)
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

/// A labelled half-open span of code frames.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhonemeInterval {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

impl PhonemeInterval {
    pub fn new(label: impl Into<String>, start: usize, end: usize) -> Self {
        Self { label: label.into(), start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Code sequence joined with its sorted, non-overlapping phoneme intervals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedUtterance {
    pub code_sequence: CodeSequence,
    pub intervals: Vec<PhonemeInterval>,
}

impl AlignedUtterance {
    /// Validates the intervals against the code sequence.
    pub fn new(code_sequence: CodeSequence, intervals: Vec<PhonemeInterval>) -> Result<Self, CorpusError> {
        let id = &code_sequence.utterance_id;
        let len = code_sequence.len();
        let mut prev_end = 0;
        for iv in &intervals {
            if iv.start >= iv.end {
                return Err(invalid(id, format!("interval {} [{}, {}) is empty", iv.label, iv.start, iv.end)));
            }
            if iv.start < prev_end {
                return Err(invalid(id, format!("interval {} at {} overlaps or is unsorted", iv.label, iv.start)));
            }
            if iv.end > len {
                return Err(invalid(id, format!("interval {} ends at {} beyond {} frames", iv.label, iv.end, len)));
            }
            prev_end = iv.end;
        }
        Ok(Self { code_sequence, intervals })
    }

    pub fn utterance_id(&self) -> &str {
        &self.code_sequence.utterance_id
    }

    pub fn speaker_id(&self) -> &str {
        &self.code_sequence.speaker_id
    }

    pub fn codes(&self) -> &[u32] {
        &self.code_sequence.codes
    }
}

/// One label per code frame; uncovered frames get `silence_label`.
pub fn frame_labels<'a>(u: &'a AlignedUtterance, silence_label: &'a str) -> Vec<&'a str> {
    let mut out = vec![silence_label; u.codes().len()];
    for iv in &u.intervals {
        for slot in &mut out[iv.start..iv.end] {
            *slot = iv.label.as_str();
        }
    }
    out
}

/// String interner assigning dense ids in first-seen order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocab {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// `(code, label id)` for every frame of every utterance, in corpus order.
/// Silence frames are dropped unless `keep_silence` is set.
pub fn frame_pairs(utts: &[AlignedUtterance], vocab: &mut Vocab, keep_silence: bool) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for u in utts {
        for (&code, label) in u.codes().iter().zip(frame_labels(u, SILENCE_LABEL)) {
            if label == SILENCE_LABEL && !keep_silence {
                continue;
            }
            out.push((code, vocab.intern(label)));
        }
    }
    out
}

/// Interned non-silence phoneme labels of an utterance, in order.
pub fn phoneme_string(u: &AlignedUtterance, vocab: &mut Vocab) -> Vec<u32> {
    u.intervals
        .iter()
        .filter(|iv| iv.label != SILENCE_LABEL)
        .map(|iv| vocab.intern(&iv.label))
        .collect()
}

fn read_text(path: &Path) -> Result<String, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    check_line_endings(&text, &path.display().to_string())?;
    Ok(text)
}

fn check_line_endings(text: &str, path: &str) -> Result<(), CorpusError> {
    let bytes = text.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'\r' && bytes.get(i + 1) != Some(&b'\n') {
            return Err(CorpusError::CrLineEndings { path: path.to_owned() });
        }
    }
    Ok(())
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty())
}

/// Parses codes-file contents; `source` names the input in errors.
pub fn parse_codes(text: &str, codebook_size: u32, source: &str) -> Result<Vec<CodeSequence>, CorpusError> {
    check_line_endings(text, source)?;
    let err = |line: usize, message: String| CorpusError::Parse { path: source.to_owned(), line, message };
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (line_no, line) in lines(text) {
        let mut fields = line.splitn(3, '\t');
        let (Some(utt), Some(spk), Some(codes)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(err(line_no, "expected 3 tab-separated fields".into()));
        };
        if utt.is_empty() {
            return Err(err(line_no, "empty utterance id".into()));
        }
        let mut parsed = Vec::new();
        for tok in codes.split_whitespace() {
            let c: u32 = tok
                .parse()
                .map_err(|_| err(line_no, format!("non-integer code token {tok:?}")))?;
            if c >= codebook_size {
                return Err(err(line_no, format!("code out of range: {c} >= {codebook_size}")));
            }
            parsed.push(c);
        }
        if parsed.is_empty() {
            return Err(err(line_no, "empty code list".into()));
        }
        if !seen.insert(utt.to_owned()) {
            return Err(err(line_no, format!("duplicate utterance id {utt:?}")));
        }
        out.push(CodeSequence {
            utterance_id: utt.to_owned(),
            speaker_id: spk.to_owned(),
            codes: parsed,
            codebook_size,
        });
    }
    Ok(out)
}

/// Reads a codes file.
pub fn load_codes(path: impl AsRef<Path>, codebook_size: u32) -> Result<Vec<CodeSequence>, CorpusError> {
    let path = path.as_ref();
    parse_codes(&read_text(path)?, codebook_size, &path.display().to_string())
}

pub fn format_codes(seqs: &[CodeSequence]) -> String {
    let mut out = String::new();
    for s in seqs {
        out.push_str(&s.utterance_id);
        out.push('\t');
        out.push_str(&s.speaker_id);
        out.push('\t');
        for (i, c) in s.codes.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{c}");
        }
        out.push('\n');
    }
    out
}

pub fn write_codes(path: impl AsRef<Path>, seqs: &[CodeSequence]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    fs::write(path, format_codes(seqs)).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Intervals per utterance id, sorted by start.
pub type AlignmentMap = HashMap<String, Vec<PhonemeInterval>>;

/// Parses alignment-file contents.
///
/// Times are divided by `frame_factor` (start rounded down, end rounded
/// up). A rescaled start that falls before the previous interval's end is
/// moved up to it; intervals left empty are dropped with a warning.
pub fn parse_alignments(text: &str, frame_factor: usize, source: &str) -> Result<AlignmentMap, CorpusError> {
    check_line_endings(text, source)?;
    let err = |line: usize, message: String| CorpusError::Parse { path: source.to_owned(), line, message };
    if frame_factor == 0 {
        return Err(err(0, "frame factor must be positive".into()));
    }
    let mut raw: HashMap<String, Vec<(usize, PhonemeInterval)>> = HashMap::new();
    for (line_no, line) in lines(text) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(err(line_no, format!("expected 4 tab-separated fields, got {}", fields.len())));
        }
        let parse = |s: &str, what: &str| -> Result<usize, CorpusError> {
            s.trim().parse().map_err(|_| err(line_no, format!("non-integer {what} {s:?}")))
        };
        let (start, end) = (parse(fields[2], "start")?, parse(fields[3], "end")?);
        if start >= end {
            return Err(err(line_no, format!("start {start} is not before end {end}")));
        }
        if fields[1].is_empty() {
            return Err(err(line_no, "empty phoneme label".into()));
        }
        raw.entry(fields[0].to_owned())
            .or_default()
            .push((line_no, PhonemeInterval::new(fields[1], start, end)));
    }

    let mut out = AlignmentMap::with_capacity(raw.len());
    for (utt, mut ivs) in raw {
        ivs.sort_by_key(|(_, iv)| iv.start);
        for w in ivs.windows(2) {
            if w[1].1.start < w[0].1.end {
                return Err(err(w[1].0, format!("interval overlaps previous one in {utt}")));
            }
        }
        let mut scaled = Vec::with_capacity(ivs.len());
        let mut prev_end = 0;
        for (_, iv) in ivs {
            let start = (iv.start / frame_factor).max(prev_end);
            let end = iv.end.div_ceil(frame_factor);
            if start >= end {
                log::warn!("{utt}: interval {} vanished after rescaling by {frame_factor}", iv.label);
                continue;
            }
            prev_end = end;
            scaled.push(PhonemeInterval::new(iv.label, start, end));
        }
        out.insert(utt, scaled);
    }
    Ok(out)
}

pub fn load_alignments(path: impl AsRef<Path>, frame_factor: usize) -> Result<AlignmentMap, CorpusError> {
    let path = path.as_ref();
    parse_alignments(&read_text(path)?, frame_factor, &path.display().to_string())
}

pub fn format_alignments(utts: &[AlignedUtterance]) -> String {
    let mut out = String::new();
    for u in utts {
        for iv in &u.intervals {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", u.utterance_id(), iv.label, iv.start, iv.end);
        }
    }
    out
}

pub fn write_alignments(path: impl AsRef<Path>, utts: &[AlignedUtterance]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    fs::write(path, format_alignments(utts)).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Joins code sequences with their alignments, in code-file order.
///
/// Utterances without alignment or failing validation are errors, unless
/// `skip_bad` is set, in which case they are logged and dropped.
pub fn join(
    codes: Vec<CodeSequence>,
    alignments: &AlignmentMap,
    skip_bad: bool,
) -> Result<Vec<AlignedUtterance>, CorpusError> {
    let mut out = Vec::with_capacity(codes.len());
    for seq in codes {
        let result = match alignments.get(&seq.utterance_id) {
            Some(ivs) => AlignedUtterance::new(seq, ivs.clone()),
            None => Err(invalid(&seq.utterance_id, "missing alignment")),
        };
        match result {
            Ok(u) => out.push(u),
            Err(e) if skip_bad => log::warn!("dropping utterance: {e}"),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Seeded utterance-level split into two halves; the first half gets the
/// extra item when `n` is odd. Indices within each half stay ascending.
pub fn split_indices(n: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>), CorpusError> {
    if n < 2 {
        return Err(CorpusError::TooSmallToSplit(n));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = idx[..n.div_ceil(2)].to_vec();
    let mut eval = idx[n.div_ceil(2)..].to_vec();
    train.sort_unstable();
    eval.sort_unstable();
    Ok((train, eval))
}

/// Partitions a corpus into (train, eval) halves.
pub fn split_halves<T: Clone>(corpus: &[T], seed: u64) -> Result<(Vec<T>, Vec<T>), CorpusError> {
    let (train, eval) = split_indices(corpus.len(), seed)?;
    Ok((
        train.into_iter().map(|i| corpus[i].clone()).collect(),
        eval.into_iter().map(|i| corpus[i].clone()).collect(),
    ))
}

//! Synthetic aligned corpora with a controllable phoneme-to-code channel.
//!
//! Every frame of a phoneme emits a code from that phoneme's block with
//! probability `purity`; otherwise, with probability `speaker_leakage`, from
//! the speaker's block; otherwise uniformly over the whole codebook. Blocks
//! partition `[0, K)` as evenly as possible. Consecutive phonemes of an
//! utterance always differ.

use std::fs;
use std::ops::Range;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, AlignedUtterance, CodeSequence, CorpusError, PhonemeInterval};

/// A 39-symbol English phone set.
pub const DEFAULT_INVENTORY: [&str; 39] = [
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH", "EH", "ER", "EY", "F", "G", "HH", "IH", "IY",
    "JH", "K", "L", "M", "N", "NG", "OW", "OY", "P", "R", "S", "SH", "T", "TH", "UH", "UW", "V", "W", "Y",
    "Z", "ZH",
];

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid channel config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub codebook_size: u32,
    pub n_phonemes: usize,
    pub n_speakers: usize,
    /// Probability that a frame's code comes from its phoneme's block.
    pub purity: f64,
    /// Probability that a non-phoneme frame comes from the speaker's block.
    pub speaker_leakage: f64,
    /// Inclusive range of frames per phoneme.
    pub frames_per_phoneme: (usize, usize),
    /// Inclusive range of phonemes per utterance.
    pub utterance_length: (usize, usize),
    pub n_utterances: usize,
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            codebook_size: 256,
            n_phonemes: 39,
            n_speakers: 32,
            purity: 0.8,
            speaker_leakage: 0.0,
            frames_per_phoneme: (2, 8),
            utterance_length: (8, 30),
            n_utterances: 1000,
            seed: 0,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if self.codebook_size == 0 || self.n_phonemes == 0 || self.n_speakers == 0 || self.n_utterances == 0 {
            return bad("codebook size, phoneme, speaker and utterance counts must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.purity) || !(0.0..=1.0).contains(&self.speaker_leakage) {
            return bad(format!("purity {} and leakage {} must lie in [0, 1]", self.purity, self.speaker_leakage));
        }
        for (name, (lo, hi)) in [("frames_per_phoneme", self.frames_per_phoneme), ("utterance_length", self.utterance_length)] {
            if lo == 0 || lo > hi {
                return bad(format!("{name} range ({lo}, {hi}) must satisfy 0 < min <= max"));
            }
        }
        if self.purity == 1.0 && self.speaker_leakage == 0.0 && (self.codebook_size as usize) < self.n_phonemes {
            return bad(format!(
                "a pure channel needs K >= n_phonemes for an injective map ({} < {})",
                self.codebook_size, self.n_phonemes
            ));
        }
        Ok(())
    }

    pub fn inventory(&self) -> Vec<String> {
        if self.n_phonemes <= DEFAULT_INVENTORY.len() {
            DEFAULT_INVENTORY[..self.n_phonemes].iter().map(|s| (*s).to_owned()).collect()
        } else {
            (0..self.n_phonemes).map(|i| format!("PH{i}")).collect()
        }
    }
}

/// Block `i` of `n` roughly equal blocks over `[0, k)`; never empty.
pub fn block_range(i: usize, n: usize, k: u32) -> Range<u32> {
    let k = k as usize;
    let lo = i * k / n;
    let hi = ((i + 1) * k / n).max(lo + 1);
    lo as u32..hi as u32
}

/// The channel's ground truth, written as a JSON sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelTables {
    pub config: ChannelConfig,
    pub inventory: Vec<String>,
    /// Half-open code ranges per phoneme, in inventory order.
    pub phoneme_blocks: Vec<(u32, u32)>,
    pub speaker_blocks: Vec<(u32, u32)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthCorpus {
    pub utterances: Vec<AlignedUtterance>,
    pub tables: ChannelTables,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for utterance `index`, independent of generation order.
pub fn utterance_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index)
}

/// Generates a corpus; identical configs give identical corpora.
pub fn generate(config: &ChannelConfig) -> Result<SynthCorpus, SynthError> {
    config.validate()?;
    let k = config.codebook_size;
    let inventory = config.inventory();
    let phoneme_blocks: Vec<Range<u32>> = (0..config.n_phonemes).map(|i| block_range(i, config.n_phonemes, k)).collect();
    let speaker_blocks: Vec<Range<u32>> = (0..config.n_speakers).map(|i| block_range(i, config.n_speakers, k)).collect();
    let width = (config.n_utterances.max(2) - 1).to_string().len().max(5);
    let spk_width = (config.n_speakers.max(2) - 1).to_string().len().max(3);

    let utterances: Result<Vec<AlignedUtterance>, CorpusError> = (0..config.n_utterances)
        .into_par_iter()
        .with_min_len(16)
        .map(|idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(utterance_seed(config.seed, idx as u64));
            let speaker = rng.random_range(0..config.n_speakers);
            let n_ph = rng.random_range(config.utterance_length.0..=config.utterance_length.1);
            let mut codes = Vec::new();
            let mut intervals = Vec::with_capacity(n_ph);
            let mut prev: Option<usize> = None;
            for _ in 0..n_ph {
                // Uniform over phonemes other than the previous one.
                let ph = match prev {
                    Some(p) if config.n_phonemes > 1 => {
                        let draw = rng.random_range(0..config.n_phonemes - 1);
                        draw + usize::from(draw >= p)
                    }
                    _ => rng.random_range(0..config.n_phonemes),
                };
                prev = Some(ph);
                let frames = rng.random_range(config.frames_per_phoneme.0..=config.frames_per_phoneme.1);
                let start = codes.len();
                for _ in 0..frames {
                    let u: f64 = rng.random();
                    let code = if u < config.purity {
                        rng.random_range(phoneme_blocks[ph].clone())
                    } else if u < config.purity + config.speaker_leakage * (1.0 - config.purity) {
                        rng.random_range(speaker_blocks[speaker].clone())
                    } else {
                        rng.random_range(0..k)
                    };
                    codes.push(code);
                }
                intervals.push(PhonemeInterval::new(inventory[ph].clone(), start, codes.len()));
            }
            let seq = CodeSequence::new(
                format!("utt{idx:0width$}"),
                format!("spk{speaker:0spk_width$}"),
                codes,
                k,
            )?;
            AlignedUtterance::new(seq, intervals)
        })
        .collect();

    let to_pairs = |v: &[Range<u32>]| v.iter().map(|r| (r.start, r.end)).collect();
    Ok(SynthCorpus {
        utterances: utterances?,
        tables: ChannelTables {
            config: config.clone(),
            inventory,
            phoneme_blocks: to_pairs(&phoneme_blocks),
            speaker_blocks: to_pairs(&speaker_blocks),
        },
    })
}

pub const CODES_FILE: &str = "codes.tsv";
pub const ALIGNMENT_FILE: &str = "alignments.tsv";
pub const CHANNEL_FILE: &str = "channel.json";

impl SynthCorpus {
    pub fn code_sequences(&self) -> Vec<CodeSequence> {
        self.utterances.iter().map(|u| u.code_sequence.clone()).collect()
    }

    /// Writes the codes file, the alignment file and the channel sidecar.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<(), SynthError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        corpus::write_codes(dir.join(CODES_FILE), &self.code_sequences())?;
        corpus::write_alignments(dir.join(ALIGNMENT_FILE), &self.utterances)?;
        fs::write(dir.join(CHANNEL_FILE), serde_json::to_string_pretty(&self.tables)? + "\n")?;
        Ok(())
    }
}

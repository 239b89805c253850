//! Generate a synthetic aligned corpus and write it to disk.
//!
//! cargo run --example synthetic_corpus -- /tmp/corpus

use codeprobe::synth::{generate, ChannelConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "synthetic-corpus".into());
    let config = ChannelConfig { codebook_size: 128, purity: 0.7, speaker_leakage: 0.3, n_utterances: 200, seed: 1, ..Default::default() };
    let corpus = generate(&config)?;
    let frames: usize = corpus.utterances.iter().map(|u| u.codes().len()).sum();
    println!("{} utterances, {frames} frames, {} phonemes", corpus.utterances.len(), corpus.tables.inventory.len());
    let first = &corpus.utterances[0];
    let labels: Vec<&str> = first.intervals.iter().map(|iv| iv.label.as_str()).collect();
    println!("{} ({}): {}", first.utterance_id(), first.speaker_id(), labels.join(" "));
    corpus.write(&out)?;
    println!("wrote {out}/codes.tsv, alignments.tsv, channel.json");
    Ok(())
}

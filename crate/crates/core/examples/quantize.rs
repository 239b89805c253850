//! Nearest-prototype quantization of continuous frames.

use codeprobe::quantize::{format_codebook, parse_codebook, quantize_sequences, Codebook, FeatureSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let prototypes: Vec<Vec<f64>> = (0..16).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let book = Codebook::new(prototypes)?;
    let text = format_codebook(&book);
    assert_eq!(parse_codebook(&text, "memory")?, book);
    let utts: Vec<FeatureSequence> = (0..3)
        .map(|i| FeatureSequence {
            utterance_id: format!("utt{i}"),
            speaker_id: "spk0".into(),
            frames: (0..12).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect(),
        })
        .collect();
    for seq in quantize_sequences(&utts, &book)? {
        println!("{}: {:?}", seq.utterance_id, seq.codes);
    }
    Ok(())
}

//! Minimal-pair ABX discrimination on trigram segments.

use codeprobe::abx::{abx_score, build_triples, extract_segments, format_triples, TripleConfig};
use codeprobe::synth::{generate, ChannelConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for purity in [0.0, 0.4, 0.8] {
        let cfg = ChannelConfig { codebook_size: 128, n_phonemes: 8, purity, n_utterances: 200, ..Default::default() };
        let utts = generate(&cfg)?.utterances;
        let segments = extract_segments(&utts);
        let triples = build_triples(&segments, &TripleConfig { max_per_contrast: 50, seed: 3, ..Default::default() })?;
        let score = abx_score(&triples)?;
        println!(
            "purity {purity:.1}: {} segments, {} contrasts, {} triples, accuracy {:.4} (micro error {:.4})",
            segments.len(),
            score.n_contrasts,
            score.n_triples,
            score.accuracy,
            score.micro_error
        );
        if purity == 0.8 {
            let text = format_triples(&triples)?;
            println!("first triple in file form:\n{}", text.lines().take(3).collect::<Vec<_>>().join("\n"));
        }
    }
    Ok(())
}

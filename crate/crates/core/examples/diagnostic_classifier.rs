//! Train phoneme and speaker probes on a held-out split.

use codeprobe::corpus::{frame_pairs, split_halves, Vocab};
use codeprobe::probe::{accuracy, speaker_probe, train_logistic, TrainerConfig};
use codeprobe::synth::{generate, ChannelConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ChannelConfig {
        codebook_size: 64,
        n_speakers: 8,
        purity: 0.6,
        speaker_leakage: 0.5,
        n_utterances: 400,
        ..Default::default()
    };
    let corpus = generate(&cfg)?;
    let (train, eval) = split_halves(&corpus.utterances, 0)?;
    let mut vocab = Vocab::new();
    let train_frames = frame_pairs(&train, &mut vocab, false);
    let eval_frames = frame_pairs(&eval, &mut vocab, false);
    let probe = train_logistic(&train_frames, &TrainerConfig::default())?;
    let losses = probe.loss_history();
    println!("phoneme probe: loss {:.4} -> {:.4}", losses[0], losses[losses.len() - 1]);
    println!("phoneme accuracy on held-out frames: {:.4}", accuracy(&probe, &eval_frames)?);

    let acc = speaker_probe(&corpus.code_sequences(), 0, &TrainerConfig::frequency_vectors())?;
    println!("speaker accuracy from code frequencies: {acc:.4} (chance {:.3})", 1.0 / cfg.n_speakers as f64);
    Ok(())
}

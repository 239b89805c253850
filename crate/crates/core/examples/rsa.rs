//! Representational similarity between code strings and phoneme strings,
//! on whole utterances and on trigram segments.

use codeprobe::abx::extract_segments;
use codeprobe::cli::eval::{complete_stimuli, triplet_stimuli};
use codeprobe::corpus::Vocab;
use codeprobe::editdist::PairSampler;
use codeprobe::rsa::{rsa_on_corpus, StimulusKind};
use codeprobe::stats::CorrelationKind;
use codeprobe::synth::{generate, ChannelConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sampler = PairSampler::budgeted(200_000, 0);
    for k in [32, 256, 1024] {
        let cfg = ChannelConfig { codebook_size: k, n_phonemes: 8, purity: 0.6, n_utterances: 300, ..Default::default() };
        let utts = generate(&cfg)?.utterances;
        let mut vocab = Vocab::new();
        let complete = complete_stimuli(&utts, &mut vocab, false);
        let triplets = triplet_stimuli(&extract_segments(&utts), &mut vocab);
        let c = rsa_on_corpus(&complete.codes, &complete.references, &sampler, CorrelationKind::Pearson, StimulusKind::Complete)?;
        let t = rsa_on_corpus(&triplets.codes, &triplets.references, &sampler, CorrelationKind::Pearson, StimulusKind::Triplet)?;
        println!("K={k:5}: complete r={:.4} ({} pairs)  triplet r={:.4} ({} pairs)", c.correlation, c.n_pairs, t.correlation, t.n_pairs);
    }
    Ok(())
}

//! Mutual information, NMI and the closed-form probe on frame-level pairs.

use codeprobe::corpus::{frame_pairs, Vocab};
use codeprobe::infometrics::{build_histogram, conditional_entropy, entropy, mutual_information, nmi, Axis};
use codeprobe::probe::{cross_entropy, fit_closed_form, DEFAULT_EPSILON};
use codeprobe::synth::{generate, ChannelConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for purity in [0.0, 0.5, 1.0] {
        let cfg = ChannelConfig { codebook_size: 64, purity, n_utterances: 300, ..Default::default() };
        let corpus = generate(&cfg)?;
        let frames = frame_pairs(&corpus.utterances, &mut Vocab::new(), false);
        let (codes, labels): (Vec<u32>, Vec<u32>) = frames.iter().copied().unzip();
        let h = build_histogram(&codes, &labels)?;
        let probe = fit_closed_form(&h, DEFAULT_EPSILON);
        println!(
            "purity {purity:.1}: H(Y) {:.4}  H(Y|X) {:.4}  probe CE {:.4}  I {:.4}  NMI {:.4}",
            entropy(&h, Axis::Label),
            conditional_entropy(&h),
            cross_entropy(&probe, &frames)?,
            mutual_information(&h),
            nmi(&h)?
        );
    }
    Ok(())
}

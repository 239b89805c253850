//! Load a codes file and an alignment file, then run all four metrics.
//!
//! cargo run --example evaluate_files -- codes.tsv alignments.tsv
//!
//! Without arguments a small synthetic corpus is written to a temporary
//! directory first.

use codeprobe::cli::eval::{evaluate, EvalOptions, RsaInput};
use codeprobe::corpus::{join, load_alignments, load_codes};
use codeprobe::synth::{generate, ChannelConfig, ALIGNMENT_FILE, CODES_FILE};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (codes_path, align_path) = if let [c, a] = &args[..] {
        (c.into(), a.into())
    } else {
        let dir = std::env::temp_dir().join("codeprobe-example");
        let cfg = ChannelConfig { codebook_size: 64, n_phonemes: 10, purity: 0.7, n_utterances: 300, ..Default::default() };
        generate(&cfg)?.write(&dir)?;
        (dir.join(CODES_FILE), dir.join(ALIGNMENT_FILE))
    };
    let codes = load_codes(&codes_path, u32::MAX)?;
    let k = codes.iter().flat_map(|c| c.codes.iter()).max().map_or(1, |m| m + 1);
    let utts = join(codes.into_iter().map(|mut c| { c.codebook_size = k; c }).collect(), &load_alignments(&align_path, 1)?, false)?;
    let opts = EvalOptions { rsa_input: RsaInput::Both, ..Default::default() };
    for v in evaluate(&utts, &opts)? {
        println!("{:4} {:15} n={:8} value={:.4}", v.metric, v.input_kind, v.n, v.value);
    }
    Ok(())
}

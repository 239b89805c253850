//! Levenshtein distance, repetition collapsing and sampled pairwise distances.

use codeprobe::editdist::{collapse_repeats, levenshtein, normalized_distance, pairwise_distances_single, PairSampler, SymbolString};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = [3, 3, 3, 7, 7, 1, 1, 1, 1];
    let b = [3, 7, 7, 7, 2, 1];
    println!("collapsed: {:?} and {:?}", collapse_repeats(&a), collapse_repeats(&b));
    println!("raw distance {}, normalized {:.3}", levenshtein(&a, &b), normalized_distance(&a, &b, false)?);
    println!("after collapsing: {:.3}", normalized_distance(&a, &b, true)?);

    let items: Vec<SymbolString> = (0..200u32).map(|i| SymbolString::new((0..20).map(|j| (i * 7 + j * j) % 11).collect())).collect();
    let all = pairwise_distances_single(&items, &PairSampler::all())?;
    let some = pairwise_distances_single(&items, &PairSampler::budgeted(1000, 42))?;
    let mean = |d: &[f64]| d.iter().sum::<f64>() / d.len() as f64;
    println!("{} pairs, mean {:.4}; sampled {} pairs, mean {:.4}", all.len(), mean(&all), some.len(), mean(&some));
    Ok(())
}

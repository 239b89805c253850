//! Representational similarity analysis between code strings and
//! reference phoneme strings.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::editdist::{pairwise_distances, DistancePairs, EditDistError, PairSampler, SymbolString};
use crate::stats::{correlation, CorrelationKind, StatsError};

/// Default cap on the number of stimulus pairs.
pub const DEFAULT_PAIR_BUDGET: usize = 5_000_000;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum RsaError {
    #[error("RSA needs at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("zero variance: both distance lists are constant")]
    ZeroVariance,
    #[error(transparent)]
    EditDist(#[from] EditDistError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// What the stimuli are: whole utterances or phoneme-trigram segments.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StimulusKind {
    #[default]
    Complete,
    Triplet,
}

impl fmt::Display for StimulusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Complete => "complete",
            Self::Triplet => "triplet",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RsaResult {
    pub correlation: f64,
    pub n_pairs: usize,
    pub input_kind: StimulusKind,
    pub correlation_kind: CorrelationKind,
}

/// Correlation between the two distance lists.
///
/// When exactly one list is constant the correlation is reported as 0.
pub fn rsa_score(pairs: &DistancePairs, kind: CorrelationKind) -> Result<RsaResult, RsaError> {
    if pairs.len() < 2 {
        return Err(RsaError::TooFewPairs(pairs.len()));
    }
    let correlation = match correlation(&pairs.distances_a, &pairs.distances_b, kind) {
        Err(StatsError::ZeroVariance) => return Err(RsaError::ZeroVariance),
        Err(e) => return Err(e.into()),
        Ok(r) => r,
    };
    let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    if constant(&pairs.distances_a) || constant(&pairs.distances_b) {
        log::warn!("RSA: one distance list is constant; correlation reported as 0");
    }
    Ok(RsaResult {
        correlation,
        n_pairs: pairs.len(),
        input_kind: StimulusKind::Complete,
        correlation_kind: kind,
    })
}

/// Pairwise distances for RSA: code strings are repetition-collapsed,
/// reference strings are compared as given.
pub fn rsa_distances(
    codes: &[SymbolString],
    references: &[SymbolString],
    sampler: &PairSampler,
) -> Result<DistancePairs, RsaError> {
    let collapsed: Vec<SymbolString> = codes.iter().map(SymbolString::collapsed).collect();
    Ok(pairwise_distances(&collapsed, references, sampler)?)
}

/// Collapses codes, measures pairwise distances in both spaces and
/// correlates them.
pub fn rsa_on_corpus(
    codes: &[SymbolString],
    references: &[SymbolString],
    sampler: &PairSampler,
    kind: CorrelationKind,
    input_kind: StimulusKind,
) -> Result<RsaResult, RsaError> {
    let pairs = rsa_distances(codes, references, sampler)?;
    let mut result = rsa_score(&pairs, kind)?;
    result.input_kind = input_kind;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pairs(a: &[f64], b: &[f64]) -> DistancePairs {
        DistancePairs {
            pair_indices: (0..a.len() as u32).map(|i| (0, i + 1)).collect(),
            distances_a: a.to_vec(),
            distances_b: b.to_vec(),
        }
    }

    #[test]
    fn score_examples() {
        let a = [0.1, 0.4, 0.9, 0.3];
        let r = rsa_score(&pairs(&a, &a), CorrelationKind::Pearson).unwrap();
        assert!((r.correlation - 1.0).abs() < 1e-12);
        assert_eq!(r.n_pairs, 4);
        let flipped: Vec<f64> = a.iter().map(|x| 1.0 - x).collect();
        assert!((rsa_score(&pairs(&a, &flipped), CorrelationKind::Pearson).unwrap().correlation + 1.0).abs() < 1e-12);

        // Textbook Pearson on three points.
        let (x, y) = ([0.1, 0.4, 0.9], [0.2, 0.5, 0.7]);
        let (mx, my) = (x.iter().sum::<f64>() / 3.0, y.iter().sum::<f64>() / 3.0);
        let sxy: f64 = (0..3).map(|i| (x[i] - mx) * (y[i] - my)).sum();
        let sxx: f64 = (0..3).map(|i| (x[i] - mx).powi(2)).sum();
        let syy: f64 = (0..3).map(|i| (y[i] - my).powi(2)).sum();
        let expected = sxy / (sxx * syy).sqrt();
        let got = rsa_score(&pairs(&x, &y), CorrelationKind::Pearson).unwrap().correlation;
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn score_errors() {
        assert_eq!(rsa_score(&pairs(&[0.5], &[0.5]), CorrelationKind::Pearson), Err(RsaError::TooFewPairs(1)));
        assert_eq!(
            rsa_score(&pairs(&[0.5, 0.5], &[0.1, 0.1]), CorrelationKind::Pearson),
            Err(RsaError::ZeroVariance)
        );
        let r = rsa_score(&pairs(&[0.5, 0.5, 0.5], &[0.1, 0.2, 0.3]), CorrelationKind::Spearman).unwrap();
        assert_eq!(r.correlation, 0.0);
    }

    #[test]
    fn relabeled_references_score_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let refs: Vec<SymbolString> = (0..30)
            .map(|_| {
                let n = rng.random_range(2..12);
                SymbolString::new(collapse_free(&mut rng, n))
            })
            .collect();
        let codes: Vec<SymbolString> = refs.iter().map(|r| SymbolString::new(r.iter().map(|&s| 100 + s * 3).collect())).collect();
        let r = rsa_on_corpus(&codes, &refs, &PairSampler::all(), CorrelationKind::Pearson, StimulusKind::Complete).unwrap();
        assert!((r.correlation - 1.0).abs() < 1e-12);
        assert_eq!(r.n_pairs, 435);
    }

    fn collapse_free(rng: &mut ChaCha8Rng, n: usize) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::new();
        while out.len() < n {
            let s = rng.random_range(0..6);
            if out.last() != Some(&s) {
                out.push(s);
            }
        }
        out
    }

    #[test]
    fn random_codes_are_uncorrelated() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let refs: Vec<SymbolString> = (0..200)
            .map(|_| {
                let n = rng.random_range(3..15);
                SymbolString::new((0..n).map(|_| rng.random_range(0..20)).collect())
            })
            .collect();
        let codes: Vec<SymbolString> = (0..200)
            .map(|_| {
                let n = rng.random_range(10..60);
                SymbolString::new((0..n).map(|_| rng.random_range(0..64)).collect())
            })
            .collect();
        let r = rsa_on_corpus(&codes, &refs, &PairSampler::all(), CorrelationKind::Pearson, StimulusKind::Complete).unwrap();
        assert!(r.correlation.abs() < 0.1, "{}", r.correlation);
    }

    proptest! {
        #[test]
        fn affine_invariance(
            a in proptest::collection::vec(0.0f64..1.0, 3..40),
            seed in any::<u64>(),
            scale in 0.1f64..3.0,
            shift in -1.0f64..1.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b: Vec<f64> = a.iter().map(|_| rng.random_range(0.0..1.0)).collect();
            let b2: Vec<f64> = b.iter().map(|x| scale * x + shift).collect();
            for kind in [CorrelationKind::Pearson, CorrelationKind::Spearman] {
                let r1 = rsa_score(&pairs(&a, &b), kind);
                let r2 = rsa_score(&pairs(&a, &b2), kind);
                if let (Ok(r1), Ok(r2)) = (r1, r2) {
                    prop_assert!((r1.correlation - r2.correlation).abs() < 1e-9);
                }
            }
        }
    }
}

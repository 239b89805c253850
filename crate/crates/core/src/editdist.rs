//! Edit-distance kernel over integer symbol strings.
//!
//! Code sequences and interned phoneme strings are both represented as
//! `u32` symbols. Distances use unit costs for insertion, deletion and
//! substitution. [`levenshtein`] runs a block-based bit-parallel algorithm
//! (Myers 1999, Hyyrö 2003); [`levenshtein_dp`] is the plain dynamic
//! programme it is tested against.

use std::cell::RefCell;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Errors raised by the edit-distance kernel.
#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum EditDistError {
    #[error("degenerate pair: both strings are empty")]
    DegeneratePair,
    #[error("need at least 2 items for pairwise distances, got {0}")]
    TooFewItems(usize),
    #[error("item lists differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// A string of interned symbols. All strings compared in one batch must
/// share an alphabet (codes with codes, phonemes with phonemes).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolString(pub Vec<u32>);

impl SymbolString {
    pub fn new(symbols: Vec<u32>) -> Self {
        Self(symbols)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn collapsed(&self) -> SymbolString {
        SymbolString(collapse_repeats(&self.0))
    }
}

impl From<Vec<u32>> for SymbolString {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

impl std::ops::Deref for SymbolString {
    type Target = [u32];

    fn deref(&self) -> &[u32] {
        &self.0
    }
}

/// Removes runs of adjacent equal symbols, keeping one of each run.
pub fn collapse_repeats<T: PartialEq + Copy>(s: &[T]) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(s.len());
    for &sym in s {
        if out.last() != Some(&sym) {
            out.push(sym);
        }
    }
    out
}

/// Plain O(|a|·|b|) Levenshtein distance with a single rolling row.
pub fn levenshtein_dp<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let above = row[j + 1];
            let sub = diag + usize::from(ca != cb);
            row[j + 1] = sub.min(above + 1).min(row[j] + 1);
            diag = above;
        }
    }
    row[b.len()]
}

// Symbols at or above this bound use the DP instead of the dense Peq table.
const DENSE_SYMBOL_LIMIT: u32 = 1 << 20;

thread_local! {
    static PEQ: RefCell<Vec<u64>> = const { RefCell::new(Vec::new()) };
}

/// Levenshtein distance between two symbol strings.
///
/// Equal to [`levenshtein_dp`] for every input.
pub fn levenshtein(a: &[u32], b: &[u32]) -> usize {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[prefix..], &b[prefix..]);
    let suffix = a
        .iter()
        .rev()
        .zip(b.iter().rev())
        .take_while(|(x, y)| x == y)
        .count();
    let (a, b) = (&a[..a.len() - suffix], &b[..b.len() - suffix]);
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let (pattern, text) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let max_sym = pattern.iter().copied().max().unwrap_or(0);
    if max_sym >= DENSE_SYMBOL_LIMIT {
        return levenshtein_dp(a, b);
    }
    PEQ.with(|cell| myers_blocks(pattern, text, max_sym, &mut cell.borrow_mut()))
}

// One 64-row block of the bit-vector recurrence; returns the pre-shift
// horizontal delta vectors.
#[inline(always)]
fn advance_block(pv: &mut u64, mv: &mut u64, eq: u64, hin: i32) -> (u64, u64) {
    let hin_neg = u64::from(hin < 0);
    let xv = eq | *mv;
    let eq = eq | hin_neg;
    let xh = ((eq & *pv).wrapping_add(*pv) ^ *pv) | eq;
    let ph = *mv | !(xh | *pv);
    let mh = *pv & xh;
    let ph_s = (ph << 1) | u64::from(hin > 0);
    let mh_s = (mh << 1) | hin_neg;
    *pv = mh_s | !(xv | ph_s);
    *mv = ph_s & xv;
    (ph, mh)
}

fn myers_blocks(pattern: &[u32], text: &[u32], max_sym: u32, peq: &mut Vec<u64>) -> usize {
    let m = pattern.len();
    let blocks = m.div_ceil(64);
    let needed = (max_sym as usize + 1) * blocks;
    if peq.len() < needed {
        peq.resize(needed, 0);
    }
    for (i, &s) in pattern.iter().enumerate() {
        peq[s as usize * blocks + i / 64] |= 1u64 << (i % 64);
    }

    let mut pv = vec![u64::MAX; blocks];
    let mut mv = vec![0u64; blocks];
    let last_bit = 1u64 << ((m - 1) % 64);
    let high_bit = 1u64 << 63;
    let mut score = m;
    let zero = [0u64; 0];
    for &t in text {
        let row: &[u64] = if t <= max_sym {
            &peq[t as usize * blocks..(t as usize + 1) * blocks]
        } else {
            &zero
        };
        let mut hin = 1i32;
        for b in 0..blocks {
            let eq = row.get(b).copied().unwrap_or(0);
            let (ph, mh) = advance_block(&mut pv[b], &mut mv[b], eq, hin);
            let bit = if b + 1 == blocks { last_bit } else { high_bit };
            hin = i32::from(ph & bit != 0) - i32::from(mh & bit != 0);
        }
        score = (score as i64 + i64::from(hin)) as usize;
    }

    for &s in pattern {
        peq[s as usize * blocks..(s as usize + 1) * blocks].fill(0);
    }
    score
}

/// Levenshtein distance divided by the length of the longer string, after
/// optional repetition collapsing of both inputs.
pub fn normalized_distance(a: &[u32], b: &[u32], collapse: bool) -> Result<f64, EditDistError> {
    if collapse {
        normalized_distance_raw(&collapse_repeats(a), &collapse_repeats(b))
    } else {
        normalized_distance_raw(a, b)
    }
}

fn normalized_distance_raw(a: &[u32], b: &[u32]) -> Result<f64, EditDistError> {
    let longer = a.len().max(b.len());
    if longer == 0 {
        return Err(EditDistError::DegeneratePair);
    }
    Ok(levenshtein(a, b) as f64 / longer as f64)
}

/// Which pairs of stimuli enter a pairwise distance computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSampler {
    /// Maximum number of pairs; `None` means all pairs.
    pub budget: Option<usize>,
    pub seed: u64,
}

impl PairSampler {
    pub fn all() -> Self {
        Self { budget: None, seed: 0 }
    }

    pub fn budgeted(max_pairs: usize, seed: u64) -> Self {
        Self { budget: Some(max_pairs), seed }
    }

    /// Selected `(i, j)` pairs with `i < j`, in ascending row-major order.
    pub fn select(&self, n: usize) -> Vec<(u32, u32)> {
        let total = n * n.saturating_sub(1) / 2;
        match self.budget {
            Some(budget) if budget < total => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let mut picked = index::sample(&mut rng, total, budget).into_vec();
                picked.sort_unstable();
                decode_pair_indices(n, &picked)
            }
            _ => {
                let mut out = Vec::with_capacity(total);
                for i in 0..n {
                    for j in i + 1..n {
                        out.push((i as u32, j as u32));
                    }
                }
                out
            }
        }
    }
}

impl Default for PairSampler {
    fn default() -> Self {
        Self::all()
    }
}

// `sorted` holds ascending linear indices into the row-major upper triangle.
fn decode_pair_indices(n: usize, sorted: &[usize]) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity(sorted.len());
    let mut row = 0usize;
    let mut row_start = 0usize;
    for &k in sorted {
        while k >= row_start + (n - 1 - row) {
            row_start += n - 1 - row;
            row += 1;
        }
        let j = row + 1 + (k - row_start);
        out.push((row as u32, j as u32));
    }
    out
}

/// Pairwise normalized distances between the same stimuli in two spaces.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DistancePairs {
    pub pair_indices: Vec<(u32, u32)>,
    pub distances_a: Vec<f64>,
    pub distances_b: Vec<f64>,
}

impl DistancePairs {
    pub fn len(&self) -> usize {
        self.pair_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pair_indices.is_empty()
    }
}

/// Normalized edit distances for the sampled pairs, in both spaces.
///
/// Inputs are compared as given; collapse beforehand where wanted. Runs on
/// the current rayon pool and returns pairs in sampler order regardless of
/// thread count.
pub fn pairwise_distances(
    items_a: &[SymbolString],
    items_b: &[SymbolString],
    sampler: &PairSampler,
) -> Result<DistancePairs, EditDistError> {
    if items_a.len() != items_b.len() {
        return Err(EditDistError::LengthMismatch(items_a.len(), items_b.len()));
    }
    let n = items_a.len();
    if n < 2 {
        return Err(EditDistError::TooFewItems(n));
    }
    let pair_indices = sampler.select(n);
    let dists: Result<Vec<(f64, f64)>, EditDistError> = pair_indices
        .par_iter()
        .with_min_len(256)
        .map(|&(i, j)| {
            let (i, j) = (i as usize, j as usize);
            Ok((
                normalized_distance_raw(&items_a[i], &items_a[j])?,
                normalized_distance_raw(&items_b[i], &items_b[j])?,
            ))
        })
        .collect();
    let (distances_a, distances_b) = dists?.into_iter().unzip();
    Ok(DistancePairs { pair_indices, distances_a, distances_b })
}

/// Normalized distances for the sampled pairs in a single space.
pub fn pairwise_distances_single(
    items: &[SymbolString],
    sampler: &PairSampler,
) -> Result<Vec<f64>, EditDistError> {
    let n = items.len();
    if n < 2 {
        return Err(EditDistError::TooFewItems(n));
    }
    sampler
        .select(n)
        .par_iter()
        .with_min_len(256)
        .map(|&(i, j)| normalized_distance_raw(&items[i as usize], &items[j as usize]))
        .collect()
}

//! Empirical entropy, mutual information and NMI over (code, label) frames.
//!
//! All quantities are in nats and computed from plain empirical
//! probabilities; cells with zero count contribute nothing.

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum InfoError {
    #[error("codes and labels differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("cannot build a histogram from zero frames")]
    Empty,
    #[error("NMI undefined: both marginals are point masses")]
    NmiUndefined,
    #[error("histogram shape mismatch: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
}

/// Which marginal of a [`JointHistogram`] to take.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Code,
    Label,
}

/// Joint counts of (code, label) frame pairs.
///
/// Rows are code values, columns are label ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointHistogram {
    n_codes: usize,
    n_labels: usize,
    counts: Vec<u64>,
    total: u64,
}

impl JointHistogram {
    /// Empty table with the given shape; `total` is 0 until frames are added.
    pub fn zeros(n_codes: usize, n_labels: usize) -> Self {
        Self { n_codes, n_labels, counts: vec![0; n_codes * n_labels], total: 0 }
    }

    /// Builds a histogram from a row-major table of counts.
    pub fn from_counts(rows: &[Vec<u64>]) -> Result<Self, InfoError> {
        let n_codes = rows.len();
        let n_labels = rows.first().map_or(0, Vec::len);
        let mut h = Self::zeros(n_codes, n_labels);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != n_labels {
                return Err(InfoError::ShapeMismatch(n_codes, n_labels, n_codes, row.len()));
            }
            for (y, &c) in row.iter().enumerate() {
                h.counts[x * n_labels + y] = c;
                h.total += c;
            }
        }
        if h.total == 0 {
            return Err(InfoError::Empty);
        }
        Ok(h)
    }

    pub fn add(&mut self, code: u32, label: u32) {
        self.add_count(code, label, 1);
    }

    pub fn add_count(&mut self, code: u32, label: u32, count: u64) {
        let (x, y) = (code as usize, label as usize);
        if x >= self.n_codes || y >= self.n_labels {
            self.grow((x + 1).max(self.n_codes), (y + 1).max(self.n_labels));
        }
        self.counts[x * self.n_labels + y] += count;
        self.total += count;
    }

    fn grow(&mut self, n_codes: usize, n_labels: usize) {
        let mut counts = vec![0; n_codes * n_labels];
        for x in 0..self.n_codes {
            let src = &self.counts[x * self.n_labels..(x + 1) * self.n_labels];
            counts[x * n_labels..x * n_labels + self.n_labels].copy_from_slice(src);
        }
        self.counts = counts;
        self.n_codes = n_codes;
        self.n_labels = n_labels;
    }

    /// Elementwise sum, growing to the larger shape.
    pub fn merge(&mut self, other: &JointHistogram) {
        if other.n_codes > self.n_codes || other.n_labels > self.n_labels {
            self.grow(self.n_codes.max(other.n_codes), self.n_labels.max(other.n_labels));
        }
        for x in 0..other.n_codes {
            for y in 0..other.n_labels {
                self.counts[x * self.n_labels + y] += other.get(x, y);
            }
        }
        self.total += other.total;
    }

    pub fn n_codes(&self) -> usize {
        self.n_codes
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn get(&self, code: usize, label: usize) -> u64 {
        self.counts[code * self.n_labels + label]
    }

    pub fn row(&self, code: usize) -> &[u64] {
        &self.counts[code * self.n_labels..(code + 1) * self.n_labels]
    }

    pub fn marginal(&self, axis: Axis) -> Vec<u64> {
        match axis {
            Axis::Code => (0..self.n_codes).map(|x| self.row(x).iter().sum()).collect(),
            Axis::Label => {
                let mut m = vec![0u64; self.n_labels];
                for x in 0..self.n_codes {
                    for (acc, &c) in m.iter_mut().zip(self.row(x)) {
                        *acc += c;
                    }
                }
                m
            }
        }
    }

    pub fn transpose(&self) -> JointHistogram {
        let mut t = Self::zeros(self.n_labels, self.n_codes);
        for x in 0..self.n_codes {
            for y in 0..self.n_labels {
                t.counts[y * self.n_codes + x] = self.get(x, y);
            }
        }
        t.total = self.total;
        t
    }

    /// Non-zero `(code, label, count)` cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.counts.iter().enumerate().filter(|(_, &c)| c > 0).map(move |(i, &c)| {
            (i / self.n_labels, i % self.n_labels, c)
        })
    }

    /// Expands the table back into one `(code, label)` pair per frame.
    pub fn frames(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.total as usize);
        for (x, y, c) in self.cells() {
            out.extend(std::iter::repeat_n((x as u32, y as u32), c as usize));
        }
        out
    }
}

/// Joint counts of frame-aligned codes and label ids.
pub fn build_histogram(codes: &[u32], labels: &[u32]) -> Result<JointHistogram, InfoError> {
    if codes.len() != labels.len() {
        return Err(InfoError::LengthMismatch(codes.len(), labels.len()));
    }
    if codes.is_empty() {
        return Err(InfoError::Empty);
    }
    let n_codes = codes.iter().copied().max().unwrap_or(0) as usize + 1;
    let n_labels = labels.iter().copied().max().unwrap_or(0) as usize + 1;
    let mut h = JointHistogram::zeros(n_codes, n_labels);
    for (&x, &y) in codes.iter().zip(labels) {
        h.add(x, y);
    }
    Ok(h)
}

fn entropy_of_counts(counts: &[u64], total: u64) -> f64 {
    let n = total as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    h.max(0.0)
}

/// Entropy of one marginal.
pub fn entropy(h: &JointHistogram, axis: Axis) -> f64 {
    entropy_of_counts(&h.marginal(axis), h.total)
}

/// Empirical conditional entropy `H(label | code)`.
pub fn conditional_entropy(h: &JointHistogram) -> f64 {
    let n = h.total as f64;
    let mut acc = 0.0;
    for x in 0..h.n_codes {
        let row = h.row(x);
        let nx: u64 = row.iter().sum();
        if nx == 0 {
            continue;
        }
        acc += (nx as f64 / n) * entropy_of_counts(row, nx);
    }
    acc
}

/// `sum P(x,y) ln(P(x,y) / (P(x) P(y)))`.
pub fn mutual_information(h: &JointHistogram) -> f64 {
    let n = h.total as f64;
    let px = h.marginal(Axis::Code);
    let py = h.marginal(Axis::Label);
    let mi: f64 = h
        .cells()
        .map(|(x, y, c)| {
            let pxy = c as f64 / n;
            pxy * ((c as f64 * n) / (px[x] as f64 * py[y] as f64)).ln()
        })
        .sum();
    mi.max(0.0)
}

/// Mutual information normalized by the arithmetic mean of both entropies.
pub fn nmi(h: &JointHistogram) -> Result<f64, InfoError> {
    let denom = entropy(h, Axis::Code) + entropy(h, Axis::Label);
    if denom <= 0.0 {
        return Err(InfoError::NmiUndefined);
    }
    Ok((2.0 * mutual_information(h) / denom).clamp(0.0, 1.0))
}

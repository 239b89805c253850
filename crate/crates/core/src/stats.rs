//! Descriptive statistics and smoothing for metric reports.
//!
//! Moments use the biased (population) estimators. LOESS is the single-pass,
//! degree-1 variant with tricube weights.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("zero variance in both series")]
    ZeroVariance,
    #[error("insufficient points in LOESS window: {0}")]
    InsufficientWindow(String),
    #[error("unknown correlation kind {0:?} (expected pearson or spearman)")]
    UnknownKind(String),
}

/// Correlation coefficient family.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationKind {
    #[default]
    Pearson,
    Spearman,
}

impl fmt::Display for CorrelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pearson => "pearson",
            Self::Spearman => "spearman",
        })
    }
}

impl FromStr for CorrelationKind {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" => Ok(Self::Pearson),
            "spearman" => Ok(Self::Spearman),
            _ => Err(StatsError::UnknownKind(s.to_owned())),
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn central_moments(xs: &[f64]) -> (f64, f64, f64) {
    let mu = mean(xs);
    let n = xs.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - mu;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

fn nonzero_variance(m2: f64, xs: &[f64]) -> bool {
    // Rounding can leave a tiny positive m2 for a constant sample.
    let first = xs[0];
    m2 > 0.0 && xs.iter().any(|&x| x != first)
}

/// Sample skewness `m3 / m2^(3/2)`.
pub fn skewness(xs: &[f64]) -> Result<f64, StatsError> {
    if xs.len() < 3 {
        return Err(StatsError::DegenerateSample(format!("n = {} < 3", xs.len())));
    }
    let (m2, m3, _) = central_moments(xs);
    if !nonzero_variance(m2, xs) {
        return Err(StatsError::DegenerateSample("zero variance".into()));
    }
    Ok(m3 / m2.powf(1.5))
}

/// Excess kurtosis `m4 / m2^2 - 3`.
pub fn excess_kurtosis(xs: &[f64]) -> Result<f64, StatsError> {
    if xs.len() < 4 {
        return Err(StatsError::DegenerateSample(format!("n = {} < 4", xs.len())));
    }
    let (m2, _, m4) = central_moments(xs);
    if !nonzero_variance(m2, xs) {
        return Err(StatsError::DegenerateSample("zero variance".into()));
    }
    Ok(m4 / (m2 * m2) - 3.0)
}

fn is_constant(xs: &[f64]) -> bool {
    xs.iter().all(|&x| x == xs[0])
}

/// Pearson correlation. A constant series yields 0; two constant series
/// are an error.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.is_empty() {
        return Err(StatsError::DegenerateSample("empty series".into()));
    }
    match (is_constant(xs), is_constant(ys)) {
        (true, true) => return Err(StatsError::ZeroVariance),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Ranks starting at 1, ties receiving their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && xs[order[j]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

pub fn correlation(xs: &[f64], ys: &[f64], kind: CorrelationKind) -> Result<f64, StatsError> {
    match kind {
        CorrelationKind::Pearson => pearson(xs, ys),
        CorrelationKind::Spearman => spearman(xs, ys),
    }
}

/// Correlation between two metric series across matched configurations.
pub fn metric_correlation(xs: &[f64], ys: &[f64], kind: CorrelationKind) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(StatsError::DegenerateSample(format!("n = {} < 3", xs.len())));
    }
    correlation(xs, ys, kind)
}

/// Locally weighted linear regression evaluated at every input `x`.
///
/// Each fit uses the `floor(span * n)` nearest neighbours with tricube
/// weights scaled by the distance to the farthest of them. Output order
/// follows input order.
pub fn loess(points: &[(f64, f64)], span: f64) -> Result<Vec<(f64, f64)>, StatsError> {
    const DEGREE: usize = 1;
    let n = points.len();
    if n < 3 {
        return Err(StatsError::InsufficientWindow(format!("{n} points, need at least 3")));
    }
    if !(span > 0.0 && span <= 1.0) {
        return Err(StatsError::InsufficientWindow(format!("span {span} outside (0, 1]")));
    }
    let q = ((span * n as f64).floor() as usize).min(n);
    if q < DEGREE + 1 {
        return Err(StatsError::InsufficientWindow(format!(
            "span * n = {} < {}",
            span * n as f64,
            DEGREE + 1
        )));
    }
    let mut dists = vec![0.0; n];
    points
        .iter()
        .map(|&(x0, _)| {
            for (d, &(x, _)) in dists.iter_mut().zip(points) {
                *d = (x - x0).abs();
            }
            let mut sorted = dists.clone();
            sorted.sort_by(f64::total_cmp);
            let h = sorted[q - 1];
            let (mut sw, mut swx, mut swy, mut swxx, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (&d, &(x, y)) in dists.iter().zip(points) {
                let w = if h > 0.0 {
                    let u = d / h;
                    if u < 1.0 {
                        let t = 1.0 - u * u * u;
                        t * t * t
                    } else {
                        0.0
                    }
                } else if d == 0.0 {
                    1.0
                } else {
                    0.0
                };
                if w > 0.0 {
                    let xc = x - x0;
                    sw += w;
                    swx += w * xc;
                    swy += w * y;
                    swxx += w * xc * xc;
                    swxy += w * xc * y;
                }
            }
            // Centred at x0, the fitted value is the intercept.
            let det = sw * swxx - swx * swx;
            let fitted = if swxx > 0.0 && det > 1e-12 * sw * swxx {
                (swxx * swy - swx * swxy) / det
            } else {
                swy / sw
            };
            Ok((x0, fitted))
        })
        .collect()
}

/// One observation of a metric for a configuration in a group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub x: f64,
    pub y: f64,
    pub group: String,
}

/// Points of a metric across configurations, tagged by group.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub points: Vec<MetricPoint>,
}

impl MetricSeries {
    pub fn push(&mut self, x: f64, y: f64, group: impl Into<String>) {
        self.points.push(MetricPoint { x, y, group: group.into() });
    }

    pub fn groups(&self) -> BTreeMap<&str, Vec<(f64, f64)>> {
        let mut out: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
        for p in &self.points {
            out.entry(p.group.as_str()).or_default().push((p.x, p.y));
        }
        out
    }

    /// LOESS curve per group, evaluated at the distinct x values and sorted
    /// by x. Duplicate x values (seeds) share one fitted value.
    pub fn smooth(&self, span: f64) -> Result<BTreeMap<String, Vec<(f64, f64)>>, StatsError> {
        let mut out = BTreeMap::new();
        for (group, pts) in self.groups() {
            let mut fitted = loess(&pts, span)?;
            fitted.sort_by(|a, b| a.0.total_cmp(&b.0));
            fitted.dedup_by(|a, b| a.0 == b.0);
            out.insert(group.to_owned(), fitted);
        }
        Ok(out)
    }
}

//! Experiment recipes over synthetic corpora.

use std::collections::BTreeMap;

use clap::ValueEnum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eval::{complete_stimuli, evaluate, triplet_stimuli, EvalError, EvalOptions, Metric, MetricValue, RsaInput};
use super::manifest::derive_seed;
use super::report::ReportRow;
use crate::abx::extract_segments;
use crate::corpus::Vocab;
use crate::editdist::PairSampler;
use crate::rsa::{rsa_distances, RsaError};
use crate::stats::{excess_kurtosis, metric_correlation, skewness, CorrelationKind, MetricSeries, StatsError};
use crate::synth::{generate, ChannelConfig, SynthError};

// (metric, input_kind)
type Column = (&'static str, &'static str);

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recipe {
    /// Codebook sizes 2^5..2^10 at fixed purity; all four metrics.
    Codebook,
    /// Channel purity sweep at fixed codebook size; all four metrics.
    Purity,
    /// RSA on complete utterances and on trigrams, each against ABX.
    Stimulus,
    /// Skew and excess kurtosis of code edit-distance distributions.
    DistanceShape,
}

impl Recipe {
    pub fn name(self) -> &'static str {
        match self {
            Recipe::Codebook => "codebook",
            Recipe::Purity => "purity",
            Recipe::Stimulus => "stimulus",
            Recipe::DistanceShape => "distance-shape",
        }
    }

    pub fn default_codebook_sizes(self) -> Vec<u32> {
        match self {
            Recipe::DistanceShape => vec![32, 1024],
            Recipe::Purity => vec![64],
            _ => (5..=10).map(|n| 1 << n).collect(),
        }
    }

    pub fn default_purities(self) -> Vec<f64> {
        match self {
            Recipe::Purity => vec![0.0, 0.25, 0.5, 0.75, 1.0],
            _ => vec![0.6],
        }
    }

    fn metrics(self) -> (Vec<Metric>, RsaInput) {
        match self {
            Recipe::Codebook | Recipe::Purity => (Metric::ALL.to_vec(), RsaInput::Complete),
            Recipe::Stimulus => (vec![Metric::Rsa, Metric::Abx], RsaInput::Both),
            Recipe::DistanceShape => (Vec::new(), RsaInput::Both),
        }
    }

    // Column pairs to correlate across cells.
    fn correlations(self) -> &'static [(Column, Column)] {
        match self {
            Recipe::Codebook | Recipe::Purity => {
                &[(("dc", "frame"), ("nmi", "frame")), (("abx", "*"), ("rsa", "complete"))]
            }
            Recipe::Stimulus => &[(("abx", "*"), ("rsa", "complete")), (("abx", "*"), ("rsa", "triplet"))],
            Recipe::DistanceShape => &[],
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("sweep cell {label} (generation seed {seed}) failed: {source}")]
    Cell {
        label: String,
        seed: u64,
        #[source]
        source: Box<CellError>,
    },
    #[error("sweep summary: {0}")]
    Stats(#[from] StatsError),
    #[error("sweep needs at least one codebook size, purity and replicate")]
    EmptyMatrix,
}

#[derive(Debug, thiserror::Error)]
pub enum CellError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Rsa(#[from] RsaError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOptions {
    pub recipe: Recipe,
    /// Channel settings shared by all cells; codebook size, purity and seed
    /// are overridden per cell.
    pub base: ChannelConfig,
    pub codebook_sizes: Vec<u32>,
    pub purities: Vec<f64>,
    pub replicates: usize,
    pub master_seed: u64,
    /// Template for per-cell evaluation; metric selection and seeds are set
    /// by the recipe.
    pub eval: EvalOptions,
    pub span: f64,
}

impl SweepOptions {
    pub fn new(recipe: Recipe) -> Self {
        Self {
            recipe,
            base: ChannelConfig {
                n_phonemes: 8,
                n_speakers: 8,
                n_utterances: 400,
                ..ChannelConfig::default()
            },
            codebook_sizes: recipe.default_codebook_sizes(),
            purities: recipe.default_purities(),
            replicates: 3,
            master_seed: 0,
            eval: EvalOptions::default(),
            span: 0.75,
        }
    }

    pub fn cell_eval_options(&self) -> EvalOptions {
        let (metrics, rsa_input) = self.recipe.metrics();
        let mut eval = self.eval.clone();
        eval.metrics = metrics;
        eval.rsa_input = rsa_input;
        eval.split_seed = derive_seed(self.master_seed, "split");
        eval.sampler_seed = derive_seed(self.master_seed, "sampler");
        if let Some(super::eval::TripleSource::Build(cfg)) = eval.triples.as_mut() {
            cfg.seed = derive_seed(self.master_seed, "triples");
        }
        eval
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub replicate: usize,
    pub label: String,
    pub x: f64,
    pub channel: ChannelConfig,
}

pub fn cell_label(k: u32, purity: f64) -> String {
    format!("K={k};alpha={purity}")
}

/// The configuration matrix in output order: swept value, then replicate.
pub fn cells(opts: &SweepOptions) -> Vec<Cell> {
    let mut out = Vec::new();
    for &k in &opts.codebook_sizes {
        for &purity in &opts.purities {
            for replicate in 0..opts.replicates {
                let x = match opts.recipe {
                    Recipe::Purity => purity,
                    _ => (k as f64).log2(),
                };
                out.push(Cell {
                    index: out.len(),
                    replicate,
                    label: cell_label(k, purity),
                    x,
                    channel: ChannelConfig {
                        codebook_size: k,
                        purity,
                        seed: derive_seed(opts.master_seed, &format!("synth.{replicate}")),
                        ..opts.base.clone()
                    },
                });
            }
        }
    }
    out
}

fn distance_shape(cell: &Cell, eval: &EvalOptions) -> Result<Vec<MetricValue>, CellError> {
    let corpus = generate(&cell.channel)?.utterances;
    let sampler = PairSampler::budgeted(eval.pair_budget, eval.sampler_seed);
    let mut vocab = Vocab::new();
    let mut out = Vec::new();
    for (kind, stimuli) in [
        ("complete", complete_stimuli(&corpus, &mut vocab, eval.keep_silence)),
        ("triplet", triplet_stimuli(&extract_segments(&corpus), &mut vocab)),
    ] {
        let d = rsa_distances(&stimuli.codes, &stimuli.references, &sampler)?.distances_a;
        for (metric, value) in [("skew", skewness(&d)?), ("kurtosis", excess_kurtosis(&d)?)] {
            out.push(MetricValue { metric: metric.into(), input_kind: kind.into(), n: d.len() as u64, value });
        }
    }
    Ok(out)
}

fn run_cell(cell: &Cell, recipe: Recipe, eval: &EvalOptions) -> Result<Vec<MetricValue>, CellError> {
    match recipe {
        Recipe::DistanceShape => distance_shape(cell, eval),
        _ => Ok(evaluate(&generate(&cell.channel)?.utterances, eval)?),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub cells: Vec<(Cell, Vec<MetricValue>)>,
    /// Rows with an empty run id: per-cell values first, then summaries.
    pub rows: Vec<ReportRow>,
}

impl SweepResult {
    /// Per-cell values of one metric as a series with `input_kind` groups.
    pub fn series(&self, metric: &str) -> MetricSeries {
        let mut s = MetricSeries::default();
        for (cell, values) in &self.cells {
            for v in values.iter().filter(|v| v.metric == metric) {
                s.push(cell.x, v.value, v.input_kind.clone());
            }
        }
        s
    }

    /// Values of (metric, input_kind) in cell order; `*` matches any kind.
    pub fn column(&self, metric: &str, input_kind: &str) -> Vec<f64> {
        self.cells
            .iter()
            .filter_map(|(_, vs)| {
                vs.iter()
                    .find(|v| v.metric == metric && (input_kind == "*" || v.input_kind == input_kind))
                    .map(|v| v.value)
            })
            .collect()
    }
}

/// Runs every cell (in parallel) and appends LOESS, correlation and
/// across-replicate summaries. Output is independent of thread count.
pub fn run_sweep(opts: &SweepOptions) -> Result<SweepResult, SweepError> {
    let matrix = cells(opts);
    if matrix.is_empty() {
        return Err(SweepError::EmptyMatrix);
    }
    let eval = opts.cell_eval_options();
    log::info!("sweep: {} cells", matrix.len());
    let results: Vec<Vec<MetricValue>> = matrix
        .par_iter()
        .map(|cell| {
            let values = run_cell(cell, opts.recipe, &eval).map_err(|e| SweepError::Cell {
                label: cell.label.clone(),
                seed: cell.channel.seed,
                source: Box::new(e),
            })?;
            log::info!("cell {} seed {} done", cell.label, cell.channel.seed);
            Ok(values)
        })
        .collect::<Result<_, SweepError>>()?;
    let cells: Vec<(Cell, Vec<MetricValue>)> = matrix.into_iter().zip(results).collect();

    let mut rows = Vec::new();
    for (cell, values) in &cells {
        for v in values {
            rows.push(ReportRow {
                run_id: String::new(),
                metric: v.metric.clone(),
                input_kind: v.input_kind.clone(),
                config: cell.label.clone(),
                seed: cell.channel.seed,
                n: v.n,
                value: v.value,
            });
        }
    }
    let mut result = SweepResult { cells, rows };
    let summary = summarize(&result, opts)?;
    result.rows.extend(summary);
    Ok(result)
}

fn summary_row(metric: String, input_kind: &str, config: String, seed: u64, n: usize, value: f64) -> ReportRow {
    ReportRow { run_id: String::new(), metric, input_kind: input_kind.to_owned(), config, seed, n: n as u64, value }
}

fn summarize(result: &SweepResult, opts: &SweepOptions) -> Result<Vec<ReportRow>, SweepError> {
    let seed = opts.master_seed;
    let mut rows = Vec::new();
    // Label of the first cell at each x, for naming summary rows.
    let mut label_at: BTreeMap<u64, &str> = BTreeMap::new();
    for (cell, _) in &result.cells {
        label_at.entry(cell.x.to_bits()).or_insert(&cell.label);
    }

    if opts.recipe == Recipe::DistanceShape {
        let mut groups: BTreeMap<(&str, &str, &str), Vec<f64>> = BTreeMap::new();
        let mut order: Vec<(&str, &str, &str)> = Vec::new();
        for (cell, values) in &result.cells {
            for v in values {
                let key = (cell.label.as_str(), v.input_kind.as_str(), v.metric.as_str());
                if !groups.contains_key(&key) {
                    order.push(key);
                }
                groups.entry(key).or_default().push(v.value);
            }
        }
        for key in order {
            let vs = &groups[&key];
            let mean = vs.iter().sum::<f64>() / vs.len() as f64;
            rows.push(summary_row(format!("{}_mean", key.2), key.1, key.0.to_owned(), seed, vs.len(), mean));
        }
        return Ok(rows);
    }

    let (metrics, _) = opts.recipe.metrics();
    for metric in metrics {
        let series = result.series(metric.name());
        if series.points.len() < 3 || series.points.iter().all(|p| p.x == series.points[0].x) {
            continue;
        }
        for (group, curve) in series.smooth(opts.span)? {
            let n = series.points.iter().filter(|p| p.group == group).count();
            for (x, y) in curve {
                let label = label_at.get(&x.to_bits()).copied().unwrap_or_default().to_owned();
                rows.push(summary_row(format!("{metric}_loess"), &group, label, seed, n, y));
            }
        }
    }

    let kind = opts.eval.correlation;
    for &((ma, ka), (mb, kb)) in opts.recipe.correlations() {
        let (xs, ys) = (result.column(ma, ka), result.column(mb, kb));
        if xs.len() != ys.len() || xs.len() < 3 {
            continue;
        }
        let r = match metric_correlation(&xs, &ys, kind) {
            Err(StatsError::ZeroVariance) => {
                log::warn!("correlation {ma}/{mb}: both series constant; skipped");
                continue;
            }
            other => other?,
        };
        let input_kind = if kb == "*" { ka } else { kb };
        rows.push(summary_row(format!("corr_{ma}_{mb}"), input_kind, format!("kind={kind}"), seed, xs.len(), r));
    }
    Ok(rows)
}

/// Correlation of two columns of a finished sweep.
pub fn column_correlation(
    result: &SweepResult,
    a: (&str, &str),
    b: (&str, &str),
    kind: CorrelationKind,
) -> Result<f64, StatsError> {
    metric_correlation(&result.column(a.0, a.1), &result.column(b.0, b.1), kind)
}

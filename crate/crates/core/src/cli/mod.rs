//! The `codeprobe` command line: argument definitions and subcommand
//! runners. Every subcommand that writes a report also writes a JSON run
//! manifest next to it (`<out>.manifest.json`).

pub mod eval;
pub mod manifest;
pub mod plot;
pub mod report;
pub mod sweep;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::abx::{build_triples, extract_segments, format_triples, AbxError, TripleConfig, DEFAULT_MAX_PER_CONTRAST};
use crate::corpus::{self, AlignedUtterance, CodeSequence, CorpusError};
use crate::probe::TrainerConfig;
use crate::quantize::{self, QuantizeError};
use crate::rsa::DEFAULT_PAIR_BUDGET;
use crate::stats::{CorrelationKind, MetricSeries, StatsError};
use crate::synth::{self, ChannelConfig, SynthError};

use eval::{AbxRegime, EvalError, EvalOptions, Metric, RsaInput, TripleSource};
use manifest::RunManifest;
use report::{ReportError, ReportRow};
use sweep::{Recipe, SweepError, SweepOptions};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("triples: {0}")]
    Abx(#[from] AbxError),
    #[error("synth: {0}")]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error("quantize: {0}")]
    Quantize(#[from] QuantizeError),
    #[error("report: {0}")]
    Report(#[from] ReportError),
    #[error("report: {0}")]
    Stats(#[from] StatsError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Parser)]
#[command(name = "codeprobe", version, about = "Evaluate discrete speech codes against phoneme annotations")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "CODEPROBE_JOBS")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a code corpus with NMI, a diagnostic classifier, RSA and ABX.
    Eval(EvalArgs),
    /// Build minimal-pair ABX triples from an aligned corpus.
    Triples(TriplesArgs),
    /// Generate a synthetic aligned corpus.
    Synth(SynthArgs),
    /// Run an experiment recipe over synthetic corpora.
    Sweep(SweepArgs),
    /// Map continuous features to nearest-prototype codes.
    Quantize(QuantizeArgs),
    /// Summarize report CSVs and optionally plot one metric.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Codes file: `utterance_id<TAB>speaker_id<TAB>codes`.
    #[arg(long)]
    pub codes: PathBuf,
    /// Alignment file: `utterance_id<TAB>label<TAB>start<TAB>end` per interval, end exclusive.
    #[arg(long)]
    pub alignments: PathBuf,
    /// Codebook size K (default: largest code + 1).
    #[arg(long)]
    pub codebook_size: Option<u32>,
    /// Alignment frames per code frame.
    #[arg(long, default_value_t = 1)]
    pub frame_factor: usize,
    /// Drop utterances with missing or invalid alignments instead of failing.
    #[arg(long)]
    pub skip_bad: bool,
}

/// Settings of the trained phoneme classifier.
#[derive(Debug, Clone, Args)]
pub struct TrainerArgs {
    #[arg(long, default_value_t = 0.1)]
    pub dc_learning_rate: f64,
    #[arg(long, default_value_t = 200)]
    pub dc_epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub dc_l2: f64,
}

impl TrainerArgs {
    pub fn config(&self) -> TrainerConfig {
        TrainerConfig { learning_rate: self.dc_learning_rate, epochs: self.dc_epochs, l2: self.dc_l2, seed: 0 }
    }

    fn record(&self, m: &mut RunManifest) {
        m.flag("dc_learning_rate", self.dc_learning_rate);
        m.flag("dc_epochs", self.dc_epochs);
        m.flag("dc_l2", self.dc_l2);
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "nmi,dc,rsa,abx")]
    pub metrics: Vec<Metric>,
    /// Precomputed triples file for ABX.
    #[arg(long, conflicts_with = "make_triples")]
    pub triples: Option<PathBuf>,
    /// Build ABX triples from the evaluation half.
    #[arg(long)]
    pub make_triples: bool,
    #[arg(long)]
    pub within_speaker: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_PER_CONTRAST)]
    pub max_per_contrast: usize,
    /// Cap on the total number of built triples.
    #[arg(long)]
    pub max_triples: Option<usize>,
    #[arg(long, value_enum, default_value_t = AbxRegime::Slice)]
    pub abx_regime: AbxRegime,
    /// Keep silence frames as a label.
    #[arg(long)]
    pub keep_silence: bool,
    #[arg(long, default_value_t = DEFAULT_PAIR_BUDGET)]
    pub pair_budget: usize,
    #[arg(long, default_value_t = CorrelationKind::Pearson)]
    pub correlation: CorrelationKind,
    #[arg(long, value_enum, default_value_t = RsaInput::Complete)]
    pub rsa_input: RsaInput,
    #[command(flatten)]
    pub trainer: TrainerArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Value of the report's `config` column (default `K=<codebook size>`).
    #[arg(long)]
    pub config_label: Option<String>,
    /// Report path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TriplesArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value_t = DEFAULT_MAX_PER_CONTRAST)]
    pub max_per_contrast: usize,
    #[arg(long)]
    pub max_triples: Option<usize>,
    #[arg(long)]
    pub within_speaker: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long = "codebook", default_value_t = 256)]
    pub codebook_size: u32,
    #[arg(long, default_value_t = 39)]
    pub phonemes: usize,
    #[arg(long, default_value_t = 32)]
    pub speakers: usize,
    #[arg(long, default_value_t = 0.8)]
    pub purity: f64,
    #[arg(long, default_value_t = 0.0)]
    pub leakage: f64,
    #[arg(long, default_value_t = 2)]
    pub min_frames: usize,
    #[arg(long, default_value_t = 8)]
    pub max_frames: usize,
    #[arg(long, default_value_t = 8)]
    pub min_length: usize,
    #[arg(long, default_value_t = 30)]
    pub max_length: usize,
    #[arg(long, default_value_t = 1000)]
    pub utts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for codes.tsv, alignments.tsv and channel.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

impl SynthArgs {
    pub fn channel(&self, seed: u64) -> ChannelConfig {
        ChannelConfig {
            codebook_size: self.codebook_size,
            n_phonemes: self.phonemes,
            n_speakers: self.speakers,
            purity: self.purity,
            speaker_leakage: self.leakage,
            frames_per_phoneme: (self.min_frames, self.max_frames),
            utterance_length: (self.min_length, self.max_length),
            n_utterances: self.utts,
            seed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(value_enum)]
    pub recipe: Recipe,
    /// Codebook sizes (recipe default when omitted).
    #[arg(long, value_delimiter = ',')]
    pub codebook_sizes: Option<Vec<u32>>,
    /// Channel purities (recipe default when omitted).
    #[arg(long, value_delimiter = ',')]
    pub purities: Option<Vec<f64>>,
    #[arg(long, default_value_t = 8)]
    pub phonemes: usize,
    #[arg(long, default_value_t = 8)]
    pub speakers: usize,
    #[arg(long, default_value_t = 0.0)]
    pub leakage: f64,
    #[arg(long, default_value_t = 400)]
    pub utts: usize,
    /// Generation seeds per configuration.
    #[arg(long, default_value_t = 3)]
    pub replicates: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_PER_CONTRAST)]
    pub max_per_contrast: usize,
    #[arg(long, default_value_t = DEFAULT_PAIR_BUDGET)]
    pub pair_budget: usize,
    #[arg(long, default_value_t = CorrelationKind::Pearson)]
    pub correlation: CorrelationKind,
    #[command(flatten)]
    pub trainer: TrainerArgs,
    /// LOESS span.
    #[arg(long, default_value_t = 0.75)]
    pub span: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write one SVG per metric into this directory.
    #[arg(long)]
    pub plot_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct QuantizeArgs {
    /// Codebook file: `K d` header then K rows.
    #[arg(long)]
    pub codebook: PathBuf,
    /// Feature file: `utterance_id<TAB>speaker_id` blocks of frame rows.
    #[arg(long)]
    pub features: PathBuf,
    /// Codes file to write (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write an SVG of `--metric` against the `--x-key` config field.
    #[arg(long, requires = "metric")]
    pub plot: Option<PathBuf>,
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long, default_value = "K")]
    pub x_key: String,
    /// Plot log2 of the x field.
    #[arg(long)]
    pub log2_x: bool,
    #[arg(long, default_value_t = 0.75)]
    pub span: f64,
}

/// Parses arguments from the process and runs.
pub fn main_with_args(cli: Cli) -> Result<(), CliError> {
    let jobs = cli.jobs.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} worker threads: {e}")))?;
    let effective = pool.current_num_threads();
    pool.install(|| run(cli.command, effective))
}

/// Runs one subcommand on the current rayon pool.
pub fn run(command: Command, jobs: usize) -> Result<(), CliError> {
    let started = Instant::now();
    let (manifest, out, body) = match command {
        Command::Eval(a) => cmd_eval(&a)?,
        Command::Triples(a) => cmd_triples(&a)?,
        Command::Synth(a) => return cmd_synth(&a, jobs, started),
        Command::Sweep(a) => cmd_sweep(&a)?,
        Command::Quantize(a) => cmd_quantize(&a)?,
        Command::Report(a) => cmd_report(&a)?,
    };
    emit(manifest, out.as_deref(), &body, jobs, started)
}

fn emit(mut manifest: RunManifest, out: Option<&Path>, body: &str, jobs: usize, started: Instant) -> Result<(), CliError> {
    manifest.execution.jobs = jobs;
    manifest.execution.duration_secs = started.elapsed().as_secs_f64();
    match out {
        Some(path) => {
            write_file(path, body)?;
            write_file(&manifest_path(path), &manifest.to_json())?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes()).map_err(io_err(Path::new("<stdout>")))?;
        }
    }
    Ok(())
}

/// `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, body).map_err(io_err(path))
}

fn text(bytes: Vec<u8>, path: &Path) -> Result<String, CliError> {
    String::from_utf8(bytes).map_err(|_| CliError::Usage(format!("{}: not valid UTF-8", path.display())))
}

/// Reads, hashes and joins the codes and alignment files.
fn load_corpus(args: &CorpusArgs, manifest: &mut RunManifest) -> Result<Vec<AlignedUtterance>, CliError> {
    let codes_text = text(manifest.input("codes", &args.codes).map_err(io_err(&args.codes))?, &args.codes)?;
    let align_text =
        text(manifest.input("alignments", &args.alignments).map_err(io_err(&args.alignments))?, &args.alignments)?;
    let codes_src = args.codes.display().to_string();
    let mut codes = corpus::parse_codes(&codes_text, args.codebook_size.unwrap_or(u32::MAX), &codes_src)?;
    if args.codebook_size.is_none() {
        let k = codes.iter().flat_map(|c| c.codes.iter()).max().map_or(1, |&m| m + 1);
        codes.iter_mut().for_each(|c| c.codebook_size = k);
    }
    let alignments = corpus::parse_alignments(&align_text, args.frame_factor, &args.alignments.display().to_string())?;
    let utts = corpus::join(codes, &alignments, args.skip_bad)?;
    if utts.len() < 2 {
        return Err(CliError::Usage(format!("need at least 2 aligned utterances, found {}", utts.len())));
    }
    manifest.flag("frame_factor", args.frame_factor);
    manifest.flag("skip_bad", args.skip_bad);
    manifest.flag("codebook_size", utts[0].code_sequence.codebook_size);
    Ok(utts)
}

fn with_run_id(rows: Vec<ReportRow>, run_id: &str) -> Vec<ReportRow> {
    rows.into_iter().map(|r| ReportRow { run_id: run_id.to_owned(), ..r }).collect()
}

type Output = (RunManifest, Option<PathBuf>, String);

pub fn cmd_eval(a: &EvalArgs) -> Result<Output, CliError> {
    let mut m = RunManifest::new("eval");
    let utts = load_corpus(&a.corpus, &mut m)?;
    let k = utts[0].code_sequence.codebook_size;
    let mut metrics = a.metrics.clone();
    metrics.sort();
    metrics.dedup();
    let wants_abx = metrics.contains(&Metric::Abx);

    let triples = match (&a.triples, a.make_triples) {
        (Some(path), _) => Some(TripleSource::File(text(m.input("triples", path).map_err(io_err(path))?, path)?)),
        (None, true) => Some(TripleSource::Build(TripleConfig {
            max_per_contrast: a.max_per_contrast,
            seed: m.seed(a.seed, "triples"),
            within_speaker: a.within_speaker,
            max_total: a.max_triples,
        })),
        (None, false) if wants_abx => return Err(EvalError::MissingTriples.into()),
        (None, false) => None,
    };
    let opts = EvalOptions {
        metrics: metrics.clone(),
        keep_silence: a.keep_silence,
        split_seed: m.seed(a.seed, "split"),
        sampler_seed: m.seed(a.seed, "sampler"),
        pair_budget: a.pair_budget,
        correlation: a.correlation,
        rsa_input: a.rsa_input,
        trainer: a.trainer.config(),
        triples,
        abx_regime: a.abx_regime,
    };
    a.trainer.record(&mut m);
    m.flag("metrics", metrics.iter().map(|x| x.name()).collect::<Vec<_>>().join(","));
    m.flag("keep_silence", a.keep_silence);
    m.flag("pair_budget", a.pair_budget);
    m.flag("correlation", a.correlation);
    m.flag("rsa_input", format!("{:?}", a.rsa_input).to_lowercase());
    m.flag("abx_regime", a.abx_regime.input_kind());
    if a.make_triples {
        m.flag("make_triples", true);
        m.flag("max_per_contrast", a.max_per_contrast);
        m.flag("within_speaker", a.within_speaker);
        m.flag("max_triples", a.max_triples.map_or("none".to_owned(), |n| n.to_string()));
    }
    let config = a.config_label.clone().unwrap_or_else(|| format!("K={k}"));
    m.flag("config", &config);

    let values = eval::evaluate(&utts, &opts)?;
    let run_id = m.seal().to_owned();
    let rows = values
        .into_iter()
        .map(|v| ReportRow {
            run_id: run_id.clone(),
            metric: v.metric,
            input_kind: v.input_kind,
            config: config.clone(),
            seed: a.seed,
            n: v.n,
            value: v.value,
        })
        .collect::<Vec<_>>();
    Ok((m, a.out.clone(), report::rows_to_string(&rows)))
}

pub fn cmd_triples(a: &TriplesArgs) -> Result<Output, CliError> {
    let mut m = RunManifest::new("triples");
    let utts = load_corpus(&a.corpus, &mut m)?;
    let cfg = TripleConfig {
        max_per_contrast: a.max_per_contrast,
        seed: m.seed(a.seed, "triples"),
        within_speaker: a.within_speaker,
        max_total: a.max_triples,
    };
    m.flag("max_per_contrast", a.max_per_contrast);
    m.flag("within_speaker", a.within_speaker);
    m.flag("max_triples", a.max_triples.map_or("none".to_owned(), |n| n.to_string()));
    let set = build_triples(&extract_segments(&utts), &cfg)?;
    m.seal();
    Ok((m, a.out.clone(), format_triples(&set)?))
}

fn cmd_synth(a: &SynthArgs, jobs: usize, started: Instant) -> Result<(), CliError> {
    let mut m = RunManifest::new("synth");
    let channel = a.channel(a.seed);
    m.seeds.insert("master".into(), a.seed);
    m.flag("channel", serde_json::to_string(&channel).expect("config serializes"));
    let corpus = synth::generate(&channel)?;
    corpus.write(&a.out_dir)?;
    m.seal();
    m.execution.jobs = jobs;
    m.execution.duration_secs = started.elapsed().as_secs_f64();
    write_file(&a.out_dir.join("manifest.json"), &m.to_json())
}

pub fn sweep_options(a: &SweepArgs) -> SweepOptions {
    let mut o = SweepOptions::new(a.recipe);
    if let Some(k) = &a.codebook_sizes {
        o.codebook_sizes = k.clone();
    }
    if let Some(p) = &a.purities {
        o.purities = p.clone();
    }
    o.base.n_phonemes = a.phonemes;
    o.base.n_speakers = a.speakers;
    o.base.speaker_leakage = a.leakage;
    o.base.n_utterances = a.utts;
    o.replicates = a.replicates;
    o.master_seed = a.seed;
    o.span = a.span;
    o.eval.pair_budget = a.pair_budget;
    o.eval.correlation = a.correlation;
    o.eval.trainer = a.trainer.config();
    o.eval.triples = Some(TripleSource::Build(TripleConfig { max_per_contrast: a.max_per_contrast, ..Default::default() }));
    o
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<Output, CliError> {
    let opts = sweep_options(a);
    let mut m = RunManifest::new("sweep");
    m.flag("recipe", a.recipe.name());
    m.flag("codebook_sizes", format!("{:?}", opts.codebook_sizes));
    m.flag("purities", format!("{:?}", opts.purities));
    m.flag("base", serde_json::to_string(&opts.base).expect("config serializes"));
    m.flag("replicates", opts.replicates);
    m.flag("max_per_contrast", a.max_per_contrast);
    m.flag("pair_budget", a.pair_budget);
    m.flag("correlation", a.correlation);
    m.flag("span", a.span);
    a.trainer.record(&mut m);
    for name in ["split", "sampler", "triples"] {
        m.seed(a.seed, name);
    }
    let result = sweep::run_sweep(&opts)?;
    let run_id = m.seal().to_owned();
    if let Some(dir) = &a.plot_dir {
        for metric in ["nmi", "dc", "rsa", "abx", "skew", "kurtosis"] {
            let series = result.series(metric);
            if series.points.is_empty() {
                continue;
            }
            let curves = series.smooth(a.span).unwrap_or_default();
            let x_label = if a.recipe == Recipe::Purity { "purity" } else { "log2 K" };
            let svg = plot::render_svg(&series, &curves, &plot::PlotSpec { title: metric, x_label, y_label: metric });
            write_file(&dir.join(format!("{}-{metric}.svg", a.recipe.name())), &svg)?;
        }
    }
    Ok((m, a.out.clone(), report::rows_to_string(&with_run_id(result.rows, &run_id))))
}

pub fn cmd_quantize(a: &QuantizeArgs) -> Result<Output, CliError> {
    let mut m = RunManifest::new("quantize");
    let book_text = text(m.input("codebook", &a.codebook).map_err(io_err(&a.codebook))?, &a.codebook)?;
    let feat_text = text(m.input("features", &a.features).map_err(io_err(&a.features))?, &a.features)?;
    let book = quantize::parse_codebook(&book_text, &a.codebook.display().to_string())?;
    let feats = quantize::parse_features(&feat_text, &a.features.display().to_string())?;
    let codes: Vec<CodeSequence> = quantize::quantize_sequences(&feats, &book)?;
    m.seal();
    Ok((m, a.out.clone(), corpus::format_codes(&codes)))
}

pub fn cmd_report(a: &ReportArgs) -> Result<Output, CliError> {
    let mut m = RunManifest::new("report");
    let mut rows = Vec::new();
    for path in &a.inputs {
        let bytes = m.input("report", path).map_err(io_err(path))?;
        rows.extend(report::read_rows(bytes.as_slice())?);
    }
    m.flag("x_key", &a.x_key);
    m.flag("log2_x", a.log2_x);
    if let (Some(plot_path), Some(metric)) = (&a.plot, &a.metric) {
        let mut series = MetricSeries::default();
        for r in rows.iter().filter(|r| &r.metric == metric) {
            let fields = report::config_fields(&r.config);
            let Some(x) = fields.get(a.x_key.as_str()).and_then(|v| v.parse::<f64>().ok()) else {
                continue;
            };
            series.push(if a.log2_x { x.log2() } else { x }, r.value, r.input_kind.clone());
        }
        if series.points.is_empty() {
            return Err(CliError::Usage(format!("no {metric} rows with a numeric {} config field", a.x_key)));
        }
        let curves = series.smooth(a.span).unwrap_or_default();
        let x_label = if a.log2_x { format!("log2 {}", a.x_key) } else { a.x_key.clone() };
        let svg = plot::render_svg(&series, &curves, &plot::PlotSpec { title: metric, x_label: &x_label, y_label: metric });
        write_file(plot_path, &svg)?;
    }
    m.seal();
    Ok((m, a.out.clone(), report::summary_to_string(&report::summarize(&rows))))
}

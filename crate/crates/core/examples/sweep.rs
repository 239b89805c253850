//! Codebook-size sweep with LOESS summaries and an SVG plot.
//!
//! cargo run --release --example sweep -- /tmp/abx.svg

use codeprobe::cli::plot::{render_svg, PlotSpec};
use codeprobe::cli::sweep::{run_sweep, Recipe, SweepOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut opts = SweepOptions::new(Recipe::Codebook);
    opts.base.n_utterances = 200;
    let result = run_sweep(&opts)?;
    for row in result.rows.iter().filter(|r| r.metric.ends_with("_loess") || r.metric.starts_with("corr_")) {
        println!("{:12} {:14} {:18} {:.4}", row.metric, row.input_kind, row.config, row.value);
    }
    if let Some(path) = std::env::args().nth(1) {
        let series = result.series("abx");
        let svg = render_svg(&series, &series.smooth(opts.span)?, &PlotSpec { title: "ABX accuracy", x_label: "log2 K", y_label: "accuracy" });
        std::fs::write(&path, svg)?;
        println!("wrote {path}");
    }
    Ok(())
}

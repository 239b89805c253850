//! Shape of edit-distance distributions for short and long stimuli.

use codeprobe::cli::sweep::{run_sweep, Recipe, SweepOptions};
use codeprobe::stats::{excess_kurtosis, loess, skewness};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut opts = SweepOptions::new(Recipe::DistanceShape);
    opts.replicates = 1;
    let result = run_sweep(&opts)?;
    for row in result.rows.iter().filter(|r| r.metric.ends_with("_mean")) {
        println!("{:14} {:8} {:18} {:8.3}", row.metric, row.input_kind, row.config, row.value);
    }

    let xs: Vec<f64> = (0..40).map(|i| i as f64 / 4.0).collect();
    let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, (x / 2.0).sin() + 0.1 * (x * 7.0).cos())).collect();
    let fit = loess(&pts, 0.3)?;
    println!("loess at x=5: {:.4}", fit[20].1);
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    println!("skew {:.4}, excess kurtosis {:.4}", skewness(&ys)?, excess_kurtosis(&ys)?);
    Ok(())
}

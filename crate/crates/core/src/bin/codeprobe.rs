use clap::Parser;
use codeprobe::cli::{main_with_args, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = main_with_args(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

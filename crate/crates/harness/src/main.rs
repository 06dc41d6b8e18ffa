use clap::Parser;
use spantree::config::{ExperimentConfig, Kind};
use spantree::{run_experiment, EXIT_USAGE};
use std::path::PathBuf;
use std::process::ExitCode;

/// Run one spanning-tree experiment and write its results.
#[derive(Parser, Debug)]
#[command(name = "spantree", version)]
struct Cli {
    kind: Kind,
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `out` in the config, default `results`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "SPANTREE_WORKERS")]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("spantree: {e}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}

fn run(cli: Cli) -> spantree::Result<i32> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(spantree::Error::Config("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| spantree::Error::Config(e.to_string()))?;
    }
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    let out = cli.out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("results"));
    let summary = run_experiment(cli.kind, &cfg, &out)?;
    let m = &summary.manifest;
    for f in &m.files {
        println!("wrote {}", f.display());
    }
    println!("wrote {}", summary.manifest_path.display());
    if let Some(c) = &m.check {
        println!("{}: {} ({})", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
    }
    Ok(summary.exit_code())
}

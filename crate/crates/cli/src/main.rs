use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sbdcal::config::RunConfig;
use sbdcal::Result;
use sbdcal_cli::{cmd_calibrate, cmd_generate, cmd_report, cmd_simulate, cmd_sweep, cmd_train, error_line, Context};

#[derive(Parser)]
#[command(name = "sbdcal", version, about = "Schottky diode mobility calibration pipeline")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Full-size defaults (5,891 curves, 2,000-epoch cap).
    Full,
    /// 2,000 curves with short epoch caps.
    Desk,
}

#[derive(Args)]
struct GlobalArgs {
    /// JSON run config; missing keys take preset defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base config when no --config is given.
    #[arg(long, global = true, value_enum, default_value = "full")]
    preset: Preset,
    /// Overrides `master_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `out_dir`.
    #[arg(long, global = true, env = "SBDCAL_OUT")]
    out: Option<PathBuf>,
    /// Overrides `threads`.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides `train.lambdas` with a single value.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Overrides the training augmentation SNR (`autoencoder.snr_db` and `head.snr_db`).
    #[arg(long, global = true)]
    snr_db: Option<f64>,
    /// Overrides `sampling.n_samples`.
    #[arg(long, global = true)]
    n_samples: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample parameters, simulate and write the dataset.
    Generate,
    /// Train the autoencoder and one head per configured lambda.
    Train,
    /// Train one head per sweep-grid lambda and tabulate validation losses.
    Sweep,
    /// Calibrate on the synthetic cohort and verify by re-simulation.
    Calibrate,
    /// Summarize stored artifacts into tables and a box plot.
    Report,
    /// Simulate one curve from a parameter JSON file.
    Simulate {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Print the resolved config as JSON.
    Config,
}

fn resolve(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(path) => RunConfig::load(path)?,
        None => match g.preset {
            Preset::Full => RunConfig::default(),
            Preset::Desk => RunConfig::desk(),
        },
    };
    if let Some(seed) = g.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &g.out {
        cfg.out_dir = Some(out.clone());
    }
    if let Some(t) = g.threads {
        cfg.threads = Some(t);
    }
    if let Some(l) = g.lambda {
        cfg.train.lambdas = vec![l];
    }
    if let Some(snr) = g.snr_db {
        let snr = (snr != f64::INFINITY).then_some(snr);
        cfg.autoencoder.snr_db = snr;
        cfg.head.snr_db = snr;
    }
    if let Some(n) = g.n_samples {
        cfg.sampling.n_samples = n;
    }
    let cfg = cfg.resolve();
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = resolve(&cli.global)?;
    if let Some(t) = cfg.threads {
        // No global pool exists before this point.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let ctx = Context::new(cfg)?;
    let written = match cli.command {
        Command::Generate => cmd_generate(&ctx)?,
        Command::Train => cmd_train(&ctx)?,
        Command::Sweep => cmd_sweep(&ctx)?,
        Command::Calibrate => cmd_calibrate(&ctx)?,
        Command::Report => cmd_report(&ctx)?,
        Command::Simulate { params, output } => vec![cmd_simulate(&ctx, &params, &output)?],
        Command::Config => {
            print!("{}", ctx.config.to_json());
            return Ok(());
        }
    };
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::FAILURE
        }
    }
}

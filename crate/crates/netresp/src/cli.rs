//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{self, Context};
use crate::config::{parse_rk, RunConfig};
use crate::error::{CliError, Result, EXIT_OK, EXIT_VALIDATION};
use crate::output::prepare_out_dir;

#[derive(Debug, Parser)]
#[command(name = "netresp", version, about = "Bayesian network-response regression on brain connectivity data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; omitted sections use the simulation presets.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Create the output directory if it is missing.
    #[arg(long, global = true)]
    pub create: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic scenario.
    Simulate,
    /// Build a held-out mask for a dataset.
    Mask,
    /// Run the main sampler.
    Fit {
        /// Latent dimension R = K, or a range `A..B` fitted one after another.
        #[arg(long, value_parser = parse_rk_arg)]
        rk: Option<RkRange>,
        /// Continue from the checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
        #[arg(long, hide = true)]
        halt_after: Option<u64>,
    },
    /// Fit the per-edge baseline.
    FitBaseline,
    /// Score held-out entries for both methods.
    Evaluate,
    /// Posterior predictive checks of network statistics.
    Ppc,
    /// Simulate, mask, fit both methods and evaluate in one run.
    ReproduceSimulation {
        #[arg(long)]
        resume: bool,
        #[arg(long, hide = true)]
        halt_after: Option<u64>,
    },
}

#[derive(Debug, Clone)]
pub struct RkRange(pub Vec<usize>);

fn parse_rk_arg(s: &str) -> std::result::Result<RkRange, String> {
    parse_rk(s).map(RkRange)
}

fn build_context(cli: &Cli) -> Result<Context> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    let ctx = Context::new(cfg, &cli.out);
    ctx.config.validate()?;
    prepare_out_dir(&ctx.out, cli.create)?;
    Ok(ctx)
}

fn init_pool(workers: usize) {
    if workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
            log::debug!("thread pool already initialised: {e}");
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut ctx = build_context(&cli)?;
    init_pool(ctx.config.workers);
    match cli.command {
        Command::Simulate => commands::cmd_simulate(&ctx),
        Command::Mask => commands::cmd_mask(&ctx),
        Command::Fit { rk, resume, halt_after } => {
            ctx.rk = rk.map(|r| r.0);
            ctx.resume = resume;
            ctx.halt_after = halt_after;
            if !commands::cmd_fit(&ctx)? {
                log::warn!("stopped early; rerun with --resume to continue");
            }
            Ok(())
        }
        Command::FitBaseline => commands::cmd_fit_baseline(&ctx),
        Command::Evaluate => commands::cmd_evaluate(&ctx),
        Command::Ppc => commands::cmd_ppc(&ctx),
        Command::ReproduceSimulation { resume, halt_after } => {
            ctx.resume = resume;
            ctx.halt_after = halt_after;
            if commands::cmd_reproduce(&ctx)?.is_none() {
                log::warn!("stopped early; rerun with --resume to continue");
            }
            Ok(())
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            report(&e);
            e.exit_code()
        }
    }
}

fn report(e: &CliError) {
    log::error!("{e}");
    eprintln!("error: {e}");
}

//! `phalanx` - evaluate and optimize phalanx length ratios of a five-finger
//! robotic hand by potential-dexterity metrics.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use phalanx_core::config::RunConfig;

mod commands;

#[derive(Parser)]
#[command(
    name = "phalanx",
    about = "Phalanx-length design search by manipulability, workspace, overlap, and sensitivity",
    version
)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Coarse preset (thumb 15 deg, fingers 9 deg) for quick runs.
    #[arg(long, global = true)]
    coarse: bool,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the active DH tables, joint ranges, geometry, and base poses.
    PrintModel,
    /// Workspace volumes of the equal-length reference designs across the
    /// resolution ladder and voxel sizes.
    ResolutionStudy,
    /// Compute (or load from cache) metric records for every feasible design.
    Sweep {
        /// Also sweep the relaxed (unordered) normalization sets.
        #[arg(long)]
        relaxed: bool,
    },
    /// Run the pair search for one weight vector and export the results.
    Optimize {
        /// Weights c1,c2,c3 (rescaled to sum to 1).
        #[arg(long, value_delimiter = ',', num_args = 3, default_value = "0.33,0.33,0.33")]
        weights: Vec<f64>,
    },
    /// Run every configured weight case against one shared record store.
    Cases,
    /// Export one design's voxel set as CSV and point cloud.
    ExportWorkspace {
        /// Chain: thumb or finger.
        #[arg(long)]
        chain: String,
        /// Design triple p,m,d in hundredths (e.g. 17,17,17).
        #[arg(long, value_delimiter = ',', num_args = 3)]
        design: Vec<u32>,
        /// Finger instance for finger chains.
        #[arg(long, default_value = "index")]
        finger: String,
    },
    /// Recompute a sample of cached records and compare bit-for-bit.
    VerifyCache {
        /// Fraction of entries to recheck.
        #[arg(long, default_value_t = 0.1)]
        fraction: f64,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    // The echoed configuration is the file-resolved one; --jobs/--out/--coarse
    // are runtime knobs layered on top for execution.
    let file_config = match &cli.config {
        Some(path) => RunConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => RunConfig::default(),
    };

    let mut run_config = file_config.clone();
    if cli.coarse {
        run_config.apply_coarse();
    }
    if let Some(out) = &cli.out {
        run_config.out_dir = out.clone();
    }
    if let Some(jobs) = cli.jobs {
        run_config.jobs = jobs;
    }

    let mut echo_config = file_config;
    if cli.coarse {
        echo_config.apply_coarse();
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run_config.jobs)
        .build()
        .context("building worker pool")?;

    pool.install(|| match cli.command {
        Command::PrintModel => commands::print_model(&run_config),
        Command::ResolutionStudy => commands::resolution_study(&run_config, &echo_config),
        Command::Sweep { relaxed } => commands::sweep(&run_config, relaxed),
        Command::Optimize { weights } => {
            if weights.len() != 3 {
                bail!("--weights needs exactly three values");
            }
            commands::optimize(&run_config, &echo_config, [weights[0], weights[1], weights[2]])
        }
        Command::Cases => commands::cases(&run_config, &echo_config),
        Command::ExportWorkspace { chain, design, finger } => {
            if design.len() != 3 {
                bail!("--design needs exactly three values");
            }
            commands::export_workspace(&run_config, &chain, [design[0], design[1], design[2]], &finger)
        }
        Command::VerifyCache { fraction } => commands::verify_cache(&run_config, fraction),
    })
}

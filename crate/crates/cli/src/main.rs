use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use latentform_cli::commands::{self, Algo};
use latentform_cli::config::SEED_ENV;

#[derive(Parser)]
#[command(name = "latentform", version, about = "Latent shape parameterization and optimization pipeline")]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the deformed-shape corpus with SDF samples.
    GenTrainset {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the auto-decoder on a corpus.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract the mesh of a training shape or of an explicit latent code.
    Reconstruct {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, required_unless_present = "latent", conflicts_with = "latent")]
        id: Option<String>,
        /// Comma-separated code, inline or in a file.
        #[arg(long)]
        latent: Option<String>,
        #[arg(long, default_value_t = 64)]
        res: usize,
        /// Rescale the mesh to this volume.
        #[arg(long)]
        volume: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shapes between two training codes.
    Interpolate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// Number of intermediate steps.
        #[arg(long = "N")]
        big_n: usize,
        /// Steps to extract, e.g. 1,3,7.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 64)]
        res: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Transfer a deformation: deformed - base + target.
    Arithmetic {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        deformed: String,
        #[arg(long)]
        base: String,
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 64)]
        res: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// 2-D t-SNE embedding of the trained codes.
    Tsne {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        perplexity: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
        /// Overridden by LF_SEED.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Minimize the mixing objective over the latent space.
    Optimize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global()?;
    }
    match cli.command {
        Command::GenTrainset { config, out } => {
            commands::gen_trainset(&config, &out)?;
        }
        Command::Train { manifest, config, out } => {
            commands::train_model(&manifest, &config, &out)?;
        }
        Command::Reconstruct {
            model,
            id,
            latent,
            res,
            volume,
            out,
        } => {
            commands::reconstruct_shape(&model, id.as_deref(), latent.as_deref(), res, volume, &out)?;
        }
        Command::Interpolate {
            model,
            a,
            b,
            big_n,
            n,
            res,
            out,
        } => {
            commands::interpolate_shapes(&model, &a, &b, big_n, &n, res, &out)?;
        }
        Command::Arithmetic {
            model,
            deformed,
            base,
            target,
            res,
            out,
        } => {
            commands::arithmetic_shape(&model, &deformed, &base, &target, res, &out)?;
        }
        Command::Tsne {
            model,
            out,
            perplexity,
            iterations,
            seed,
        } => {
            let seed = match std::env::var(SEED_ENV) {
                Ok(v) => v.trim().parse()?,
                Err(_) => seed,
            };
            commands::tsne_plot(&model, &out, perplexity, iterations, seed)?;
        }
        Command::Optimize { model, algo, config, out } => {
            commands::optimize(&model, algo, &config, &out)?;
        }
    }
    Ok(())
}

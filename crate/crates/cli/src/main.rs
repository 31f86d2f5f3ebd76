mod bench;
mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde_json::json;
use tensor_tree::data::{generate, Generator, SyntheticSpec};
use tensor_tree::npy::save_npy;
use tensor_tree::Model64;

use config::RunConfig;
use run::{classify, data, fit_model, load_tensor, model_name, score, usage, Failure};

/// Tensor-input regression trees: synthetic data, fitting, prediction and
/// benchmark sweeps.
#[derive(Parser)]
#[command(name = "tt", version)]
struct Cli {
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true, env = "TT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset as X.npy plus y.npy (scalar) or Y.npy (tensor).
    Synth {
        /// fig5_interaction, prune_fn, table2_linear, table2_nonlinear,
        /// table2_exact_cp or table2_exact_tucker.
        #[arg(long)]
        generator: String,
        #[arg(long)]
        n: usize,
        /// Gaussian variance or uniform half-width, depending on the generator.
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the model described by a run config and write it as JSON.
    Fit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Predict with a saved model; reports metrics when targets are given.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: Option<PathBuf>,
        /// Predictions, NPY.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a parameter sweep and write one CSV row per cell.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the base config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn synth(generator: &str, n: usize, noise: Option<f64>, seed: u64, out: &Path) -> Result<(), Failure> {
    let generator: Generator = generator.parse().map_err(usage)?;
    let spec = SyntheticSpec {
        generator,
        n,
        noise,
        seed,
    };
    let d = generate::<f64>(&spec).map_err(classify)?;
    std::fs::create_dir_all(out)
        .with_context(|| format!("cannot create {}", out.display()))
        .map_err(data)?;
    let y_name = if d.is_scalar() { "y.npy" } else { "Y.npy" };
    save_npy(out.join("X.npy"), &d.x).map_err(classify)?;
    save_npy(out.join(y_name), &d.y).map_err(classify)?;
    println!(
        "{}",
        json!({
            "generator": generator.name(),
            "x": out.join("X.npy"),
            "y": out.join(y_name),
            "x_shape": d.x.shape(),
            "y_shape": d.y.shape(),
        })
    );
    Ok(())
}

fn fit(config: &Path, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(config).map_err(usage)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(usage)?;
    let x_path = cfg.x.clone().context("config has no \"x\" path").map_err(usage)?;
    let y_path = cfg.y.clone().context("config has no \"y\" path").map_err(usage)?;
    let x = load_tensor(&x_path)?;
    let y = load_tensor(&y_path)?;
    let model = fit_model(&cfg, &x, &y)?;
    let pred = model.predict(&x).map_err(classify)?;
    let train = score(&y, &pred)?;
    model
        .save(out)
        .map_err(|e| data(anyhow::Error::new(e).context(format!("cannot write {}", out.display()))))?;
    println!(
        "{}",
        json!({ "model": model_name(&model), "n_train": x.n_obs(), "train": train })
    );
    Ok(())
}

fn predict(model: &Path, x: &Path, y: Option<&Path>, out: &Path) -> Result<(), Failure> {
    let m = Model64::load(model)
        .map_err(|e| data(anyhow::Error::new(e).context(format!("cannot load model {}", model.display()))))?;
    let x = load_tensor(x)?;
    let pred = m.predict(&x).map_err(|e| data(e))?;
    save_npy(out, &pred).map_err(classify)?;
    let metrics = match y {
        Some(p) => Some(score(&load_tensor(p)?, &pred)?),
        None => None,
    };
    println!(
        "{}",
        json!({ "predictions": out, "shape": pred.shape(), "metrics": metrics })
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Synth {
            generator,
            n,
            noise,
            seed,
            out,
        } => synth(generator, *n, *noise, *seed, out),
        Command::Fit { config, out, seed } => fit(config, out, *seed),
        Command::Predict { model, x, y, out } => predict(model, x, y.as_deref(), out),
        Command::Bench { config, out, seed } => bench::run(config, out, *seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code() as u8)
        }
    }
}

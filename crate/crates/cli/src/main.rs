//! `lcw`: train LCW networks and verify their statistical properties.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 a verification
//! failed, 3 runtime failure (I/O, data, non-finite loss).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lcw_core::diagnostics::{
    activation_quantiles, layer_profile, quantiles_csv, shift_demo, verify_all,
    DEFAULT_PROBE_SAMPLES, SHIFT_DEMO_SIZE,
};
use lcw_core::harness::{gradcheck_suite, initialized_network, run, GradCheck, TrainConfig};
use lcw_core::{Error, Layer, Rng};

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "lcw",
    version,
    about = "Linearly constrained weights: training and verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the model described by a JSON config.
    Train {
        config: PathBuf,
        /// Output directory for metrics.csv, timing.csv and model.lcw.
        #[arg(long, default_value = "runs/latest")]
        out: PathBuf,
        /// Suppress per-epoch progress lines.
        #[arg(long)]
        quiet: bool,
    },
    /// Run every shift, variance and rate check and print the verdicts.
    VerifyProps {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Monte Carlo draws per check.
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        /// Print the JSON verdict document instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Write per-layer preactivation/gradient statistics and activation
    /// quantiles for the initialized model of a config.
    Profile {
        config: PathBuf,
        #[arg(long, default_value = "profile")]
        out: PathBuf,
        /// Probe batch size, taken from the start of the training split.
        #[arg(long, default_value_t = DEFAULT_PROBE_SAMPLES)]
        samples: usize,
        /// Activation layers (1-based) for the quantile table.
        #[arg(long, value_delimiter = ',', default_value = "1,5,9")]
        layers: Vec<usize>,
        /// Neurons per selected layer.
        #[arg(long, default_value_t = 20)]
        neurons: usize,
    },
    /// Write the W ~ U(-1,1), A ~ U(0,1) preactivation grid and per-row means.
    ShiftDemo {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = SHIFT_DEMO_SIZE)]
        size: usize,
        #[arg(long, default_value = "shift-demo")]
        out: PathBuf,
    },
    /// Finite-difference check of every backward pass.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
}

enum Failure {
    Usage(String),
    Verify,
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))
}

fn train(config: &Path, out: &Path, quiet: bool) -> Result<(), Failure> {
    let cfg = TrainConfig::from_file(config)?;
    let outcome = run(&cfg, out, |m| {
        if !quiet {
            println!(
                "epoch {:>4}  lr {:.5}  train loss {:.4} acc {:.4}  test loss {:.4} acc {:.4}",
                m.epoch, m.lr, m.train_loss, m.train_accuracy, m.test_loss, m.test_accuracy
            );
        }
    })?;
    let last = outcome.log.last().expect("at least one epoch");
    println!(
        "final train accuracy {:.4}, test accuracy {:.4}; wrote {}",
        last.train_accuracy,
        last.test_accuracy,
        out.display()
    );
    Ok(())
}

fn verify_props(seed: u64, samples: usize, json: bool) -> Result<(), Failure> {
    if samples < 1000 {
        return Err(Failure::Usage("--samples must be at least 1000".into()));
    }
    let doc = verify_all(seed, samples)?;
    if json {
        println!("{}", doc.to_json());
    } else {
        print!("{}", doc.table());
    }
    if doc.all_pass {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn profile(
    config: &Path,
    out: &Path,
    samples: usize,
    layers: &[usize],
    neurons: usize,
) -> Result<(), Failure> {
    let cfg = TrainConfig::from_file(config)?;
    let (train_set, _) = cfg.data.load(cfg.seed)?;
    let mut net = initialized_network(&cfg, &train_set)?;
    let take = samples.min(train_set.len());
    if take == 0 {
        return Err(Failure::Usage("--samples must be positive".into()));
    }
    let (x, y) = train_set.batch(&(0..take).collect::<Vec<_>>());
    let stats = layer_profile(&mut net, &x, Some(&y), &mut Rng::new(cfg.seed).fork(4))?;
    let available = net
        .layers()
        .iter()
        .filter(|l| matches!(l, Layer::Activation(_)))
        .count();
    // preactivation entries of the first linear layer over the probe batch
    let width = stats.layers.first().map_or(0, |l| l.z.count / take);
    let neurons = neurons.min(width);
    let selected: Vec<usize> = layers.iter().copied().filter(|&l| l <= available).collect();
    let quantiles = activation_quantiles(&net, &x, &selected, neurons)?;
    create_dir(out)?;
    write(&out.join("layer_profile.csv"), &stats.to_csv())?;
    write(
        &out.join("activation_quantiles.csv"),
        &quantiles_csv(&quantiles),
    )?;
    let last_hidden = stats.layers.len().saturating_sub(1);
    if let Some(ratio) = stats.grad_variance_ratio(1, last_hidden.max(1)) {
        println!("V(grad z^1) / V(grad z^{last_hidden}) = {ratio:.3e}");
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn shift(seed: u64, size: usize, out: &Path) -> Result<(), Failure> {
    if size < 2 {
        return Err(Failure::Usage("--size must be at least 2".into()));
    }
    let demo = shift_demo(&mut Rng::new(seed), size)?;
    create_dir(out)?;
    write(&out.join("grid.csv"), &demo.grid_csv())?;
    write(&out.join("rows.csv"), &demo.rows_csv())?;
    let within = demo.report.within(4.0);
    println!(
        "{within}/{size} rows within 4 standard errors of the predicted mean; max |error| {:.4}; wrote {}",
        demo.report.max_abs_error,
        out.display()
    );
    Ok(())
}

fn gradcheck(seed: u64, json: bool) -> Result<(), Failure> {
    let checks: Vec<GradCheck> = gradcheck_suite(seed)?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&checks).expect("checks serialize")
        );
    } else {
        println!("{:<28} {:>12} {:>12}  result", "case", "param", "input");
        for c in &checks {
            println!(
                "{:<28} {:>12.3e} {:>12.3e}  {}",
                c.name,
                c.param_error,
                c.input_error,
                if c.pass() { "pass" } else { "FAIL" }
            );
        }
    }
    if checks.iter().all(GradCheck::pass) {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Train { config, out, quiet } => train(&config, &out, quiet),
        Command::VerifyProps {
            seed,
            samples,
            json,
        } => verify_props(seed, samples, json),
        Command::Profile {
            config,
            out,
            samples,
            layers,
            neurons,
        } => profile(&config, &out, samples, &layers, neurons),
        Command::ShiftDemo { seed, size, out } => shift(seed, size, &out),
        Command::Gradcheck { seed, json } => gradcheck(seed, json),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!(
                "error: {msg}\n\nUsage: lcw <COMMAND>\nRun `lcw --help` for the list of commands."
            );
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Verify) => ExitCode::from(EXIT_VERIFY),
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

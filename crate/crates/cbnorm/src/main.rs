//! Thin command-line front end over [`cbnorm::cli`]. Parses flags, merges
//! them over an optional config file, runs the experiment, and exits
//! nonzero when a hard invariant check fails.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cbnorm::cli::{run, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "cbnorm",
    about = "Experiment harness for completely bounded norm constructions",
    version
)]
struct Cli {
    /// Config file to start from; explicit flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for all randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root (defaults to $CBNORM_OUT, then ./runs).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct FormArgs {
    /// Built-in form: scalar, trace:N, or random:N:M.
    #[arg(long)]
    form: Option<String>,
    /// JSON file holding a coefficient tensor.
    #[arg(long)]
    form_file: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Export the line matrices at d = 8 for t^2 = 3 and 2.4 as PGM + CSV.
    Figure1 {
        #[arg(long)]
        d: Option<usize>,
        /// Comma-separated t^2 values.
        #[arg(long, value_delimiter = ',')]
        t2: Option<Vec<f64>>,
    },
    /// Sweep the (d, t^2) grid: sums, sandwich bounds, operator slacks, fit.
    Lines {
        #[arg(long, value_delimiter = ',')]
        d: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        t2: Option<Vec<f64>>,
    },
    /// Lift a witness through the line families and verify the result.
    Lift {
        #[command(flatten)]
        form: FormArgs,
        /// Witness JSON file; a random feasible witness when omitted.
        #[arg(long)]
        witness_file: Option<PathBuf>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        length: Option<usize>,
    },
    /// Search the constrained supremum of |sum u(x_i, y_i)|.
    OsSearch {
        #[command(flatten)]
        form: FormArgs,
        #[arg(long)]
        length: Option<usize>,
        /// standard or loose.
        #[arg(long)]
        flavor: Option<String>,
        /// Pin all weights to this value (1 searches the unweighted sup).
        #[arg(long)]
        fixed_t: Option<f64>,
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// See-saw norm estimates at a list of amplification dimensions.
    Norms {
        #[command(flatten)]
        form: FormArgs,
        #[arg(long, value_delimiter = ',')]
        d: Option<Vec<usize>>,
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Full pipeline: search, truncate, lift, frozen see-saw, Gaussian leg.
    Pipeline {
        #[command(flatten)]
        form: FormArgs,
        #[arg(long)]
        length: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        /// Budget for the lifting dimension.
        #[arg(long)]
        max_d: Option<usize>,
        /// Budget for the Gaussian-leg dimension.
        #[arg(long)]
        max_dp: Option<usize>,
    },
    /// Distillation fidelity curve over resource dimensions 2^k.
    Embezzle {
        /// Target state: psi:D or a Schmidt-state JSON file.
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        k_min: Option<u32>,
        #[arg(long)]
        k_max: Option<u32>,
    },
    /// Monte Carlo estimates: expected norms and the pairing identity.
    Montecarlo {
        /// ht, jp, or both.
        #[arg(long)]
        which: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn merge(cli: Cli) -> Result<ExperimentConfig, cbnorm::Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out_root = Some(out);
    }
    match cli.command {
        Command::Figure1 { d, t2 } => {
            cfg.command = "figure1".into();
            cfg.d = d.or(cfg.d);
            cfg.t2_list = t2.or(cfg.t2_list);
        }
        Command::Lines { d, t2 } => {
            cfg.command = "lines".into();
            cfg.d_list = d.or(cfg.d_list);
            cfg.t2_list = t2.or(cfg.t2_list);
        }
        Command::Lift {
            form,
            witness_file,
            d,
            length,
        } => {
            cfg.command = "lift".into();
            cfg.form = form.form.or(cfg.form);
            cfg.form_file = form.form_file.or(cfg.form_file);
            cfg.witness_file = witness_file.or(cfg.witness_file);
            cfg.d = d.or(cfg.d);
            cfg.length = length.or(cfg.length);
        }
        Command::OsSearch {
            form,
            length,
            flavor,
            fixed_t,
            restarts,
        } => {
            cfg.command = "os-search".into();
            cfg.form = form.form.or(cfg.form);
            cfg.form_file = form.form_file.or(cfg.form_file);
            cfg.length = length.or(cfg.length);
            cfg.flavor = flavor.or(cfg.flavor);
            cfg.fixed_t = fixed_t.or(cfg.fixed_t);
            cfg.restarts = restarts.or(cfg.restarts);
        }
        Command::Norms { form, d, restarts } => {
            cfg.command = "norms".into();
            cfg.form = form.form.or(cfg.form);
            cfg.form_file = form.form_file.or(cfg.form_file);
            cfg.d_list = d.or(cfg.d_list);
            cfg.restarts = restarts.or(cfg.restarts);
        }
        Command::Pipeline {
            form,
            length,
            eps,
            restarts,
            samples,
            max_d,
            max_dp,
        } => {
            cfg.command = "pipeline".into();
            cfg.form = form.form.or(cfg.form);
            cfg.form_file = form.form_file.or(cfg.form_file);
            cfg.length = length.or(cfg.length);
            cfg.eps = eps.or(cfg.eps);
            cfg.restarts = restarts.or(cfg.restarts);
            cfg.samples = samples.or(cfg.samples);
            cfg.max_d = max_d.or(cfg.max_d);
            cfg.max_dp = max_dp.or(cfg.max_dp);
        }
        Command::Embezzle {
            target,
            k_min,
            k_max,
        } => {
            cfg.command = "embezzle".into();
            cfg.target = target.or(cfg.target);
            cfg.k_min = k_min.or(cfg.k_min);
            cfg.k_max = k_max.or(cfg.k_max);
        }
        Command::Montecarlo {
            which,
            n,
            d,
            eps,
            samples,
        } => {
            cfg.command = "montecarlo".into();
            cfg.which = which.or(cfg.which);
            cfg.n = n.or(cfg.n);
            cfg.d = d.or(cfg.d);
            cfg.eps = eps.or(cfg.eps);
            cfg.samples = samples.or(cfg.samples);
        }
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match merge(cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            println!("run directory: {}", outcome.run_dir.display());
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                for f in &outcome.hard_failures {
                    eprintln!("FAILED: {f}");
                }
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

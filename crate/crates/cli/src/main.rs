//! `seqalloc`: experiments, exact solving, optimal ratios and VFA fitting.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 numerical failure,
//! 4 I/O failure.

use clap::{Parser, Subcommand, ValueEnum};
use seqalloc::exact::{solve_bellman, state_space_size, DiscreteModel, SolverConfig};
use seqalloc::experiment::{fit_two_factor, run_experiment, write_results, ExperimentConfig, Scenario};
use seqalloc::policies::optimal_ratios;
use seqalloc::vfa::{Activation, SaConfig};
use seqalloc::{Error, GroundTruth};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "seqalloc", version, about = "Sequential ranking and selection toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate IPCS curves for the policies in a JSON config and write CSV.
    RunExperiment {
        /// Experiment config (scenario, policies, output).
        #[arg(long)]
        config: PathBuf,
        /// Output CSV; defaults to the config's output.path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (results do not depend on this).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Fit two-factor VFA weights by G-MCL with equal allocation.
    FitVfa {
        /// Built-in scenario name or path to a JSON scenario.
        #[arg(long)]
        scenario: String,
        /// Output weights file (JSON).
        #[arg(long)]
        out: PathBuf,
        /// SA iterations, one fresh replication each.
        #[arg(long, default_value_t = 10_000)]
        iterations: usize,
        #[arg(long, value_enum, default_value_t = ActivationArg::Linear)]
        activation: ActivationArg,
        /// Mixed with the scenario's master seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10.0)]
        step_scale: f64,
        #[arg(long, default_value_t = 2.0 / 3.0)]
        step_exponent: f64,
        /// Initial weights, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1,1")]
        initial_w: Vec<f64>,
    },
    /// Solve a discrete model exactly by backward induction.
    SolveExact {
        /// Model JSON.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        horizon: usize,
        /// Write the optimal policy table (CSV) here.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Cap on the number of states.
        #[arg(long, default_value_t = SolverConfig::default().max_states)]
        max_states: usize,
    },
    /// Asymptotically optimal sampling ratios for known means and stds.
    OptimalRatios {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        means: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        stds: Vec<f64>,
    },
    /// Number of sufficient-statistic states after t samples.
    StateSpaceSize {
        #[arg(long)]
        t: usize,
        #[arg(long)]
        k: usize,
        /// Support size per alternative, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        supports: Vec<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ActivationArg {
    Linear,
    Expm,
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Io { .. } => 4,
                ref e if e.is_numerical() => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::RunExperiment { config, out, threads } => run_experiment_cmd(&config, out, threads),
        Command::FitVfa {
            scenario,
            out,
            iterations,
            activation,
            seed,
            step_scale,
            step_exponent,
            initial_w,
        } => {
            let scenario = Scenario::load(&scenario)?;
            let cfg = SaConfig {
                step_scale,
                step_exponent,
                iterations,
                initial_w,
                activation: match activation {
                    ActivationArg::Linear => Activation::Linear,
                    ActivationArg::Expm => Activation::Expm,
                },
                seed,
                ..SaConfig::default()
            };
            let fit = fit_two_factor(&scenario, &cfg)?;
            fit.save(&out)?;
            println!(
                "fitted weights w = [{}] ({:?}, {} iterations, horizon {})",
                fit.weights.w.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", "),
                fit.weights.activation,
                iterations,
                fit.horizon
            );
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::SolveExact {
            model,
            horizon,
            table,
            max_states,
        } => {
            let m = DiscreteModel::load(&model)?;
            let solved = solve_bellman(&m, horizon, SolverConfig { max_states })?;
            if horizon == 0 {
                println!("V0 = {:.12} (terminal selection value)", solved.value());
            } else {
                println!("V0 = {:.12}", solved.value());
                println!("states = {}", solved.num_states());
            }
            if let Some(path) = table {
                solved.write_table(&m, &path)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::OptimalRatios { means, stds } => {
            if means.len() != stds.len() {
                return Err(usage(format!(
                    "--means has {} values but --stds has {}",
                    means.len(),
                    stds.len()
                )));
            }
            if means.len() < 2 {
                return Err(usage("need at least two alternatives"));
            }
            let truth = GroundTruth::new(means, stds.iter().map(|s| s * s).collect())?;
            let r = optimal_ratios(&truth)?;
            let shown: Vec<String> = r.ratios.as_slice().iter().map(|x| format!("{x:.10}")).collect();
            println!("ratios = {}", shown.join(","));
            println!("equal-rate residual = {:.3e}", r.rate_residual);
            println!("balance residual = {:.3e}", r.balance_residual);
            println!("iterations = {}", r.iterations);
            Ok(())
        }
        Command::StateSpaceSize { t, k, supports } => {
            if supports.len() != k {
                return Err(usage(format!("--k is {k} but {} support sizes were given", supports.len())));
            }
            println!("{}", state_space_size(t, k, &supports)?);
            Ok(())
        }
    }
}

fn run_experiment_cmd(config: &Path, out: Option<PathBuf>, threads: Option<usize>) -> Result<(), Failure> {
    let cfg = ExperimentConfig::load(config)?;
    let out = out
        .or_else(|| cfg.output.path.clone())
        .ok_or_else(|| usage("no output path: pass --out or set output.path"))?;
    let base = config.parent().unwrap_or(Path::new("."));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| usage(format!("thread pool: {e}")))?;
    let table = pool.install(|| run_experiment(&cfg, base))?;
    write_results(&table, &out, cfg.output.downsample)?;
    for c in &table.curves {
        let (p, se) = c.at(c.last_t()).expect("curve is non-empty");
        println!("{:<12} IPCS_{} = {p:.4} ± {se:.4} ({} reps)", c.policy, c.last_t(), c.macro_reps);
    }
    println!("wrote {} rows to {}", table.row_count(), out.display());
    Ok(())
}

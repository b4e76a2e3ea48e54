use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use obsmd::harness::{
    estimate_diagnostics, parse_oracle, reference_value, run_bench, run_solver, trace_to_csv, verify_suite,
    ExperimentConfig, RunContext, SolverSpec, TraceFile, MIN_REFERENCE_BUDGET,
};
use obsmd::problem::{gen_instance, Diagnostics, Instance};
use obsmd::solvers::RunOptions;

/// Oblivious stochastic mirror descent for maximum-eigenvalue minimization.
#[derive(Parser)]
#[command(name = "obsmd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic box instance.
    Generate {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0.2)]
        noise_sigma: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one solver on an instance and write its trace as CSV.
    Run {
        #[arg(long)]
        instance: PathBuf,
        /// `smd:N`, `acsmd:N`, `levy`, `lan`, `relative`; baselines take a `-tuned` suffix.
        #[arg(long)]
        solver: String,
        /// `smoothing[:k=..,epsilon=..]`, `power[:p=..,square_input=..]` or `exact`.
        #[arg(long, default_value = "smoothing")]
        oracle: String,
        #[arg(long = "T", default_value_t = 1000)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Regularization weight; defaults to 1/sqrt(T).
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long = "D")]
        diameter: Option<f64>,
        #[arg(long = "M")]
        m: Option<f64>,
        #[arg(long = "L")]
        l: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        lstar: Option<f64>,
        #[arg(long = "Gamma")]
        gamma: Option<f64>,
        /// Iterations of the reference run used to estimate missing constants.
        #[arg(long, default_value_t = MIN_REFERENCE_BUDGET)]
        reference_budget: usize,
    },
    /// Run every cell of an experiment config.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the invariant suite.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn read_instance(path: &Path) -> Result<Instance> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Instance::read_from(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

/// True when the solver still lacks a constant that only an estimate can supply.
fn needs_estimate(spec: &SolverSpec) -> bool {
    match spec {
        SolverSpec::Levy { m, .. } => m.is_none(),
        SolverSpec::Lan { l, sigma, .. } => l.is_none() || sigma.is_none(),
        SolverSpec::Relative { lstar, gamma, .. } => lstar.is_none() || gamma.is_none(),
        _ => false,
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    instance: &Path,
    solver: &str,
    oracle: &str,
    horizon: usize,
    seed: u64,
    out: &Path,
    mu: Option<f64>,
    overrides: [Option<f64>; 6],
    reference_budget: usize,
) -> Result<()> {
    let inst = read_instance(instance)?;
    let oracle = parse_oracle(oracle)?;
    let mut spec: SolverSpec = solver.parse()?;
    let [d_o, m_o, l_o, sigma_o, lstar_o, gamma_o] = overrides;
    match &mut spec {
        SolverSpec::Levy { diameter, m, .. } => {
            *diameter = d_o;
            *m = m_o;
        }
        SolverSpec::Lan { l, sigma, .. } => {
            *l = l_o;
            *sigma = sigma_o;
        }
        SolverSpec::Relative { lstar, gamma, .. } => {
            *lstar = lstar_o;
            *gamma = gamma_o;
        }
        _ => {}
    }
    let diagnostics = if needs_estimate(&spec) {
        eprintln!("estimating problem constants (reference run of {reference_budget} iterations)");
        let reference = reference_value(&inst.set, reference_budget, inst.seed)?;
        estimate_diagnostics(&inst, &oracle, &reference, horizon, inst.seed)?
    } else {
        Diagnostics::default()
    };
    let ctx = RunContext {
        set: inst.set.clone(),
        oracle,
        horizon,
        mu,
        diagnostics,
    };
    let run = run_solver(&spec, false, &ctx, seed, RunOptions::for_dim(inst.set.dim()))?;
    let notes = vec![
        format!("instance = \"{}\"", instance.display()),
        format!("instance_seed = {}", inst.seed),
        format!("noise_sigma = {}", inst.noise_sigma),
    ];
    let text = trace_to_csv(&TraceFile::from_run(&run, notes));
    fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
    let last = run.last();
    println!(
        "{}: T={} F_ag={} Psi_ag={} elapsed_s={:.3} oracle_s={:.3}",
        spec.label(false),
        last.t,
        last.f_ag,
        last.psi_ag,
        last.elapsed_seconds,
        run.oracle_seconds
    );
    Ok(())
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Generate {
            dim,
            noise_sigma,
            seed,
            out,
        } => {
            let inst = gen_instance(dim, noise_sigma, seed)?;
            fs::write(&out, inst.to_text()).with_context(|| format!("writing {}", out.display()))?;
            println!("d={dim} rho={} -> {}", inst.set.radius(), out.display());
        }
        Command::Run {
            instance,
            solver,
            oracle,
            horizon,
            seed,
            out,
            mu,
            diameter,
            m,
            l,
            sigma,
            lstar,
            gamma,
            reference_budget,
        } => cmd_run(
            &instance,
            &solver,
            &oracle,
            horizon,
            seed,
            &out,
            mu,
            [diameter, m, l, sigma, lstar, gamma],
            reference_budget,
        )?,
        Command::Bench { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run_bench(&cfg)?;
            print!("{}", report.to_text());
            eprintln!("wrote {}", cfg.output_dir.display());
        }
        Command::Verify { seed } => {
            let checks = verify_suite(seed);
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if failed > 0 {
                bail!("{failed} of {} checks failed", checks.len());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

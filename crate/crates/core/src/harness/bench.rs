use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::oracles::OracleSpec;
use crate::parallel::map_ordered;
use crate::problem::{default_mu, gen_instance, BoxSet, CompositeProblem, Diagnostics, Instance};
use crate::solvers::{
    lan_acsa, levy_adaptive, oblivious_acsmd, oblivious_smd, relative_md, RunOptions, RunTrace, StepSchedule,
    TracePoint,
};

use super::config::{ExperimentConfig, SolverSpec, TUNE_D, TUNE_L, TUNE_LSTAR};
use super::reference::reference_value;
use super::theory::estimate_diagnostics;
use super::trace_io::{trace_to_csv, TraceFile};

/// Smallest recorded `t` with `F_ag(t) − F_ref ≤ target`, or `None` when the
/// trace never gets there.
pub fn iterations_to_precision(points: &[TracePoint], f_ref: f64, target: f64) -> Result<Option<usize>> {
    if points.is_empty() {
        return Err(Error::invalid("trace", "empty trace"));
    }
    if !(target > 0.0) {
        return Err(Error::invalid("target", format!("must be positive, got {target}")));
    }
    Ok(points.iter().find(|p| p.f_ag - f_ref <= target).map(|p| p.t))
}

/// Everything a single run needs besides the solver and seed.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub set: BoxSet,
    pub oracle: OracleSpec,
    pub horizon: usize,
    /// `None` means `μ = 1/√T`.
    pub mu: Option<f64>,
    pub diagnostics: Diagnostics,
}

fn missing(what: &str, solver: &SolverSpec) -> Error {
    Error::Config(format!("solver `{solver}` needs {what}, which is neither configured nor estimable for this oracle"))
}

/// Runs one solver, filling unset theory constants from `ctx.diagnostics`
/// and applying the tuning factors when `tuned` is on.
pub fn run_solver(
    spec: &SolverSpec,
    tuned: bool,
    ctx: &RunContext,
    seed: u64,
    opts: RunOptions,
) -> Result<RunTrace> {
    let mu = ctx.mu.unwrap_or_else(|| default_mu(ctx.horizon));
    let x1 = ctx.set.center().clone();
    let prob = CompositeProblem::new(ctx.set.clone(), mu, x1, Arc::new(ctx.oracle))?;
    let diag = &ctx.diagnostics;
    let tuned = spec.tuned(tuned);
    let t = ctx.horizon;
    match *spec {
        SolverSpec::ObliviousSmd { degree, scale } => {
            oblivious_smd(&prob, &StepSchedule::new(degree, scale)?, t, seed, opts)
        }
        SolverSpec::ObliviousAcsmd { degree, scale } => {
            oblivious_acsmd(&prob, &StepSchedule::new(degree, scale)?, t, seed, opts)
        }
        SolverSpec::Levy { diameter, m, .. } => {
            let d = diameter.unwrap_or_else(|| ctx.set.diameter_frobenius());
            let m = m.or(diag.m).ok_or_else(|| missing("M", spec))?;
            let d = if tuned { d / TUNE_D } else { d };
            levy_adaptive(&prob, d, m, t, seed, opts)
        }
        SolverSpec::Lan { l, sigma, .. } => {
            let l = l.or(diag.l).ok_or_else(|| missing("L", spec))?;
            let sigma = sigma.or(diag.sigma2.map(f64::sqrt)).unwrap_or(0.0);
            let l = if tuned { l / TUNE_L } else { l };
            lan_acsa(&prob, l, sigma, t, seed, opts)
        }
        SolverSpec::Relative { lstar, gamma, .. } => {
            let lstar = lstar.or(diag.lstar).ok_or_else(|| missing("Lstar", spec))?;
            let gamma = gamma.or(diag.gamma).ok_or_else(|| missing("Gamma", spec))?;
            let lstar = if tuned { lstar / TUNE_LSTAR } else { lstar };
            relative_md(&prob, lstar, gamma, t, seed, opts)
        }
    }
}

/// Outcome of one (dim, solver, seed) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub dim: usize,
    pub solver: String,
    pub seed: u64,
    pub outcome: std::result::Result<CellOutcome, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    /// `None` is "exceeded".
    pub iterations: Option<usize>,
    pub final_gap: f64,
    pub wall_seconds: f64,
    pub oracle_seconds: f64,
}

/// Median and 10th/90th percentiles of iterations-to-precision; `None`
/// stands for "exceeded".
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub dim: usize,
    pub solver: String,
    pub median: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub median_final_gap: Option<f64>,
    pub runs: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimReference {
    pub dim: usize,
    pub outcome: std::result::Result<(f64, Diagnostics), String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub config: ExperimentConfig,
    pub references: Vec<DimReference>,
    pub cells: Vec<CellResult>,
    pub summaries: Vec<CellSummary>,
    pub warnings: Vec<String>,
}

/// Nearest-rank quantile of sorted data, `None` (exceeded) sorting last.
fn quantile(sorted: &[Option<usize>], q: f64) -> Option<f64> {
    let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx].map(|v| v as f64)
}

fn median(sorted: &[Option<usize>]) -> Option<f64> {
    let n = sorted.len();
    if n % 2 == 1 {
        return sorted[n / 2].map(|v| v as f64);
    }
    match (sorted[n / 2 - 1], sorted[n / 2]) {
        (Some(a), Some(b)) => Some((a + b) as f64 / 2.0),
        _ => None,
    }
}

fn median_f64(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

pub fn summarize(dim: usize, solver: &str, cells: &[&CellResult]) -> CellSummary {
    let ok: Vec<&CellOutcome> = cells.iter().filter_map(|c| c.outcome.as_ref().ok()).collect();
    let mut iters: Vec<Option<usize>> = ok.iter().map(|o| o.iterations).collect();
    iters.sort_by_key(|i| i.unwrap_or(usize::MAX));
    let (median, lo, hi) = if iters.is_empty() {
        (None, None, None)
    } else {
        (median(&iters), quantile(&iters, 0.1), quantile(&iters, 0.9))
    };
    CellSummary {
        dim,
        solver: solver.to_string(),
        median,
        lo,
        hi,
        median_final_gap: median_f64(ok.iter().map(|o| o.final_gap).collect()),
        runs: cells.len(),
        failed: cells.len() - ok.len(),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

struct Prepared {
    instance: Instance,
    f_ref: f64,
    diagnostics: Diagnostics,
}

fn prepare(cfg: &ExperimentConfig, dim: usize, dir: &Path) -> Result<Prepared> {
    let instance = gen_instance(dim, cfg.noise_sigma, cfg.instance_seed)?;
    let reference = reference_value(&instance.set, cfg.reference_budget, cfg.instance_seed)?;
    let diagnostics = estimate_diagnostics(&instance, &cfg.oracle, &reference, cfg.horizon, cfg.instance_seed)?;
    write_file(&dir.join(format!("instance_d{dim}.txt")), &instance.to_text())?;
    write_file(
        &dir.join(format!("reference_d{dim}.csv")),
        &format!("{}{}", cfg.echo(), reference.audit_csv()),
    )?;
    Ok(Prepared {
        instance,
        f_ref: reference.value,
        diagnostics,
    })
}

/// Runs every (dim × solver × seed) cell and writes traces, the report
/// (`report.csv`, `report.txt`) and `timing.csv` under `cfg.output_dir`.
/// Failing cells are recorded in the report; the run continues.
pub fn run_bench(cfg: &ExperimentConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    let traces = out.join("traces");
    let refs = out.join("reference");
    for dir in [out, &traces, &refs] {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }

    let prepared: Vec<(usize, std::result::Result<Prepared, String>)> =
        map_ordered(cfg.dims.clone(), cfg.execution, |d| (d, prepare(cfg, d, &refs).map_err(|e| e.to_string())));

    let labels: Vec<String> = cfg.solvers.iter().map(|s| s.label(cfg.hyper_tuned)).collect();
    let mut jobs = Vec::new();
    for (di, _) in cfg.dims.iter().enumerate() {
        for si in 0..cfg.solvers.len() {
            for &seed in &cfg.seeds {
                jobs.push((di, si, seed));
            }
        }
    }
    let echo = cfg.echo();
    let note_lines: Vec<String> = echo.lines().map(|l| l.trim_start_matches("# ").to_string()).collect();
    let cells: Vec<CellResult> = map_ordered(jobs, cfg.execution, |(di, si, seed)| {
        let (dim, prep) = &prepared[di];
        let label = &labels[si];
        let outcome = match prep {
            Err(e) => Err(format!("instance setup failed: {e}")),
            Ok(p) => {
                let ctx = RunContext {
                    set: p.instance.set.clone(),
                    oracle: cfg.oracle,
                    horizon: cfg.horizon,
                    mu: cfg.mu,
                    diagnostics: p.diagnostics.clone(),
                };
                run_cell(cfg, &ctx, &cfg.solvers[si], seed, p.f_ref, &traces, *dim, label, &note_lines)
                    .map_err(|e| e.to_string())
            }
        };
        CellResult {
            dim: *dim,
            solver: label.clone(),
            seed,
            outcome,
        }
    });

    let mut summaries = Vec::new();
    for &dim in &cfg.dims {
        for label in &labels {
            let group: Vec<&CellResult> = cells.iter().filter(|c| c.dim == dim && &c.solver == label).collect();
            summaries.push(summarize(dim, label, &group));
        }
    }
    let warnings = monotone_warnings(&cfg.dims, &labels, &summaries);
    let references = prepared
        .iter()
        .map(|(dim, p)| DimReference {
            dim: *dim,
            outcome: p.as_ref().map(|p| (p.f_ref, p.diagnostics.clone())).map_err(Clone::clone),
        })
        .collect();
    let report = BenchReport {
        config: cfg.clone(),
        references,
        cells,
        summaries,
        warnings,
    };
    write_file(&out.join("report.csv"), &report.to_csv())?;
    write_file(&out.join("report.txt"), &report.to_text())?;
    write_file(&out.join("timing.csv"), &report.timing_csv())?;
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    cfg: &ExperimentConfig,
    ctx: &RunContext,
    spec: &SolverSpec,
    seed: u64,
    f_ref: f64,
    traces: &Path,
    dim: usize,
    label: &str,
    notes: &[String],
) -> Result<CellOutcome> {
    let run = run_solver(spec, cfg.hyper_tuned, ctx, seed, RunOptions::for_dim(dim))?;
    let file = TraceFile::from_run(&run, notes.to_vec());
    write_file(&traces.join(format!("d{dim}_{label}_s{seed}.csv")), &trace_to_csv(&file))?;
    Ok(CellOutcome {
        iterations: iterations_to_precision(&run.iterations, f_ref, cfg.target_precision)?,
        final_gap: run.last().f_ag - f_ref,
        wall_seconds: run.total_seconds(),
        oracle_seconds: run.oracle_seconds,
    })
}

/// Medians should not decrease with the dimension; a violation is only a warning.
fn monotone_warnings(dims: &[usize], labels: &[String], summaries: &[CellSummary]) -> Vec<String> {
    let mut order: Vec<usize> = dims.to_vec();
    order.sort_unstable();
    let key = |m: Option<f64>| m.unwrap_or(f64::INFINITY);
    let mut out = Vec::new();
    for label in labels {
        let meds: Vec<(usize, Option<f64>)> = order
            .iter()
            .filter_map(|&d| summaries.iter().find(|s| s.dim == d && &s.solver == label))
            .filter(|s| s.failed < s.runs)
            .map(|s| (s.dim, s.median))
            .collect();
        for w in meds.windows(2) {
            if key(w[1].1) < key(w[0].1) {
                out.push(format!(
                    "{label}: median iterations drop from {} at d={} to {} at d={}",
                    fmt_stat(w[0].1, None),
                    w[0].0,
                    fmt_stat(w[1].1, None),
                    w[1].0
                ));
            }
        }
    }
    out
}

fn fmt_stat(v: Option<f64>, horizon: Option<usize>) -> String {
    match (v, horizon) {
        (Some(x), _) => format!("{x}"),
        (None, Some(t)) => format!(">{t}"),
        (None, None) => "exceeded".into(),
    }
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".into(), |x| x.to_string())
}

impl BenchReport {
    pub fn summary(&self, dim: usize, solver: &str) -> Option<&CellSummary> {
        self.summaries.iter().find(|s| s.dim == dim && s.solver == solver)
    }

    pub fn f_ref(&self, dim: usize) -> Option<f64> {
        self.references
            .iter()
            .find(|r| r.dim == dim)
            .and_then(|r| r.outcome.as_ref().ok().map(|o| o.0))
    }

    /// One row per cell. Timing lives in `timing.csv` so this file is
    /// reproducible byte for byte.
    pub fn to_csv(&self) -> String {
        let mut out = self.config.echo();
        out.push_str("dim,solver,seed,status,iterations,final_gap,f_ref\n");
        for c in &self.cells {
            let f_ref = fmt_opt(self.f_ref(c.dim));
            match &c.outcome {
                Ok(o) => {
                    let it = o.iterations.map_or_else(|| "exceeded".into(), |t| t.to_string());
                    let _ = writeln!(out, "{},{},{},ok,{},{},{}", c.dim, c.solver, c.seed, it, o.final_gap, f_ref);
                }
                Err(e) => {
                    let msg = e.replace([',', '\n'], ";");
                    let _ = writeln!(out, "{},{},{},error: {},,,{}", c.dim, c.solver, c.seed, msg, f_ref);
                }
            }
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = self.config.echo();
        out.push_str("dim,solver,seed,wall_seconds,oracle_seconds\n");
        for c in &self.cells {
            if let Ok(o) = &c.outcome {
                let _ = writeln!(out, "{},{},{},{},{}", c.dim, c.solver, c.seed, o.wall_seconds, o.oracle_seconds);
            }
        }
        out
    }

    /// Table layout: solvers down, dimensions across, each entry
    /// `median [p10, p90]` of iterations to the target precision.
    pub fn to_text(&self) -> String {
        let cfg = &self.config;
        let mut out = cfg.echo();
        let _ = writeln!(
            out,
            "\nIterations to reach F - F_ref <= {} (median [p10, p90] over {} seeds, >{} = not reached)\n",
            cfg.target_precision,
            cfg.seeds.len(),
            cfg.horizon
        );
        let mut header = vec!["solver".to_string()];
        header.extend(cfg.dims.iter().map(|d| format!("d={d}")));
        let mut rows = vec![header];
        let labels: Vec<String> = cfg.solvers.iter().map(|s| s.label(cfg.hyper_tuned)).collect();
        for label in &labels {
            let mut row = vec![label.clone()];
            for &d in &cfg.dims {
                let cell = match self.summary(d, label) {
                    Some(s) if s.failed == s.runs => "failed".to_string(),
                    Some(s) => {
                        let h = Some(cfg.horizon);
                        let mut txt = format!("{} [{}, {}]", fmt_stat(s.median, h), fmt_stat(s.lo, h), fmt_stat(s.hi, h));
                        if s.failed > 0 {
                            txt.push_str(&format!(" ({} failed)", s.failed));
                        }
                        txt
                    }
                    None => "-".into(),
                };
                row.push(cell);
            }
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        for row in &rows {
            let line: Vec<String> = row.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
            let _ = writeln!(out, "{}", line.join(" | ").trim_end());
        }

        let _ = writeln!(out, "\nMedian final gap F(X_T) - F_ref");
        for label in &labels {
            let gaps: Vec<String> = cfg
                .dims
                .iter()
                .map(|&d| {
                    let g = self.summary(d, label).and_then(|s| s.median_final_gap);
                    format!("d={d}: {}", g.map_or_else(|| "-".into(), |g| format!("{g:.6e}")))
                })
                .collect();
            let _ = writeln!(out, "{label}: {}", gaps.join(", "));
        }

        let _ = writeln!(out, "\nReference values and problem constants");
        for r in &self.references {
            match &r.outcome {
                Ok((f, dg)) => {
                    let _ = writeln!(
                        out,
                        "d={}: F_ref={f} M={} L={} sigma2={} Lstar={} Gamma={} D0={} T0={}",
                        r.dim,
                        fmt_opt(dg.m),
                        fmt_opt(dg.l),
                        fmt_opt(dg.sigma2),
                        fmt_opt(dg.lstar),
                        fmt_opt(dg.gamma),
                        fmt_opt(dg.d0),
                        fmt_opt(dg.t0),
                    );
                }
                Err(e) => {
                    let _ = writeln!(out, "d={}: failed: {e}", r.dim);
                }
            }
        }

        let failures: Vec<&CellResult> = self.cells.iter().filter(|c| c.outcome.is_err()).collect();
        if !failures.is_empty() {
            let _ = writeln!(out, "\nFailures");
            for c in failures {
                if let Err(e) = &c.outcome {
                    let _ = writeln!(out, "d={} {} seed={}: {e}", c.dim, c.solver, c.seed);
                }
            }
        }
        if !self.warnings.is_empty() {
            let _ = writeln!(out, "\nWarnings");
            for w in &self.warnings {
                let _ = writeln!(out, "{w}");
            }
        }
        out
    }
}

//! Runtime invariant suite behind `obsmd verify`. Each check is small enough
//! to finish in well under a second.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{full_spectrum, lambda_max, leading_eigpair, SymMatrix, EIG_TOL};
use crate::oracles::{exact_subgrad, power_grad_at, OracleSpec, PowerOracleConfig};
use crate::parallel::rng_stream;
use crate::problem::{gen_instance, project_box, prox_step, BoxSet, CompositeProblem};
use crate::solvers::{RunOptions, RunTrace, StepSchedule, SCHEDULE_REL_SLACK};

use super::bench::{run_solver, RunContext};
use super::config::SolverSpec;
use super::trace_io::{parse_trace_csv, trace_to_csv, TraceFile};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Outcome = std::result::Result<String, String>;

fn check(name: &'static str, f: impl FnOnce() -> Outcome) -> Check {
    let (passed, detail) = match f() {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    Check { name, passed, detail }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_sym<R: Rng>(d: usize, rng: &mut R) -> SymMatrix {
    SymMatrix::from_fn(d, |_, _| rng.sample(StandardNormal))
}

fn random_psd<R: Rng>(d: usize, rng: &mut R) -> SymMatrix {
    let b: Vec<f64> = (0..d * d).map(|_| rng.sample(StandardNormal)).collect();
    SymMatrix::from_fn(d, |i, j| (0..d).map(|k| b[i * d + k] * b[j * d + k]).sum::<f64>() / d as f64)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

pub fn verify_suite(seed: u64) -> Vec<Check> {
    let mut rng = rng_stream(seed, 0);
    let mut out = Vec::new();

    out.push(check("schedule law", || {
        for n in 0..=3 {
            for c in [0.1, 1.0, 10.0] {
                let s = StepSchedule::new(n, c).map_err(|e| e.to_string())?;
                s.verify(10_000).map_err(|e| format!("n={n}, c={c}: {e}"))?;
            }
        }
        Ok(format!("n = 0..3, c in {{0.1, 1, 10}}, t <= 1e4, slack {SCHEDULE_REL_SLACK:e}"))
    }));

    let mats: Vec<SymMatrix> = (0..5).map(|_| random_sym(16, &mut rng)).collect();
    out.push(check("spectrum invariants", || {
        for m in &mats {
            let spec = full_spectrum(m);
            ensure(spec.windows(2).all(|w| w[0] >= w[1]), || "spectrum not sorted".into())?;
            let tr: f64 = spec.iter().sum();
            let fro: f64 = spec.iter().map(|l| l * l).sum();
            ensure(rel(tr, m.trace()) <= 1e-9, || format!("trace mismatch {tr} vs {}", m.trace()))?;
            ensure(rel(fro, m.frob_norm().powi(2)) <= 1e-9, || "Frobenius mismatch".into())?;
        }
        Ok("5 random 16x16 matrices".into())
    }));

    let mut eig_rng = rng_stream(seed, 1);
    out.push(check("power iteration residual", || {
        let mut worst: f64 = 0.0;
        for m in &mats {
            let psd = SymMatrix::from_fn(16, |i, j| (0..16).map(|k| m.get(i, k) * m.get(j, k)).sum());
            let (l, v) = leading_eigpair(&psd, EIG_TOL, 20_000, &mut eig_rng).map_err(|e| e.to_string())?;
            let mv = psd.matvec(&v);
            let res = mv.iter().zip(&v).map(|(a, b)| (a - l * b).powi(2)).sum::<f64>().sqrt();
            ensure(res <= EIG_TOL * l.abs().max(1.0), || format!("residual {res:e}"))?;
            worst = worst.max(res / l.abs().max(1.0));
        }
        Ok(format!("worst relative residual {worst:.2e}"))
    }));

    out.push(check("exact subgradient", || {
        for m in &mats {
            let g = exact_subgrad(m);
            let inner: f64 = g.grad.as_slice().iter().zip(m.as_slice()).map(|(a, b)| a * b).sum();
            ensure((inner - g.value).abs() <= 1e-8, || format!("<grad, X> = {inner}, value {}", g.value))?;
            ensure((g.grad.trace() - 1.0).abs() <= 1e-10, || "trace of grad is not 1".into())?;
            ensure((g.value - lambda_max(m)).abs() <= 1e-10, || "value is not lambda_max".into())?;
        }
        Ok("Rayleigh identity, unit trace".into())
    }));

    let psds: Vec<SymMatrix> = (0..10).map(|_| random_psd(5, &mut rng)).collect();
    out.push(check("power oracle gradient", || {
        let cfg = PowerOracleConfig { p: 7, square_input: false };
        let mut worst: f64 = 0.0;
        for x in &psds {
            let u: Vec<f64> = (0..5).map(|_| rng.random::<f64>() + 0.1).collect();
            let g = power_grad_at(x, &cfg, &u).map_err(|e| e.to_string())?;
            let h = 1e-5;
            for i in 0..5 {
                for j in i..5 {
                    let mut e = SymMatrix::zeros(5);
                    e.data_mut()[i * 5 + j] = 1.0;
                    e.data_mut()[j * 5 + i] = 1.0;
                    let f = |s: f64| power_grad_at(&x.lin_comb(1.0, &e, s), &cfg, &u).map(|g| g.value);
                    let fd = (f(h).map_err(|e| e.to_string())? - f(-h).map_err(|e| e.to_string())?) / (2.0 * h);
                    let an: f64 = if i == j { g.grad.get(i, i) } else { 2.0 * g.grad.get(i, j) };
                    let err = (fd - an).abs() / an.abs().max(1e-3);
                    worst = worst.max(err);
                }
            }
        }
        ensure(worst <= 1e-5, || format!("worst relative error {worst:.2e}"))?;
        Ok(format!("worst relative error {worst:.2e}"))
    }));

    out.push(check("power oracle bound", || {
        let cfg = PowerOracleConfig { p: 7, square_input: false };
        for x in &psds {
            let lmax = lambda_max(x);
            for _ in 0..50 {
                let u: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
                let g = power_grad_at(x, &cfg, &u).map_err(|e| e.to_string())?;
                let bound = lmax * crate::linalg::norm2(&u).powf(2.0 / 7.0);
                ensure(g.value <= bound * (1.0 + 1e-12), || format!("value {} exceeds {bound}", g.value))?;
            }
        }
        Ok("500 draws".into())
    }));

    out.push(check("box projection", || {
        let set = BoxSet::new(random_sym(4, &mut rng), 0.3).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let x = random_sym(4, &mut rng);
            let y = random_sym(4, &mut rng);
            let px = project_box(&x, &set).map_err(|e| e.to_string())?;
            let py = project_box(&y, &set).map_err(|e| e.to_string())?;
            ensure(project_box(&px, &set).ok() == Some(px.clone()), || "projection not idempotent".into())?;
            ensure(px.sub(&py).frob_norm() <= x.sub(&y).frob_norm() + 1e-12, || "projection expands".into())?;
            ensure(px.is_symmetric(), || "projection broke symmetry".into())?;
        }
        Ok("idempotent, non-expansive, symmetric on 100 pairs".into())
    }));

    out.push(check("prox optimality", || {
        let set = BoxSet::new(random_sym(2, &mut rng), 0.5).map_err(|e| e.to_string())?;
        let prob = CompositeProblem::new(set.clone(), 0.7, set.center().clone(), Arc::new(OracleSpec::Exact))
            .map_err(|e| e.to_string())?;
        for _ in 0..50 {
            let xt = project_box(&random_sym(2, &mut rng), &set).map_err(|e| e.to_string())?;
            let g = random_sym(2, &mut rng);
            let (a, b) = (rng.random_range(0.1..3.0), rng.random_range(0.1..3.0));
            let obj = |x: &SymMatrix| {
                let lin: f64 = g.as_slice().iter().zip(x.as_slice()).map(|(p, q)| p * q).sum();
                a * (lin + prob.regularizer(x)) + b * prob.bregman(x, &xt)
            };
            let p = prox_step(&xt, &g, a, b, &prob).map_err(|e| e.to_string())?;
            let best = obj(&p);
            for _ in 0..200 {
                let y = set.center().lin_comb(1.0, &random_sym(2, &mut rng), 0.5);
                let y = project_box(&y, &set).map_err(|e| e.to_string())?;
                ensure(best <= obj(&y) + 1e-9, || "a random feasible point beats the prox output".into())?;
            }
        }
        Ok("50 calls x 200 feasible competitors".into())
    }));

    let inst = gen_instance(6, 0.2, seed);
    let solver_runs: std::result::Result<Vec<(String, RunTrace, RunTrace)>, String> = inst
        .map_err(|e| e.to_string())
        .and_then(|inst| {
            let ctx = RunContext {
                set: inst.set.clone(),
                oracle: OracleSpec::Smoothing { k: 1, epsilon: 1e-2 },
                horizon: 60,
                mu: None,
                diagnostics: crate::problem::Diagnostics {
                    m: Some(1.0),
                    l: Some(600.0),
                    sigma2: Some(1.0),
                    lstar: Some(1.0),
                    gamma: Some(1e-2),
                    ..Default::default()
                },
            };
            let opts = RunOptions::for_dim(6).with_iterates();
            let specs = ["smd:1", "acsmd:2", "levy", "lan", "relative"];
            specs
                .iter()
                .map(|s| {
                    let spec: SolverSpec = s.parse().map_err(|e: crate::error::Error| e.to_string())?;
                    let a = run_solver(&spec, false, &ctx, seed, opts).map_err(|e| e.to_string())?;
                    let b = run_solver(&spec, false, &ctx, seed, opts).map_err(|e| e.to_string())?;
                    Ok((s.to_string(), a, b))
                })
                .collect()
        });

    out.push(check("solver feasibility", || {
        let runs = solver_runs.as_ref().map_err(Clone::clone)?;
        let inst = gen_instance(6, 0.2, seed).map_err(|e| e.to_string())?;
        for (name, run, _) in runs {
            for x in run.iterates.iter().chain(&run.aggregates) {
                ensure(inst.set.violation(x) <= 1e-9, || format!("{name}: iterate leaves the box"))?;
            }
        }
        Ok("5 solvers, every iterate and aggregate".into())
    }));

    out.push(check("determinism", || {
        let runs = solver_runs.as_ref().map_err(Clone::clone)?;
        for (name, a, b) in runs {
            let same = a.final_point == b.final_point
                && a.step_sizes == b.step_sizes
                && a.iterations.iter().zip(&b.iterations).all(|(p, q)| {
                    p.t == q.t
                        && p.f_ag.to_bits() == q.f_ag.to_bits()
                        && p.psi_ag.to_bits() == q.psi_ag.to_bits()
                        && p.grad_norm.to_bits() == q.grad_norm.to_bits()
                });
            ensure(same, || format!("{name}: repeated run differs"))?;
        }
        Ok("repeated runs bitwise identical".into())
    }));

    out.push(check("trace round trip", || {
        let runs = solver_runs.as_ref().map_err(Clone::clone)?;
        for (name, run, _) in runs {
            let file = TraceFile::from_run(run, vec!["verify".into()]);
            let text = trace_to_csv(&file);
            let back = parse_trace_csv(text.as_bytes()).map_err(|e| e.to_string())?;
            ensure(back == file, || format!("{name}: parsed trace differs"))?;
        }
        Ok("write then parse is exact".into())
    }));

    out
}

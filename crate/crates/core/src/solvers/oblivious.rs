//! Parameter-free stochastic mirror descent in the composite setting.
//!
//! Both methods minimize `Ψ = F + μ‖· − X₁‖²` with the prox step
//! `X_{t+1} = argmin α_t[⟨g_t, x⟩ + H(x)] + γ_t D^H(x, X_t)` and report the
//! α-weighted average of iterates. Neither reads any problem constant.

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::parallel::rng_stream;
use crate::problem::{prox_step, CompositeProblem};

use super::schedule::StepSchedule;
use super::trace::{Recorder, RunOptions, RunTrace};
use super::SOLVER_STREAM;

fn check_horizon(sched: &StepSchedule, horizon: usize) -> Result<()> {
    if horizon < 1 {
        return Err(Error::invalid("T", "need at least one iteration"));
    }
    sched.verify(horizon)
}

/// Effective gradient step of the prox update.
fn prox_gain(alpha: f64, gamma: f64, mu: f64) -> f64 {
    alpha / (2.0 * mu * (alpha + gamma))
}

fn echo(name: &str, prob: &CompositeProblem, sched: &StepSchedule, horizon: usize) -> String {
    format!(
        "solver={name};degree={};scale={};mu={};T={horizon};oracle={};x1=center",
        sched.degree,
        sched.scale,
        prob.mu,
        prob.oracle.describe()
    )
}

/// Non-accelerated method: oracle queried at the current iterate `X_t`.
pub fn oblivious_smd(
    prob: &CompositeProblem,
    sched: &StepSchedule,
    horizon: usize,
    seed: u64,
    opts: RunOptions,
) -> Result<RunTrace> {
    check_horizon(sched, horizon)?;
    let mut rng = rng_stream(seed, SOLVER_STREAM);
    let mut rec = Recorder::new(prob, opts, horizon);
    let mut x = prob.x1.clone();
    let mut ag = x.clone();
    let mut weight = 0.0;

    for t in 1..=horizon {
        let (alpha, gamma) = sched.at(t)?;
        let g = rec
            .time_oracle(|| prob.oracle.sample(&x, &mut rng))
            .map_err(|e| e.at(t))?;
        let prev = weight;
        weight += alpha;
        ag = ag.lin_comb(prev / weight, &x, alpha / weight);
        let next = prox_step(&x, &g.grad, alpha, gamma, prob).map_err(|e| e.at(t))?;
        rec.step(t, prox_gain(alpha, gamma, prob.mu), g.grad.frob_norm(), &next, &ag);
        x = next;
    }
    let name = "oblivious_smd";
    Ok(rec.finish(ag, echo(name, prob, sched, horizon), seed))
}

/// Accelerated method: oracle queried at `X^md_t`, a convex combination of
/// the aggregate and the current iterate.
pub fn oblivious_acsmd(
    prob: &CompositeProblem,
    sched: &StepSchedule,
    horizon: usize,
    seed: u64,
    opts: RunOptions,
) -> Result<RunTrace> {
    check_horizon(sched, horizon)?;
    let mut rng = rng_stream(seed, SOLVER_STREAM);
    let mut rec = Recorder::new(prob, opts, horizon);
    let mut x: SymMatrix = prob.x1.clone();
    let mut ag = x.clone();
    let mut weight = 0.0;

    for t in 1..=horizon {
        let (alpha, gamma) = sched.at(t)?;
        let prev = weight;
        weight += alpha;
        let (keep, mix) = (prev / weight, alpha / weight);
        let md = ag.lin_comb(keep, &x, mix);
        let g = rec
            .time_oracle(|| prob.oracle.sample(&md, &mut rng))
            .map_err(|e| e.at(t))?;
        let next = prox_step(&x, &g.grad, alpha, gamma, prob).map_err(|e| e.at(t))?;
        ag = ag.lin_comb(keep, &next, mix);
        rec.step(t, prox_gain(alpha, gamma, prob.mu), g.grad.frob_norm(), &next, &ag);
        x = next;
    }
    Ok(rec.finish(ag, echo("oblivious_acsmd", prob, sched, horizon), seed))
}

//! Baselines that need problem constants: an AdaGrad-norm projected method
//! (needs the diameter `D` and oracle bound `M`), accelerated stochastic
//! approximation (needs the smoothness `L`), and constant-step projected
//! descent tuned for relative scale (needs `L⋆` and `Γ`).
//!
//! None of them use the composite regularizer; `prob.mu` is ignored.

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::parallel::rng_stream;
use crate::problem::{project_box, CompositeProblem};

use super::trace::{Recorder, RunOptions, RunTrace};
use super::SOLVER_STREAM;

fn positive(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::invalid(name, format!("must be positive and finite, got {v}")));
    }
    Ok(())
}

fn need_iterations(horizon: usize) -> Result<()> {
    if horizon < 1 {
        return Err(Error::invalid("T", "need at least one iteration"));
    }
    Ok(())
}

/// Projected step `P(X − η g)`.
fn projected(x: &SymMatrix, g: &SymMatrix, eta: f64, prob: &CompositeProblem) -> Result<SymMatrix> {
    project_box(&x.lin_comb(1.0, g, -eta), &prob.feasible)
}

/// Shared loop for projected stochastic gradient with uniform averaging of
/// `X_1 … X_t`; `step(t, ‖g_t‖²)` returns `η_t`.
fn projected_sgd(
    prob: &CompositeProblem,
    horizon: usize,
    seed: u64,
    opts: RunOptions,
    echo: String,
    mut step: impl FnMut(usize, f64) -> f64,
) -> Result<RunTrace> {
    need_iterations(horizon)?;
    let mut rng = rng_stream(seed, SOLVER_STREAM);
    let mut rec = Recorder::new(prob, opts, horizon);
    let mut x = prob.x1.clone();
    let mut avg = x.clone();
    for t in 1..=horizon {
        let g = rec
            .time_oracle(|| prob.oracle.sample(&x, &mut rng))
            .map_err(|e| e.at(t))?;
        let gnorm = g.grad.frob_norm();
        let eta = step(t, gnorm * gnorm);
        avg = avg.lin_comb((t - 1) as f64 / t as f64, &x, 1.0 / t as f64);
        let next = if gnorm == 0.0 {
            x.clone()
        } else {
            projected(&x, &g.grad, eta, prob).map_err(|e| e.at(t))?
        };
        rec.step(t, eta, gnorm, &next, &avg);
        x = next;
    }
    Ok(rec.finish(avg, echo, seed))
}

/// AdaGrad-norm step `η_t = 2D / √(M² + Σ_{τ≤t} ‖g_τ‖²)` with unit inner weights.
pub fn levy_adaptive(
    prob: &CompositeProblem,
    diameter: f64,
    m: f64,
    horizon: usize,
    seed: u64,
    opts: RunOptions,
) -> Result<RunTrace> {
    positive("D", diameter)?;
    if !(m >= 0.0) || !m.is_finite() {
        return Err(Error::invalid("M", format!("must be nonnegative, got {m}")));
    }
    let echo = format!(
        "solver=levy;D={diameter};M={m};T={horizon};oracle={}",
        prob.oracle.describe()
    );
    let mut acc = m * m;
    projected_sgd(prob, horizon, seed, opts, echo, move |_, g2| {
        acc += g2;
        if acc > 0.0 {
            2.0 * diameter / acc.sqrt()
        } else {
            f64::INFINITY
        }
    })
}

/// Constant step `η = 1/√(Γ·L⋆·T)`.
pub fn relative_md(
    prob: &CompositeProblem,
    lstar: f64,
    gamma: f64,
    horizon: usize,
    seed: u64,
    opts: RunOptions,
) -> Result<RunTrace> {
    positive("Lstar", lstar)?;
    positive("Gamma", gamma)?;
    let eta = relative_step(lstar, gamma, horizon);
    let echo = format!(
        "solver=relative;Lstar={lstar};Gamma={gamma};eta={eta};T={horizon};oracle={}",
        prob.oracle.describe()
    );
    projected_sgd(prob, horizon, seed, opts, echo, move |_, _| eta)
}

pub fn relative_step(lstar: f64, gamma: f64, horizon: usize) -> f64 {
    1.0 / (gamma * lstar * horizon.max(1) as f64).sqrt()
}

/// Accelerated stochastic approximation.
///
/// Weights `α_t = t/2` (so `α_t/A_t = 2/(t+1)`), oracle at
/// `X^md_t = (A_{t−1}X^ag_t + α_t X_t)/A_t`, then
/// `X_{t+1} = P(X_t − η_t g_t)` with `η_t = α_t·min{1/(2L), √6·R/(σ(T+2)^{3/2})}`
/// where `R = ρd` is the Frobenius radius of the box. With `σ = 0` this is
/// `η_t = t/(4L)`.
pub fn lan_acsa(
    prob: &CompositeProblem,
    l: f64,
    sigma: f64,
    horizon: usize,
    seed: u64,
    opts: RunOptions,
) -> Result<RunTrace> {
    positive("L", l)?;
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid("sigma", format!("must be nonnegative, got {sigma}")));
    }
    need_iterations(horizon)?;
    let radius = prob.feasible.diameter_frobenius() / 2.0;
    let noise_cap = if sigma > 0.0 {
        6f64.sqrt() * radius / (sigma * ((horizon + 2) as f64).powf(1.5))
    } else {
        f64::INFINITY
    };
    let base = (1.0 / (2.0 * l)).min(noise_cap);
    let echo = format!(
        "solver=lan;L={l};sigma={sigma};base_step={base};T={horizon};oracle={}",
        prob.oracle.describe()
    );

    let mut rng = rng_stream(seed, SOLVER_STREAM);
    let mut rec = Recorder::new(prob, opts, horizon);
    let mut x = prob.x1.clone();
    let mut ag = x.clone();
    let mut weight = 0.0;
    for t in 1..=horizon {
        let alpha = t as f64 / 2.0;
        let prev = weight;
        weight += alpha;
        let (keep, mix) = (prev / weight, alpha / weight);
        let md = ag.lin_comb(keep, &x, mix);
        let g = rec
            .time_oracle(|| prob.oracle.sample(&md, &mut rng))
            .map_err(|e| e.at(t))?;
        let eta = alpha * base;
        let next = projected(&x, &g.grad, eta, prob).map_err(|e| e.at(t))?;
        ag = ag.lin_comb(keep, &next, mix);
        rec.step(t, eta, g.grad.frob_norm(), &next, &ag);
        x = next;
    }
    Ok(rec.finish(ag, echo, seed))
}

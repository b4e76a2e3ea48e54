//! Problem constants for the baselines, estimated per instance.

use crate::error::Result;
use crate::linalg::SymMatrix;
use crate::oracles::{mean_gradient, OracleSpec};
use crate::parallel::{rng_stream, Execution};
use crate::problem::{default_mu, sq_dist, Diagnostics, Instance};
use crate::solvers::StepSchedule;

use super::reference::Reference;
use rand::Rng;

/// Random feasible points probed besides the reference point.
const PROBE_POINTS: usize = 8;
const PROBE_DRAWS: usize = 64;
const PROBE_STREAM: u64 = 2;

/// Estimates the constants of the three assumption sets.
///
/// * `M = 1` for the rank-one oracles; for the power oracle `M²` is the
///   largest sampled second moment over the reference point and a few
///   random feasible points. `σ²` is the largest sampled variance.
/// * `L = d/ε` for the smoothing oracle; absent otherwise.
/// * `L⋆` is the largest ratio `E‖G‖²/(2·E value)` over the same points.
/// * `Γ` is the oracle value at the reference point over the squared
///   Frobenius radius `(ρd)²`, so `F(X) ≥ Γ‖X − X₁‖²` holds on the box.
/// * `D₀ = ‖X₁ − X_ref‖` and `T₀` is the relative-scale transition time of
///   the degree-one schedule at `μ = 1/√T`.
pub fn estimate_diagnostics(
    inst: &Instance,
    oracle: &OracleSpec,
    reference: &Reference,
    horizon: usize,
    seed: u64,
) -> Result<Diagnostics> {
    let set = &inst.set;
    let mut rng = rng_stream(seed, PROBE_STREAM);
    let mut points = vec![reference.point.clone()];
    for _ in 0..PROBE_POINTS {
        let r = set.radius();
        points.push(SymMatrix::from_fn(set.dim(), |i, j| {
            set.center().get(i, j) + r * rng.random_range(-1.0..=1.0)
        }));
    }

    let mut second = 0.0f64;
    let mut variance = 0.0f64;
    let mut lstar = 0.0f64;
    let mut value_at_ref = None;
    for (n, x) in points.iter().enumerate() {
        let mg = mean_gradient(oracle, x, PROBE_DRAWS, seed.wrapping_add(n as u64), Execution::Sequential)?;
        // E‖G‖² = ‖E G‖² + Σ Var(G_ij); std_err² · draws recovers the variance.
        let var: f64 = mg.std_err.as_slice().iter().map(|s| s * s * mg.draws as f64).sum();
        let m2 = mg.mean.frob_norm().powi(2) + var;
        second = second.max(m2);
        variance = variance.max(var);
        if mg.value_mean > 0.0 {
            lstar = lstar.max(m2 / (2.0 * mg.value_mean));
        }
        if n == 0 {
            value_at_ref = Some(mg.value_mean);
        }
    }

    let radius_sq = (set.radius() * set.dim() as f64).powi(2);
    let gamma = value_at_ref.filter(|v| *v > 0.0).map(|v| v / radius_sq);
    let lstar = (lstar > 0.0).then_some(lstar);
    let mu = default_mu(horizon);
    let t0 = lstar.and_then(|ls| StepSchedule::default().transition_time_relative(ls, mu, horizon));
    let d0 = sq_dist(set.center(), &reference.point).sqrt();
    // Rank-one unit projectors: the bound is exact.
    let m = match oracle {
        OracleSpec::Smoothing { .. } | OracleSpec::Exact => Some(1.0),
        OracleSpec::Power { .. } => (second > 0.0).then(|| second.sqrt()),
    };
    let diag = Diagnostics {
        m,
        l: match *oracle {
            OracleSpec::Smoothing { epsilon, .. } => Some(set.dim() as f64 / epsilon),
            _ => None,
        },
        sigma2: (variance > 0.0).then_some(variance),
        lstar,
        gamma,
        d0: (d0 > 0.0).then_some(d0),
        t0,
    };
    diag.validate()?;
    Ok(diag)
}

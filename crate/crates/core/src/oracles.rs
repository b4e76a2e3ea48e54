//! Stochastic first-order oracles for `λ_max`.
//!
//! * [`smoothing_grad`]: Gaussian rank-one smoothing. Draws `z_1..z_k`,
//!   returns the largest `λ_max(X + (ε/d) z_i z_iᵀ)` and the projector onto
//!   its top eigenvector (a Danskin gradient of the max).
//! * [`power_grad`]: randomized matrix-power smoothing
//!   `φ_u(X) = ⟨Xᵖu, u⟩^{1/p}` with `u` uniform on the unit cube, together with
//!   its exact gradient.
//! * [`exact_subgrad`]: deterministic `v vᵀ` for a top eigenvector.

use std::fmt;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, mat_power_apply, top_eigpair, SymMatrix};
use crate::parallel::{map_ordered, rng_stream, Execution};

/// One oracle draw `G(X, ξ)` with its value estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct GradSample {
    pub grad: SymMatrix,
    pub value: f64,
}

pub trait StochasticOracle: Send + Sync {
    fn sample(&self, x: &SymMatrix, rng: &mut dyn RngCore) -> Result<GradSample>;

    /// Short human-readable description echoed into traces.
    fn describe(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingOracleConfig {
    pub k: usize,
    pub epsilon: f64,
}

impl SmoothingOracleConfig {
    pub fn new(k: usize, epsilon: f64) -> Result<Self> {
        let cfg = SmoothingOracleConfig { k, epsilon };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::invalid("k", "need at least one perturbation"));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::invalid("epsilon", "must be positive and finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerOracleConfig {
    pub p: usize,
    /// Evaluate on `X·X` (a smoothing of `λ_max(X)²`) so that the quadratic
    /// form stays positive on indefinite inputs.
    pub square_input: bool,
}

impl PowerOracleConfig {
    pub fn new(p: usize, square_input: bool) -> Result<Self> {
        let cfg = PowerOracleConfig { p, square_input };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 1 {
            return Err(Error::invalid("p", "power order must be at least 1"));
        }
        Ok(())
    }
}

pub fn smoothing_grad(
    x: &SymMatrix,
    cfg: &SmoothingOracleConfig,
    rng: &mut dyn RngCore,
) -> Result<GradSample> {
    cfg.validate()?;
    let d = x.dim();
    let beta = cfg.epsilon / d as f64;
    // Work on X − τI so that X and X + cI share arithmetic.
    let tau = x.trace() / d as f64;
    let centered = x.add_identity(-tau);

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut z = vec![0.0; d];
    for _ in 0..cfg.k {
        z.iter_mut().for_each(|zi| *zi = rng.sample(StandardNormal));
        let (lambda, v) = top_eigpair(&centered.rank_one_update(beta, &z));
        if best.as_ref().map_or(true, |(b, _)| lambda > *b) {
            best = Some((lambda, v));
        }
    }
    let (lambda, v) = best.expect("k >= 1");
    Ok(GradSample {
        grad: SymMatrix::outer(&v),
        value: lambda + tau,
    })
}

/// Power oracle with a caller-supplied direction `u`; [`power_grad`] draws `u`.
pub fn power_grad_at(x: &SymMatrix, cfg: &PowerOracleConfig, u: &[f64]) -> Result<GradSample> {
    cfg.validate()?;
    let p = cfg.p;
    let q = if cfg.square_input { 2 * p } else { p };
    let ws = mat_power_apply(x, q, u)?;
    let s = if cfg.square_input {
        dot(&ws[p], &ws[p])
    } else {
        dot(&ws[p], u)
    };
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::NonPositiveForm(s));
    }
    let value = s.powf(1.0 / p as f64);
    let coeff = value / (p as f64 * s);
    let mut grad = SymMatrix::zeros(x.dim());
    // The terms j and q-1-j coincide after symmetrization.
    for j in 0..q / 2 {
        grad.add_sym_outer(2.0 * coeff, &ws[j], &ws[q - 1 - j]);
    }
    if q % 2 == 1 {
        let m = q / 2;
        grad.add_sym_outer(coeff, &ws[m], &ws[m]);
    }
    Ok(GradSample { grad, value })
}

pub fn power_grad(
    x: &SymMatrix,
    cfg: &PowerOracleConfig,
    rng: &mut dyn RngCore,
) -> Result<GradSample> {
    let u: Vec<f64> = (0..x.dim()).map(|_| rng.random::<f64>()).collect();
    power_grad_at(x, cfg, &u)
}

pub fn exact_subgrad(x: &SymMatrix) -> GradSample {
    let (value, v) = top_eigpair(x);
    GradSample {
        grad: SymMatrix::outer(&v),
        value,
    }
}

/// Oracle selection as it appears in configs and traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OracleSpec {
    Smoothing { k: usize, epsilon: f64 },
    Power { p: usize, square_input: bool },
    Exact,
}

impl OracleSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            OracleSpec::Smoothing { k, epsilon } => SmoothingOracleConfig { k, epsilon }.validate(),
            OracleSpec::Power { p, square_input } => PowerOracleConfig { p, square_input }.validate(),
            OracleSpec::Exact => Ok(()),
        }
    }
}

impl fmt::Display for OracleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleSpec::Smoothing { k, epsilon } => write!(f, "smoothing(k={k},epsilon={epsilon})"),
            OracleSpec::Power { p, square_input } => {
                write!(f, "power(p={p},square_input={square_input})")
            }
            OracleSpec::Exact => write!(f, "exact"),
        }
    }
}

impl StochasticOracle for OracleSpec {
    fn sample(&self, x: &SymMatrix, rng: &mut dyn RngCore) -> Result<GradSample> {
        match *self {
            OracleSpec::Smoothing { k, epsilon } => {
                smoothing_grad(x, &SmoothingOracleConfig { k, epsilon }, rng)
            }
            OracleSpec::Power { p, square_input } => {
                power_grad(x, &PowerOracleConfig { p, square_input }, rng)
            }
            OracleSpec::Exact => Ok(exact_subgrad(x)),
        }
    }

    fn describe(&self) -> String {
        self.to_string()
    }
}

/// Sample mean and per-entry standard error of many oracle draws.
#[derive(Debug, Clone)]
pub struct MeanGradient {
    pub mean: SymMatrix,
    pub std_err: SymMatrix,
    pub value_mean: f64,
    pub value_std_err: f64,
    pub draws: usize,
}

const MC_CHUNK: usize = 1024;

/// Averages `draws` oracle samples at `x`. Draws are split into fixed chunks,
/// chunk `c` using RNG stream `c` of `seed`, so the result is identical under
/// either execution strategy.
pub fn mean_gradient(
    oracle: &dyn StochasticOracle,
    x: &SymMatrix,
    draws: usize,
    seed: u64,
    exec: Execution,
) -> Result<MeanGradient> {
    if draws < 2 {
        return Err(Error::invalid("draws", "need at least two draws"));
    }
    let d = x.dim();
    let chunks: Vec<(u64, usize)> = (0..draws.div_ceil(MC_CHUNK))
        .map(|c| (c as u64, MC_CHUNK.min(draws - c * MC_CHUNK)))
        .collect();

    let partials = map_ordered(chunks, exec, |(c, n)| -> Result<(Vec<f64>, Vec<f64>, f64, f64)> {
        let mut rng = rng_stream(seed, c);
        let mut sum = vec![0.0; d * d];
        let mut sq = vec![0.0; d * d];
        let (mut vs, mut vsq) = (0.0, 0.0);
        for _ in 0..n {
            let g = oracle.sample(x, &mut rng)?;
            for ((s, q), &gi) in sum.iter_mut().zip(sq.iter_mut()).zip(g.grad.as_slice()) {
                *s += gi;
                *q += gi * gi;
            }
            vs += g.value;
            vsq += g.value * g.value;
        }
        Ok((sum, sq, vs, vsq))
    });

    let mut sum = vec![0.0; d * d];
    let mut sq = vec![0.0; d * d];
    let (mut vs, mut vsq) = (0.0, 0.0);
    for part in partials {
        let (s, q, a, b) = part?;
        sum.iter_mut().zip(&s).for_each(|(x, y)| *x += y);
        sq.iter_mut().zip(&q).for_each(|(x, y)| *x += y);
        vs += a;
        vsq += b;
    }
    let n = draws as f64;
    let se = |s: f64, q: f64| {
        let m = s / n;
        let var = ((q / n - m * m) * n / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    };
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_err: Vec<f64> = sum.iter().zip(&sq).map(|(&s, &q)| se(s, q)).collect();
    Ok(MeanGradient {
        mean: SymMatrix::from_row_major(d, &mean)?,
        std_err: SymMatrix::from_row_major(d, &std_err)?,
        value_mean: vs / n,
        value_std_err: se(vs, vsq),
        draws,
    })
}

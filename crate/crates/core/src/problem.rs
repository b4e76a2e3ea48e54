//! The box-constrained eigenvalue problem, its composite regularization
//! `Ψ(X) = λ_max(X) + μ‖X − X₁‖²`, the closed-form prox step, and the
//! synthetic instance family.

use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{lambda_max, SymMatrix};
use crate::oracles::StochasticOracle;
use crate::parallel::rng_stream;

/// Slack allowed when checking that a start point lies in the box.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// `{X : ‖X − A‖_∞ ≤ ρ}` with the entrywise max-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    center: SymMatrix,
    radius: f64,
}

impl BoxSet {
    pub fn new(center: SymMatrix, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid("radius", format!("must be positive, got {radius}")));
        }
        Ok(BoxSet { center, radius })
    }

    pub fn center(&self) -> &SymMatrix {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Frobenius diameter of the box, `2ρ·d`.
    pub fn diameter_frobenius(&self) -> f64 {
        2.0 * self.radius * self.dim() as f64
    }

    /// Largest entrywise violation `max(|X − A| − ρ, 0)`.
    pub fn violation(&self, x: &SymMatrix) -> f64 {
        x.as_slice()
            .iter()
            .zip(self.center.as_slice())
            .map(|(a, c)| ((a - c).abs() - self.radius).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &SymMatrix, tol: f64) -> bool {
        x.dim() == self.dim() && self.violation(x) <= tol
    }
}

pub fn project_box(x: &SymMatrix, set: &BoxSet) -> Result<SymMatrix> {
    x.check_dim(set.center())?;
    let r = set.radius();
    Ok(x.zip_map(set.center(), |v, c| v.clamp(c - r, c + r)))
}

/// Regularized problem `min_{X ∈ box} F(X) + μ‖X − X₁‖²` with its oracle for `F`.
#[derive(Clone)]
pub struct CompositeProblem {
    pub feasible: BoxSet,
    pub mu: f64,
    pub x1: SymMatrix,
    pub oracle: Arc<dyn StochasticOracle>,
}

impl fmt::Debug for CompositeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("dim", &self.feasible.dim())
            .field("radius", &self.feasible.radius())
            .field("mu", &self.mu)
            .field("oracle", &self.oracle.describe())
            .finish()
    }
}

impl CompositeProblem {
    pub fn new(
        feasible: BoxSet,
        mu: f64,
        x1: SymMatrix,
        oracle: Arc<dyn StochasticOracle>,
    ) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::invalid("mu", format!("must be positive, got {mu}")));
        }
        x1.check_dim(feasible.center())?;
        if !feasible.contains(&x1, FEASIBILITY_TOL) {
            return Err(Error::invalid("x1", "start point lies outside the box"));
        }
        Ok(CompositeProblem {
            feasible,
            mu,
            x1,
            oracle,
        })
    }

    /// Starts at the box center with `μ = 1/√T`.
    pub fn centered(feasible: BoxSet, horizon: usize, oracle: Arc<dyn StochasticOracle>) -> Result<Self> {
        let x1 = feasible.center().clone();
        Self::new(feasible, default_mu(horizon), x1, oracle)
    }

    pub fn dim(&self) -> usize {
        self.feasible.dim()
    }

    /// `H(X) = μ‖X − X₁‖²`.
    pub fn regularizer(&self, x: &SymMatrix) -> f64 {
        self.mu * sq_dist(x, &self.x1)
    }

    /// Bregman divergence of `H`, `μ‖X − Y‖²`.
    pub fn bregman(&self, x: &SymMatrix, y: &SymMatrix) -> f64 {
        self.mu * sq_dist(x, y)
    }
}

pub fn default_mu(horizon: usize) -> f64 {
    1.0 / (horizon.max(1) as f64).sqrt()
}

pub(crate) fn sq_dist(a: &SymMatrix, b: &SymMatrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// `argmin_{x ∈ box} α[⟨g, x⟩ + μ‖x − X₁‖²] + γμ‖x − X_t‖²`.
///
/// The objective is a separable strictly convex quadratic, so clamping the
/// unconstrained stationary point entrywise gives the constrained minimizer.
pub fn prox_step(
    xt: &SymMatrix,
    g: &SymMatrix,
    alpha: f64,
    gamma: f64,
    prob: &CompositeProblem,
) -> Result<SymMatrix> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("alpha", format!("must be positive, got {alpha}")));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::invalid("gamma", format!("must be positive, got {gamma}")));
    }
    xt.check_dim(&prob.x1)?;
    g.check_dim(&prob.x1)?;
    let mu = prob.mu;
    let denom = 2.0 * mu * (alpha + gamma);
    let a = prob.feasible.center().as_slice();
    let r = prob.feasible.radius();

    let mut out = xt.clone();
    let x1 = prob.x1.as_slice();
    let gs = g.as_slice();
    let xs = xt.as_slice();
    for (k, o) in out.data_mut().iter_mut().enumerate() {
        let free = (2.0 * mu * (alpha * x1[k] + gamma * xs[k]) - alpha * gs[k]) / denom;
        *o = free.clamp(a[k] - r, a[k] + r);
        debug_assert!(
            prox_kkt_residual(*o, free, a[k] - r, a[k] + r, denom) <= 1e-9 * denom.max(1.0),
            "prox first-order condition violated"
        );
    }
    Ok(out)
}

/// Violation of the first-order condition `⟨φ'(x*), u − x*⟩ ≥ 0` for the
/// one-dimensional quadratic `φ'(x) = denom·(x − free)` on `[lo, hi]`.
fn prox_kkt_residual(x: f64, free: f64, lo: f64, hi: f64, denom: f64) -> f64 {
    let dphi = denom * (x - free);
    if x <= lo {
        (-dphi).max(0.0)
    } else if x >= hi {
        dphi.max(0.0)
    } else {
        dphi.abs()
    }
}

/// `F(X) = λ_max(X)`, exact.
pub fn eval_f(x: &SymMatrix) -> f64 {
    lambda_max(x)
}

/// `Ψ(X) = λ_max(X) + μ‖X − X₁‖²`.
pub fn eval_psi(x: &SymMatrix, prob: &CompositeProblem) -> f64 {
    eval_f(x) + prob.regularizer(x)
}

/// Problem-dependent constants. The oblivious solvers never read these; the
/// baselines and reports do.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Oracle second-moment bound `E‖G‖² ≤ M²`.
    pub m: Option<f64>,
    /// Smoothness constant of the smoothed objective.
    pub l: Option<f64>,
    /// Oracle variance bound `σ²`.
    pub sigma2: Option<f64>,
    /// Relative-scale oracle bound `E‖G‖² ≤ 2L⋆F`.
    pub lstar: Option<f64>,
    /// Quadratic growth `F(X) ≥ Γ‖X − X₁‖²`.
    pub gamma: Option<f64>,
    /// Distance from the start point to a minimizer of `F`.
    pub d0: Option<f64>,
    /// Transition time after which the oblivious schedule dominates.
    pub t0: Option<usize>,
}

impl Diagnostics {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("M", self.m),
            ("L", self.l),
            ("sigma2", self.sigma2),
            ("Lstar", self.lstar),
            ("Gamma", self.gamma),
            ("D0", self.d0),
        ];
        for (name, v) in reals {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(Error::invalid("diagnostics", format!("{name} = {v} is not positive")));
                }
            }
        }
        if self.t0 == Some(0) {
            return Err(Error::invalid("diagnostics", "T0 must be positive"));
        }
        Ok(())
    }
}

/// A generated box instance together with the parameters that reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub set: BoxSet,
    pub seed: u64,
    pub noise_sigma: f64,
}

/// Synthetic instance: `C = diag(exp(−1), …, exp(−d))` plus i.i.d.
/// `N(0, σ²)` noise on every entry, symmetrized, rescaled to unit max
/// absolute entry, with `ρ = max(diag(A))/2`.
pub fn gen_instance(d: usize, noise_sigma: f64, seed: u64) -> Result<Instance> {
    if d < 1 {
        return Err(Error::invalid("d", "dimension must be at least 1"));
    }
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::invalid("noise_sigma", "must be nonnegative and finite"));
    }
    let mut rng = rng_stream(seed, 0);
    let mut raw = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let c = if i == j { (-((i + 1) as f64)).exp() } else { 0.0 };
            let noise: f64 = rng.sample(StandardNormal);
            raw[i * d + j] = c + noise_sigma * noise;
        }
    }
    let sym = SymMatrix::symmetrize_row_major(d, raw);
    let scale = sym.max_abs();
    let a = sym.map(|x| x / scale);
    let rho = a.diag().into_iter().fold(f64::NEG_INFINITY, f64::max) / 2.0;
    if !(rho > 0.0) {
        return Err(Error::invalid(
            "seed",
            format!("instance (d={d}, seed={seed}) has no positive diagonal entry"),
        ));
    }
    Ok(Instance {
        set: BoxSet::new(a, rho)?,
        seed,
        noise_sigma,
    })
}

const INSTANCE_MAGIC: &str = "# obsmd-instance v1";

impl Instance {
    /// Writes the self-describing text form: a header with `d`, `rho`, `seed`
    /// and `noise_sigma`, then the rows of `A` in shortest round-trip decimal.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let a = self.set.center();
        writeln!(w, "{INSTANCE_MAGIC}")?;
        writeln!(w, "d {}", a.dim())?;
        writeln!(w, "rho {}", self.set.radius())?;
        writeln!(w, "seed {}", self.seed)?;
        writeln!(w, "noise_sigma {}", self.noise_sigma)?;
        writeln!(w, "A")?;
        for i in 0..a.dim() {
            let row: Vec<String> = a.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            loop {
                match lines.next() {
                    Some((n, line)) => {
                        let line = line?;
                        let t = line.trim();
                        if t.is_empty() || (t.starts_with('#') && n > 0) {
                            continue;
                        }
                        return Ok((n + 1, t.to_string()));
                    }
                    None => {
                        return Err(Error::Parse {
                            line: 0,
                            reason: format!("unexpected end of input, expected {what}"),
                        })
                    }
                }
            }
        };
        let (n, magic) = next("header")?;
        if magic != INSTANCE_MAGIC {
            return Err(Error::Parse {
                line: n,
                reason: format!("expected `{INSTANCE_MAGIC}`"),
            });
        }
        fn field<T: std::str::FromStr>((n, line): (usize, String), key: &str) -> Result<T> {
            let mut it = line.split_whitespace();
            match (it.next(), it.next(), it.next()) {
                (Some(k), Some(v), None) if k == key => v.parse().map_err(|_| Error::Parse {
                    line: n,
                    reason: format!("bad value for `{key}`: {v}"),
                }),
                _ => Err(Error::Parse {
                    line: n,
                    reason: format!("expected `{key} <value>`"),
                }),
            }
        }
        let d: usize = field(next("d")?, "d")?;
        let rho: f64 = field(next("rho")?, "rho")?;
        let seed: u64 = field(next("seed")?, "seed")?;
        let noise_sigma: f64 = field(next("noise_sigma")?, "noise_sigma")?;
        let (n, marker) = next("A")?;
        if marker != "A" {
            return Err(Error::Parse {
                line: n,
                reason: "expected `A`".into(),
            });
        }
        let mut data = Vec::with_capacity(d * d);
        for _ in 0..d {
            let (n, line) = next("matrix row")?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| Error::Parse {
                        line: n,
                        reason: format!("bad number `{t}`"),
                    })
                })
                .collect::<Result<_>>()?;
            if row.len() != d {
                return Err(Error::Parse {
                    line: n,
                    reason: format!("expected {d} entries, got {}", row.len()),
                });
            }
            data.extend(row);
        }
        let a = SymMatrix::from_row_major(d, &data)?;
        if a.as_slice() != data.as_slice() {
            return Err(Error::Parse {
                line: 0,
                reason: "matrix A is not symmetric".into(),
            });
        }
        Ok(Instance {
            set: BoxSet::new(a, rho)?,
            seed,
            noise_sigma,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::OracleSpec;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_sym(d: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
        SymMatrix::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    fn problem(set: BoxSet, mu: f64) -> CompositeProblem {
        let x1 = set.center().clone();
        CompositeProblem::new(set, mu, x1, Arc::new(OracleSpec::Exact)).unwrap()
    }

    #[test]
    fn project_box_examples() {
        let set = BoxSet::new(SymMatrix::zeros(3), 1.0).unwrap();
        let x = SymMatrix::identity(3).scale(3.0);
        assert_eq!(project_box(&x, &set).unwrap(), SymMatrix::identity(3));

        let inside = SymMatrix::from_fn(3, |i, j| 0.1 * (i + j) as f64 - 0.2);
        assert_eq!(project_box(&inside, &set).unwrap(), inside);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_sym(3, &mut rng).scale(2.0);
        let p = project_box(&x, &set).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p.get(i, j), x.get(i, j).max(-1.0).min(1.0));
            }
        }
        assert!(project_box(&SymMatrix::zeros(2), &set).is_err());
    }

    #[test]
    fn box_rejects_bad_radius() {
        assert!(BoxSet::new(SymMatrix::zeros(2), 0.0).is_err());
        assert!(BoxSet::new(SymMatrix::zeros(2), f64::NAN).is_err());
    }

    #[test]
    fn problem_rejects_infeasible_start() {
        let set = BoxSet::new(SymMatrix::zeros(2), 0.5).unwrap();
        let far = SymMatrix::identity(2);
        assert!(CompositeProblem::new(set.clone(), 1.0, far, Arc::new(OracleSpec::Exact)).is_err());
        assert!(CompositeProblem::new(set, -1.0, SymMatrix::zeros(2), Arc::new(OracleSpec::Exact)).is_err());
    }

    #[test]
    fn prox_zero_gradient_is_convex_combination() {
        let set = BoxSet::new(SymMatrix::zeros(2), 1.0).unwrap();
        let prob = problem(set, 0.3);
        let xt = SymMatrix::from_fn(2, |i, j| if i == j { 0.8 } else { -0.4 });
        let out = prox_step(&xt, &SymMatrix::zeros(2), 2.0, 3.0, &prob).unwrap();
        let expect = prob.x1.lin_comb(2.0 / 5.0, &xt, 3.0 / 5.0);
        for (a, b) in out.as_slice().iter().zip(expect.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn prox_vanishing_alpha_returns_xt() {
        let set = BoxSet::new(SymMatrix::zeros(2), 1.0).unwrap();
        let prob = problem(set, 0.3);
        let xt = SymMatrix::from_fn(2, |i, j| if i == j { 0.8 } else { -0.4 });
        let g = SymMatrix::identity(2);
        let out = prox_step(&xt, &g, 1e-12, 1.0, &prob).unwrap();
        for (a, b) in out.as_slice().iter().zip(xt.as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(prox_step(&xt, &g, 0.0, 1.0, &prob).is_err());
        assert!(prox_step(&xt, &g, 1.0, -1.0, &prob).is_err());
    }

    fn prox_objective(x: &SymMatrix, xt: &SymMatrix, g: &SymMatrix, a: f64, c: f64, prob: &CompositeProblem) -> f64 {
        a * (crate::linalg::frob_inner(g, x).unwrap() + prob.regularizer(x)) + c * prob.bregman(x, xt)
    }

    #[test]
    fn prox_beats_random_feasible_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let set = BoxSet::new(random_sym(3, &mut rng), 0.5).unwrap();
            let prob = problem(set.clone(), 0.2 + rng.random::<f64>());
            let xt = project_box(&random_sym(3, &mut rng), &set).unwrap();
            let g = random_sym(3, &mut rng);
            let (a, c) = (0.1 + rng.random::<f64>(), 0.1 + rng.random::<f64>());
            let x = prox_step(&xt, &g, a, c, &prob).unwrap();
            let best = prox_objective(&x, &xt, &g, a, c, &prob);
            for _ in 0..1000 {
                let y = SymMatrix::from_fn(3, |i, j| {
                    set.center().get(i, j) + set.radius() * (2.0 * rng.random::<f64>() - 1.0)
                });
                assert!(best <= prox_objective(&y, &xt, &g, a, c, &prob) + 1e-9);
            }
        }
    }

    #[test]
    fn eval_examples() {
        assert!((eval_f(&SymMatrix::from_diag(&[5.0, 1.0])) - 5.0).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let set = BoxSet::new(random_sym(4, &mut rng), 0.3).unwrap();
        let prob = problem(set, 0.5);
        assert_eq!(eval_psi(&prob.x1, &prob), eval_f(&prob.x1));
    }

    #[test]
    fn gen_instance_noiseless() {
        for d in [1, 2, 5, 20] {
            let inst = gen_instance(d, 0.0, 9).unwrap();
            let a = inst.set.center();
            assert_eq!(a.get(0, 0), 1.0);
            assert_eq!(inst.set.radius(), 0.5);
            for i in 0..d {
                let expect = (-((i + 1) as f64)).exp() / (-1.0f64).exp();
                assert!((a.get(i, i) - expect).abs() < 1e-15);
                for j in 0..d {
                    if i != j {
                        assert_eq!(a.get(i, j), 0.0);
                    }
                }
            }
        }
        assert!(gen_instance(0, 0.0, 1).is_err());
    }

    #[test]
    fn gen_instance_noisy_is_normalized_and_deterministic() {
        for sigma in [0.2, 0.05] {
            let a = gen_instance(30, sigma, 4).unwrap();
            let b = gen_instance(30, sigma, 4).unwrap();
            assert_eq!(a, b);
            assert!((a.set.center().max_abs() - 1.0).abs() < 1e-15);
            assert!(a.set.center().is_symmetric());
            let maxdiag = a.set.center().diag().into_iter().fold(f64::MIN, f64::max);
            assert_eq!(a.set.radius(), maxdiag / 2.0);
            assert_ne!(a, gen_instance(30, sigma, 5).unwrap());
        }
    }

    #[test]
    fn instance_text_round_trip() {
        let inst = gen_instance(7, 0.2, 123).unwrap();
        let text = inst.to_text();
        let back = Instance::read_from(text.as_bytes()).unwrap();
        assert_eq!(back, inst);
        assert!(Instance::read_from("garbage\n".as_bytes()).is_err());
        let truncated: String = text.lines().take(8).collect::<Vec<_>>().join("\n");
        assert!(Instance::read_from(truncated.as_bytes()).is_err());
    }

    #[test]
    fn diagnostics_validate() {
        assert!(Diagnostics::default().validate().is_ok());
        let bad = Diagnostics {
            l: Some(-1.0),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn projection_idempotent_nonexpansive(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let set = BoxSet::new(random_sym(4, &mut rng), 0.1 + rng.random::<f64>()).unwrap();
            let x = random_sym(4, &mut rng).scale(3.0);
            let y = random_sym(4, &mut rng).scale(3.0);
            let px = project_box(&x, &set).unwrap();
            let py = project_box(&y, &set).unwrap();
            prop_assert_eq!(&project_box(&px, &set).unwrap(), &px);
            prop_assert!(px.is_symmetric());
            prop_assert!(sq_dist(&px, &py).sqrt() <= sq_dist(&x, &y).sqrt() + 1e-12);
            prop_assert!(set.contains(&px, FEASIBILITY_TOL));
        }
    }
}

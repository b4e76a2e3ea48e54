use std::time::{Duration, Instant};

use crate::linalg::SymMatrix;
use crate::problem::{eval_f, CompositeProblem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub t: usize,
    pub f_ag: f64,
    pub psi_ag: f64,
    pub grad_norm: f64,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub iterations: Vec<TracePoint>,
    pub final_point: SymMatrix,
    pub config_echo: String,
    pub seed: u64,
    /// Step size actually applied at every iteration (`α_t/γ_t`-style ratio
    /// for the mirror-descent solvers, `η_t` for the projected baselines).
    pub step_sizes: Vec<f64>,
    /// Wall time spent inside the oracle.
    pub oracle_seconds: f64,
    /// Iterate history when requested: `X_1 … X_{T+1}`.
    pub iterates: Vec<SymMatrix>,
    /// Aggregate history when requested: the reported point after each step.
    pub aggregates: Vec<SymMatrix>,
}

impl RunTrace {
    pub fn last(&self) -> &TracePoint {
        self.iterations.last().expect("trace is never empty")
    }

    pub fn total_seconds(&self) -> f64 {
        self.last().elapsed_seconds
    }
}

/// Evaluation stride and history retention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub stride: usize,
    pub keep_iterates: bool,
}

impl RunOptions {
    /// Every iteration up to `d = 150`, every tenth beyond.
    pub fn for_dim(d: usize) -> Self {
        RunOptions {
            stride: if d <= 150 { 1 } else { 10 },
            keep_iterates: false,
        }
    }

    pub fn with_iterates(mut self) -> Self {
        self.keep_iterates = true;
        self
    }
}

/// Bookkeeping shared by all solvers. Time spent evaluating `F` and `Ψ` for
/// the trace is excluded from the reported elapsed time.
pub(crate) struct Recorder<'a> {
    prob: &'a CompositeProblem,
    opts: RunOptions,
    horizon: usize,
    start: Instant,
    excluded: Duration,
    oracle: Duration,
    points: Vec<TracePoint>,
    steps: Vec<f64>,
    iterates: Vec<SymMatrix>,
    aggregates: Vec<SymMatrix>,
}

impl<'a> Recorder<'a> {
    pub fn new(prob: &'a CompositeProblem, opts: RunOptions, horizon: usize) -> Self {
        let mut rec = Recorder {
            prob,
            opts,
            horizon,
            start: Instant::now(),
            excluded: Duration::ZERO,
            oracle: Duration::ZERO,
            points: Vec::with_capacity(horizon / opts.stride.max(1) + 1),
            steps: Vec::with_capacity(horizon),
            iterates: Vec::new(),
            aggregates: Vec::new(),
        };
        if opts.keep_iterates {
            rec.iterates.push(prob.x1.clone());
        }
        rec
    }

    pub fn time_oracle<T>(&mut self, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.oracle += t0.elapsed();
        out
    }

    /// Records iteration `t` given the new iterate and the current aggregate.
    pub fn step(&mut self, t: usize, step: f64, grad_norm: f64, next: &SymMatrix, aggregate: &SymMatrix) {
        self.steps.push(step);
        if self.opts.keep_iterates {
            self.iterates.push(next.clone());
            self.aggregates.push(aggregate.clone());
        }
        let stride = self.opts.stride.max(1);
        if t % stride == 0 || t == 1 || t == self.horizon {
            let paused = Instant::now();
            let elapsed = (paused - self.start).saturating_sub(self.excluded).as_secs_f64();
            let f_ag = eval_f(aggregate);
            let psi_ag = f_ag + self.prob.regularizer(aggregate);
            self.points.push(TracePoint {
                t,
                f_ag,
                psi_ag,
                grad_norm,
                elapsed_seconds: elapsed,
            });
            self.excluded += paused.elapsed();
        }
    }

    pub fn finish(self, final_point: SymMatrix, config_echo: String, seed: u64) -> RunTrace {
        RunTrace {
            iterations: self.points,
            final_point,
            config_echo,
            seed,
            step_sizes: self.steps,
            oracle_seconds: self.oracle.as_secs_f64(),
            iterates: self.iterates,
            aggregates: self.aggregates,
        }
    }
}

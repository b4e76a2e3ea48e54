//! Oblivious solvers, their step-size family, and the parameterized baselines.

mod baselines;
mod oblivious;
mod schedule;
mod trace;

pub use baselines::{lan_acsa, levy_adaptive, relative_md, relative_step};
pub use oblivious::{oblivious_acsmd, oblivious_smd};
pub use schedule::{StepSchedule, SCHEDULE_REL_SLACK};
pub use trace::{RunOptions, RunTrace, TracePoint};

/// RNG stream reserved for solver noise; stream 0 belongs to instance generation.
pub const SOLVER_STREAM: u64 = 1;

pub mod error;
pub mod harness;
pub mod linalg;
pub mod oracles;
pub mod parallel;
pub mod problem;
pub mod solvers;

//! Experiment runner: reference optima, theory constants, benchmark cells,
//! reports and trace files.

mod bench;
mod config;
mod reference;
mod theory;
mod trace_io;
mod verify;

pub use bench::{
    iterations_to_precision, run_bench, run_solver, summarize, BenchReport, CellOutcome, CellResult, CellSummary,
    DimReference, RunContext,
};
pub use config::{parse_oracle, ExperimentConfig, SolverSpec, TUNE_D, TUNE_L, TUNE_LSTAR};
pub use reference::{reference_value, Reference, MIN_REFERENCE_BUDGET};
pub use theory::estimate_diagnostics;
pub use trace_io::{parse_trace_csv, trace_to_csv, TraceFile, TRACE_HEADER};
pub use verify::{verify_suite, Check};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::OracleSpec;
    use crate::problem::{gen_instance, BoxSet};
    use crate::linalg::SymMatrix;
    use crate::solvers::TracePoint;

    fn pts(gaps: &[f64]) -> Vec<TracePoint> {
        gaps.iter()
            .enumerate()
            .map(|(i, &g)| TracePoint {
                t: i + 1,
                f_ag: g,
                psi_ag: g,
                grad_norm: 1.0,
                elapsed_seconds: i as f64,
            })
            .collect()
    }

    #[test]
    fn precision_examples() {
        assert_eq!(iterations_to_precision(&pts(&[0.001, 0.5]), 0.0, 1e-2).unwrap(), Some(1));
        assert_eq!(iterations_to_precision(&pts(&[0.5, 0.1, 0.009]), 0.0, 1e-2).unwrap(), Some(3));
        assert_eq!(iterations_to_precision(&pts(&[0.5, 0.1]), 0.0, 1e-2).unwrap(), None);
        assert!(iterations_to_precision(&[], 0.0, 1e-2).is_err());
        assert!(iterations_to_precision(&pts(&[0.1]), 0.0, 0.0).is_err());
    }

    #[test]
    fn reference_interval_endpoint() {
        let (a, rho) = (0.8, 0.3);
        let set = BoxSet::new(SymMatrix::from_diag(&[a]), rho).unwrap();
        let r = reference_value(&set, MIN_REFERENCE_BUDGET, 0).unwrap();
        assert!((r.value - (a - rho)).abs() <= 1e-9, "{}", r.value);
        assert!(reference_value(&set, 100, 0).is_err());
        assert!(r.audit_csv().starts_with("stage,k,F\n"));
    }

    #[test]
    fn solver_and_oracle_strings() {
        let s: SolverSpec = "smd:3".parse().unwrap();
        assert_eq!(s, SolverSpec::ObliviousSmd { degree: 3, scale: 1.0 });
        assert_eq!("acsmd".parse::<SolverSpec>().unwrap().label(false), "oblivious_acsmd-1");
        let tuned: SolverSpec = "lan-tuned".parse().unwrap();
        assert_eq!(tuned.label(false), "lan-tuned");
        assert_eq!("levy".parse::<SolverSpec>().unwrap().label(true), "levy-tuned");
        assert!("levy:2".parse::<SolverSpec>().is_err());
        assert!("smd-tuned".parse::<SolverSpec>().is_err());
        assert!("newton".parse::<SolverSpec>().is_err());

        assert_eq!(parse_oracle("smoothing").unwrap(), OracleSpec::Smoothing { k: 1, epsilon: 1e-2 });
        assert_eq!(
            parse_oracle("power:p=5,square_input=false").unwrap(),
            OracleSpec::Power { p: 5, square_input: false }
        );
        assert_eq!(parse_oracle("exact").unwrap(), OracleSpec::Exact);
        assert!(parse_oracle("smoothing:k=0").is_err());
        assert!(parse_oracle("power:q=3").is_err());
    }

    const CFG: &str = r#"
dims = [4, 3]
T = 20
seeds = [0, 1]
output_dir = "unused"

[oracle]
kind = "smoothing"
k = 1
epsilon = 0.01

[[solvers]]
kind = "oblivious_smd"
degree = 2

[[solvers]]
kind = "levy"
D = 3.0
hyper_tuned = true
"#;

    #[test]
    fn config_round_trip() {
        let cfg = ExperimentConfig::from_toml(CFG).unwrap();
        assert_eq!(cfg.horizon, 20);
        assert_eq!(cfg.target_precision, 1e-2);
        assert_eq!(cfg.reference_budget, MIN_REFERENCE_BUDGET);
        assert_eq!(cfg.solvers[1].label(cfg.hyper_tuned), "levy-tuned");
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert!(cfg.echo().lines().all(|l| l.starts_with("# ")));
    }

    #[test]
    fn config_rejects_bad_values() {
        for (from, to) in [
            ("T = 20", "T = 0"),
            ("seeds = [0, 1]", "seeds = []"),
            ("dims = [4, 3]", "dims = []"),
            ("epsilon = 0.01", "epsilon = -1.0"),
            ("degree = 2", "degree = 2\nstep = 1"),
        ] {
            let text = CFG.replace(from, to);
            assert!(ExperimentConfig::from_toml(&text).is_err(), "accepted {to}");
        }
        let dup = format!("{CFG}\n[[solvers]]\nkind = \"oblivious_smd\"\ndegree = 2\n");
        assert!(ExperimentConfig::from_toml(&dup).is_err());
    }

    #[test]
    fn summary_quantiles_bracket_median() {
        let mk = |it: Option<usize>| CellResult {
            dim: 5,
            solver: "x".into(),
            seed: 0,
            outcome: Ok(CellOutcome {
                iterations: it,
                final_gap: 0.1,
                wall_seconds: 0.0,
                oracle_seconds: 0.0,
            }),
        };
        let cells: Vec<CellResult> = [Some(10), Some(30), None, Some(20)].into_iter().map(mk).collect();
        let refs: Vec<&CellResult> = cells.iter().collect();
        let s = summarize(5, "x", &refs);
        assert_eq!(s.median, Some(25.0));
        assert_eq!(s.lo, Some(10.0));
        assert_eq!(s.hi, None);

        let mostly_out: Vec<CellResult> = [None, None, Some(3)].into_iter().map(mk).collect();
        let refs: Vec<&CellResult> = mostly_out.iter().collect();
        let s = summarize(5, "x", &refs);
        assert_eq!((s.median, s.lo), (None, Some(3.0)));
    }

    #[test]
    fn missing_theory_constant_is_an_error() {
        let inst = gen_instance(3, 0.2, 0).unwrap();
        let ctx = RunContext {
            set: inst.set,
            oracle: OracleSpec::Exact,
            horizon: 5,
            mu: None,
            diagnostics: Default::default(),
        };
        let lan: SolverSpec = "lan".parse().unwrap();
        let err = run_solver(&lan, false, &ctx, 0, crate::solvers::RunOptions::for_dim(3)).unwrap_err();
        assert!(err.to_string().contains("needs L"));
    }

    #[test]
    fn verify_suite_passes() {
        for c in verify_suite(0) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}

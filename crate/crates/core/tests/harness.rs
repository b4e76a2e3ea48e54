use obsmd::harness::*;
use obsmd::linalg::lambda_max;
use obsmd::problem::gen_instance;
use obsmd::solvers::TracePoint;
use proptest::prelude::*;

/// `min max(x₁, x₂)` over the diagonal of the box, by a 2-D grid.
fn grid_diag_min(a: [f64; 2], rho: f64, n: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..=n {
        for j in 0..=n {
            let x1 = a[0] - rho + 2.0 * rho * i as f64 / n as f64;
            let x2 = a[1] - rho + 2.0 * rho * j as f64 / n as f64;
            best = best.min(x1.max(x2));
        }
    }
    best
}

#[test]
fn reference_matches_grid_on_diagonal_instance() {
    let inst = gen_instance(2, 0.0, 5).unwrap();
    let a = inst.set.center();
    assert_eq!(a.get(0, 1), 0.0);
    let grid = grid_diag_min([a.get(0, 0), a.get(1, 1)], inst.set.radius(), 2000);
    let r = reference_value(&inst.set, MIN_REFERENCE_BUDGET, 0).unwrap();
    assert!((r.value - grid).abs() <= 1e-4, "{} vs {grid}", r.value);
    assert!((lambda_max(&r.point) - r.value).abs() <= 1e-12);
    assert!(inst.set.contains(&r.point, 1e-12));
}

#[test]
fn reference_is_seed_independent() {
    let inst = gen_instance(6, 0.2, 2).unwrap();
    let a = reference_value(&inst.set, MIN_REFERENCE_BUDGET, 1).unwrap();
    let b = reference_value(&inst.set, MIN_REFERENCE_BUDGET, 77).unwrap();
    assert!((a.value - b.value).abs() <= 1e-4);
    assert!(a.value <= lambda_max(inst.set.center()));
}

#[test]
fn failing_cells_are_reported_and_the_run_continues() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(&format!(
        r#"dims = [3]
T = 5
seeds = [0, 1]
output_dir = "{}"

[oracle]
kind = "exact"

[[solvers]]
kind = "oblivious_smd"
degree = 1

[[solvers]]
kind = "lan"
"#,
        dir.path().display()
    ))
    .unwrap();
    let report = run_bench(&cfg).unwrap();
    assert_eq!(report.cells.len(), 4);
    let text = report.to_text();
    let csv = report.to_csv();
    // No smoothness constant exists for the exact oracle, so every Lan cell fails.
    let failed: Vec<&CellResult> = report.cells.iter().filter(|c| c.outcome.is_err()).collect();
    assert_eq!(failed.len(), 2);
    assert!(failed.iter().all(|c| c.solver == "lan"));
    assert_eq!(csv.lines().filter(|l| l.contains(",error: ")).count(), 2);
    assert!(text.contains("Failures") && text.contains("failed"));
    assert_eq!(report.summary(3, "oblivious_smd-1").unwrap().failed, 0);
    assert!(dir.path().join("report.txt").exists());
}

#[test]
fn bench_rows_cover_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(&format!(
        r#"dims = [2, 3]
T = 10
seeds = [4, 5, 6]
output_dir = "{}"
target_precision = 0.5

[oracle]
kind = "exact"

[[solvers]]
kind = "oblivious_smd"
degree = 1

[[solvers]]
kind = "oblivious_acsmd"
degree = 2

[[solvers]]
kind = "levy"
"#,
        dir.path().display()
    ))
    .unwrap();
    let report = run_bench(&cfg).unwrap();
    assert_eq!(report.cells.len(), 2 * 3 * 3);
    assert_eq!(report.summaries.len(), 2 * 3);
    for s in &report.summaries {
        let key = |v: Option<f64>| v.unwrap_or(f64::INFINITY);
        assert!(key(s.lo) <= key(s.median) && key(s.median) <= key(s.hi));
    }
    let traces = std::fs::read_dir(dir.path().join("traces")).unwrap().count();
    assert_eq!(traces, 18);
    let f = std::fs::File::open(dir.path().join("traces/d3_levy_s5.csv")).unwrap();
    let parsed = parse_trace_csv(std::io::BufReader::new(f)).unwrap();
    assert_eq!(parsed.seed, 5);
    assert_eq!(parsed.points.len(), 10);
    assert!(parsed.notes.iter().any(|n| n == "T = 10"));
}

fn point() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (any::<f64>(), -1e6f64..1e6, 0.0f64..10.0, 0.0f64..1e4)
}

proptest! {
    #[test]
    fn trace_csv_round_trip(rows in prop::collection::vec(point(), 1..40), seed in any::<u64>()) {
        let points: Vec<TracePoint> = rows
            .iter()
            .enumerate()
            .map(|(i, &(f, psi, g, e))| TracePoint { t: 3 * i + 1, f_ag: f, psi_ag: psi, grad_norm: g, elapsed_seconds: e })
            .collect();
        let file = TraceFile {
            seed,
            config_echo: "solver=x;T=9".into(),
            notes: vec!["dims = [1]".into(), String::new()],
            points,
        };
        let back = parse_trace_csv(trace_to_csv(&file).as_bytes()).unwrap();
        prop_assert_eq!(back.seed, file.seed);
        prop_assert_eq!(&back.notes, &file.notes);
        prop_assert_eq!(back.points.len(), file.points.len());
        for (a, b) in back.points.iter().zip(&file.points) {
            prop_assert_eq!(a.t, b.t);
            prop_assert_eq!(a.f_ag.to_bits(), b.f_ag.to_bits());
            prop_assert_eq!(a.psi_ag.to_bits(), b.psi_ag.to_bits());
            prop_assert_eq!(a.grad_norm.to_bits(), b.grad_norm.to_bits());
            prop_assert_eq!(a.elapsed_seconds.to_bits(), b.elapsed_seconds.to_bits());
        }
    }
}

#[test]
fn malformed_traces_are_rejected() {
    let good = "#! seed=1\n#! run=x\nt,F_ag,Psi_ag,grad_norm,elapsed_s\n1,1,1,1,0\n";
    assert!(parse_trace_csv(good.as_bytes()).is_ok());
    for bad in [
        good.replace("t,F_ag", "t,F"),
        good.replace("1,1,1,1,0", "1,1,1,0"),
        good.replace("#! seed=1\n", ""),
        format!("{good}1,1,1,1,0\n"),
        good.replace("1,1,1,1,0", "1,x,1,1,0"),
    ] {
        assert!(parse_trace_csv(bad.as_bytes()).is_err(), "accepted {bad:?}");
    }
}

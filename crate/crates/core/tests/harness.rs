use mimobc::harness::experiment::{format_sig, TRACE_COLUMNS};
use mimobc::harness::{header, run_experiment, Algorithm, ExperimentConfig};

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(text).unwrap()
}

fn csv_of(cfg: &ExperimentConfig) -> String {
    let mut buf = Vec::new();
    run_experiment(cfg).unwrap().write_csv(&mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

fn without_wall_seconds(csv: &str) -> Vec<String> {
    let col = header(2).iter().position(|c| c == "wall_seconds").unwrap();
    csv.lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f.remove(col);
            f.join(",")
        })
        .collect()
}

#[test]
fn header_is_stable() {
    assert_eq!(
        header(3).join(","),
        "snr_db,algorithm,sum_rate,rate_user1,rate_user2,rate_user3,mc_stderr,samples_used,wall_seconds,seed"
    );
    assert_eq!(
        TRACE_COLUMNS.join(","),
        "snr_db,start,iteration,objective,step_f,step_p,grad_f_norm,grad_p_norm"
    );
}

#[test]
fn nine_significant_digits() {
    assert_eq!(format_sig(1.0), "1.00000000");
    assert_eq!(format_sig(-10.0), "-10.0000000");
    assert_eq!(format_sig(12.3456789012), "12.3456789");
    assert_eq!(format_sig(0.000123456789012), "0.000123456789");
    assert_eq!(format_sig(123456789012.0), "123456789012");
    assert_eq!(format_sig(9.999999999), "10.0000000");
    assert_eq!(format_sig(0.0), "0.00000000");
}

#[test]
fn identical_runs_give_identical_csv() {
    let cfg = config(
        r#"{"scenario": "example1", "snr_grid_db": [0, 8], "algorithms": ["alg1", "alg2", "tdma", "no_interference_bound"],
            "samples": 400, "seed": 11, "n_starts": 2}"#,
    );
    let a = csv_of(&cfg);
    let b = csv_of(&cfg);
    assert_eq!(without_wall_seconds(&a), without_wall_seconds(&b));
    assert_eq!(a.lines().count(), 1 + 2 * 4);
}

#[test]
fn results_do_not_depend_on_the_worker_count() {
    let cfg = config(
        r#"{"scenario": "example2", "snr_grid_db": [-4, 4, 12], "algorithms": ["alg2", "tdma"], "samples": 3000}"#,
    );
    let run_with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| csv_of(&cfg))
    };
    assert_eq!(without_wall_seconds(&run_with(1)), without_wall_seconds(&run_with(3)));
}

#[test]
fn sweep_is_monotone_and_below_the_bound() {
    let cfg = config(
        r#"{"scenario": "example1", "snr_grid_db": [-10, -6, -2, 2, 6, 10, 14, 18, 22],
            "algorithms": ["alg2", "tdma", "no_interference_bound"], "samples": 2000}"#,
    );
    let out = run_experiment(&cfg).unwrap();
    for alg in [Algorithm::Alg2, Algorithm::Tdma, Algorithm::NoInterferenceBound] {
        let rates: Vec<f64> = out.rows_for(alg).map(|r| r.sum_rate).collect();
        assert_eq!(rates.len(), 9);
        assert!(rates.windows(2).all(|w| w[1] >= w[0]), "{alg:?}: {rates:?}");
    }
    let bound: Vec<_> = out.rows_for(Algorithm::NoInterferenceBound).collect();
    for row in &out.rows {
        let b = bound.iter().find(|b| b.snr_db == row.snr_db).unwrap();
        assert!(row.sum_rate >= 0.0);
        assert!(row.sum_rate <= b.sum_rate + 3.0 * b.mc_stderr, "{row:?}");
        assert_eq!(row.samples_used, 2000);
    }
}

#[test]
fn finite_support_bound_has_zero_stderr() {
    let cfg = config(
        r#"{"scenario": {"users": [
              {"model": "finite_support", "atoms": [{"h": [[[1,0],[0,1]],[[0.5,0],[1,0]]], "p": 0.25},
                                                     {"h": [[[0,1],[1,0]],[[1,0],[0.2,0]]], "p": 0.75}]},
              {"model": "finite_support", "atoms": [{"h": [[[1,0],[1,0]],[[0,1],[0,-1]]], "p": 1.0}]}]},
            "snr_grid_db": [0, 10], "algorithms": ["simplified_bound", "alg2", "tdma"], "normalize": "off"}"#,
    );
    let out = run_experiment(&cfg).unwrap();
    assert!(out.rows.iter().all(|r| r.mc_stderr == 0.0 && r.samples_used == 0));
    let sb: Vec<f64> = out.rows_for(Algorithm::SimplifiedBound).map(|r| r.sum_rate).collect();
    let a2: Vec<f64> = out.rows_for(Algorithm::Alg2).map(|r| r.sum_rate).collect();
    for (b, a) in sb.iter().zip(&a2) {
        assert!(a <= &(b + 1e-9));
    }
}

#[test]
fn auto_samples_are_recorded() {
    let cfg = config(r#"{"scenario": "example1", "snr_grid_db": [0], "algorithms": ["alg2"], "samples": "auto"}"#);
    let out = run_experiment(&cfg).unwrap();
    let n = out.rows[0].samples_used;
    assert!(n >= 1000 && n % 1000 == 0, "{n}");
}

#[test]
fn trace_csv_rows_are_monotone_per_start() {
    let cfg = config(
        r#"{"scenario": "example2", "snr_grid_db": [10], "algorithms": ["alg1"], "samples": 500, "n_starts": 3}"#,
    );
    let out = run_experiment(&cfg).unwrap();
    let mut buf = Vec::new();
    out.write_trace_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), TRACE_COLUMNS.join(","));
    for start in 0..3 {
        let obj: Vec<f64> = out.traces.iter().filter(|t| t.start == start).map(|t| t.objective).collect();
        assert!(!obj.is_empty());
        assert!(obj.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn outputs_are_written_to_the_configured_paths() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("rates.csv");
    let trace_path = dir.path().join("trace.csv");
    let text = format!(
        r#"{{"scenario": "example1", "snr_grid_db": [0], "algorithms": ["alg1"], "samples": 300,
             "output": {:?}, "trace_output": {:?}}}"#,
        out_path.to_str().unwrap(),
        trace_path.to_str().unwrap()
    );
    mimobc::harness::run_and_write(&config(&text)).unwrap();
    assert_eq!(std::fs::read_to_string(&out_path).unwrap().lines().count(), 2);
    assert!(std::fs::read_to_string(&trace_path).unwrap().lines().count() >= 2);
}

#[test]
fn opportunistic_on_multi_antenna_fixture_is_an_error() {
    let cfg = config(r#"{"scenario": "example1", "snr_grid_db": [0], "algorithms": ["opportunistic"], "samples": 10}"#);
    let err = run_experiment(&cfg).unwrap_err();
    assert!(err.to_string().contains("opportunistic"), "{err}");
}

//! End-to-end tests of the `krig` binary: each test runs the compiled
//! executable as a subprocess and asserts on stdout/stderr/exit status.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kriging::kernels::{Design, KernelSpec};
use kriging::likelihood::{pi_tolerance_for_condition, smallest_nugget_for_condition};
use kriging::model::{KrigingModel, RegularizationPolicy};
use kriging::spectral::SpectralDecomposition;

const SE_KERNEL: &str = r#"{"kind":"SquaredExponential","sigma2":1.0,"theta":[0.3]}"#;

fn krig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_krig"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process not killed by signal")
}

/// One observation per line at sites 1, 1.5, 2, 2.5, 3 with repeated
/// measurements; the within-site means are (-2, -0.5, 5, 5.5, 3).
fn averaging_csv() -> &'static str {
    "x1,y\n\
     1.0,-2.0\n\
     1.5,-1.0\n\
     1.5,0.0\n\
     2.0,1.5\n\
     2.0,4.0\n\
     2.0,7.0\n\
     2.0,7.5\n\
     2.5,6.0\n\
     2.5,5.0\n\
     3.0,3.0\n"
}

fn write_file(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, contents).expect("write test file");
    path
}

fn averaging_design_and_outputs() -> (Design, Vec<f64>) {
    let xs = [1.0, 1.5, 1.5, 2.0, 2.0, 2.0, 2.0, 2.5, 2.5, 3.0];
    let ys = vec![-2.0, -1.0, 0.0, 1.5, 4.0, 7.0, 7.5, 6.0, 5.0, 3.0];
    let design = Design::new(xs.iter().map(|&x| vec![x]).collect()).unwrap();
    (design, ys)
}

#[test]
fn fit_predict_interpolates_site_means_with_zero_variance() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_file(dir.path(), "data.csv", averaging_csv());
    let out = krig(&[
        "fit-predict",
        "--data",
        data.to_str().unwrap(),
        "--kernel",
        SE_KERNEL,
        "--grid",
        "1.5:2.5:3",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));

    let stdout = stdout_of(&out);
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("x1,mean,variance"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    let expected = [(1.5, -0.5), (2.0, 5.0), (2.5, 5.5)];
    for (row, (x, mean)) in rows.iter().zip(expected) {
        assert!((row[0] - x).abs() < 1e-12);
        assert!(
            (row[1] - mean).abs() < 1e-8,
            "mean at {x}: got {}, want {mean}",
            row[1]
        );
        assert!(row[2].abs() < 1e-8, "variance at {x}: got {}", row[2]);
    }
}

#[test]
fn grid_predictions_match_library_calls_digit_for_digit() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_file(dir.path(), "data.csv", averaging_csv());
    let out = krig(&[
        "fit-predict",
        "--data",
        data.to_str().unwrap(),
        "--kernel",
        SE_KERNEL,
        "--grid",
        "0.8:3.2:101",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));

    let (design, ys) = averaging_design_and_outputs();
    let kernel = KernelSpec::squared_exponential(1.0, vec![0.3]).unwrap();
    let model = KrigingModel::fit(design, &ys, kernel, RegularizationPolicy::pi()).unwrap();

    let stdout = stdout_of(&out);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 102);
    for (i, line) in lines[1..].iter().enumerate() {
        let x = 0.8 + (3.2 - 0.8) * i as f64 / 100.0;
        let mean = model.predict_mean(&[x]).unwrap();
        let var = model.predict_var(&[x]).unwrap();
        let expected = format!("{x:.14e},{mean:.14e},{var:.14e}");
        assert_eq!(*line, expected, "row {i}");
    }
}

#[test]
fn empty_grid_prints_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_file(dir.path(), "data.csv", averaging_csv());
    let out = krig(&[
        "fit-predict",
        "--data",
        data.to_str().unwrap(),
        "--kernel",
        SE_KERNEL,
        "--grid",
        "2:3:0",
    ]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(stdout_of(&out), "x1,mean,variance\n");
}

#[test]
fn json_format_carries_the_same_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_file(dir.path(), "data.csv", averaging_csv());
    let out = krig(&[
        "fit-predict",
        "--data",
        data.to_str().unwrap(),
        "--kernel",
        SE_KERNEL,
        "--grid",
        "2:2:1",
        "--format",
        "json",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let rows: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let row = &rows.as_array().unwrap()[0];
    assert_eq!(row["x"].as_array().unwrap().len(), 1);
    assert!((row["mean"].as_f64().unwrap() - 5.0).abs() < 1e-8);
    assert!(row["variance"].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn malformed_csv_is_a_usage_error_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_file(dir.path(), "bad.csv", "x1,y\n1.0,-2.0\n1.5,oops\n2.0,1.5\n");
    let out = krig(&["fit-predict", "--data", data.to_str().unwrap(), "--kernel", SE_KERNEL]);
    assert_eq!(exit_code(&out), 2);
    let stderr = stderr_of(&out);
    assert!(stderr.contains("line 3"), "stderr: {stderr}");
}

#[test]
fn wrong_header_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_file(dir.path(), "bad.csv", "a,b\n1.0,-2.0\n");
    let out = krig(&["fit-predict", "--data", data.to_str().unwrap(), "--kernel", SE_KERNEL]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("x1"), "stderr: {}", stderr_of(&out));
}

#[test]
fn exact_policy_on_singular_data_suggests_both_remedies() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_file(dir.path(), "data.csv", averaging_csv());
    let out = krig(&[
        "fit-predict",
        "--data",
        data.to_str().unwrap(),
        "--kernel",
        SE_KERNEL,
        "--policy",
        "exact",
    ]);
    assert_eq!(exit_code(&out), 3);
    let stderr = stderr_of(&out);
    assert!(stderr.contains("--policy pi --eta"), "stderr: {stderr}");
    assert!(stderr.contains("--tau2"), "stderr: {stderr}");
}

#[test]
fn nugget_policy_requires_tau2_and_rejects_eta() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_file(dir.path(), "data.csv", averaging_csv());
    let missing = krig(&[
        "fit-predict",
        "--data",
        data.to_str().unwrap(),
        "--kernel",
        SE_KERNEL,
        "--policy",
        "nugget",
    ]);
    assert_eq!(exit_code(&missing), 2);
    assert!(stderr_of(&missing).contains("--tau2"));

    let eta_misuse = krig(&[
        "fit-predict",
        "--data",
        data.to_str().unwrap(),
        "--kernel",
        SE_KERNEL,
        "--policy",
        "nugget",
        "--tau2",
        "0.1",
        "--eta",
        "1e-8",
    ]);
    assert_eq!(exit_code(&eta_misuse), 2);
    assert!(stderr_of(&eta_misuse).contains("--eta"));
}

#[test]
fn grid_dimension_mismatch_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_file(dir.path(), "data.csv", averaging_csv());
    let out = krig(&[
        "fit-predict",
        "--data",
        data.to_str().unwrap(),
        "--kernel",
        SE_KERNEL,
        "--grid",
        "0:1:5,0:1:5",
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("dimension"));
}

#[test]
fn diagnose_reports_redundancy_groups_one_based() {
    let dir = tempfile::tempdir().unwrap();
    let csv = "x1,x2,y\n\
               0.2,0.3,1.0\n\
               0.2,0.3,1.0\n\
               0.5,0.7,2.0\n\
               0.5,0.7,2.0\n\
               0.8,0.4,3.0\n\
               0.2,0.3,1.0\n";
    let data = write_file(dir.path(), "data.csv", csv);
    let kernel = r#"{"kind":"SquaredExponential","sigma2":1.0,"theta":[0.25,0.25]}"#;
    let out = krig(&["diagnose", "--data", data.to_str().unwrap(), "--kernel", kernel]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));

    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let groups = report["groups"].as_array().unwrap();
    assert_eq!(groups.len(), 2);
    assert_eq!(groups[0]["indices"], serde_json::json!([1, 2, 6]));
    assert_eq!(groups[0]["degree"], 2);
    assert_eq!(groups[1]["indices"], serde_json::json!([3, 4]));
    assert_eq!(groups[1]["degree"], 1);
    // Outputs agree at every duplicated point, so nothing is unexplainable.
    assert!(report["discr_sq_ratio"].as_f64().unwrap() < 1e-12);

    let csv_mode = krig(&[
        "diagnose",
        "--data",
        data.to_str().unwrap(),
        "--kernel",
        kernel,
        "--format",
        "csv",
    ]);
    assert_eq!(exit_code(&csv_mode), 2);
}

#[test]
fn diagnose_on_full_rank_data_reports_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let csv = "x1,y\n0.0,1.0\n1.0,2.0\n2.5,0.5\n4.0,1.5\n";
    let data = write_file(dir.path(), "data.csv", csv);
    let out = krig(&["diagnose", "--data", data.to_str().unwrap(), "--kernel", SE_KERNEL]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(report["pairs"].as_array().unwrap().len(), 0);
    assert_eq!(report["groups"].as_array().unwrap().len(), 0);
    assert!(report["discr_sq_ratio"].as_f64().unwrap() < 1e-12);
}

#[test]
fn tune_emits_fixed_keys_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_file(dir.path(), "data.csv", averaging_csv());
    let args = [
        "tune",
        "--data",
        data.to_str().unwrap(),
        "--kernel",
        SE_KERNEL,
        "--ml",
        "--cv",
    ];
    let first = krig(&args);
    assert_eq!(exit_code(&first), 0, "stderr: {}", stderr_of(&first));
    let second = krig(&args);
    assert_eq!(stdout_of(&first), stdout_of(&second), "tuning must be deterministic");

    let stdout = stdout_of(&first);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let expected_keys = ["tau2_ml", "tau2_cv", "theta", "sigma2", "objective", "evaluations"];
    assert_eq!(report.as_object().unwrap().len(), expected_keys.len());
    let mut last_at = 0;
    for key in expected_keys {
        let at = stdout
            .find(&format!("\"{key}\""))
            .unwrap_or_else(|| panic!("key '{key}' missing from {stdout}"));
        assert!(at > last_at, "key '{key}' out of order in {stdout}");
        last_at = at;
    }
    assert!(report["tau2_ml"].as_f64().unwrap() > 0.0);
    assert!(report["tau2_cv"].as_f64().unwrap() > 0.0);
    assert!(report["theta"].is_null());
    assert!(report["sigma2"].is_null());
    assert!(report["objective"].as_f64().unwrap().is_finite());
    assert!(report["evaluations"].as_u64().unwrap() > 120);
}

#[test]
fn tune_ml_nugget_grows_when_site_scatter_is_inflated() {
    let dir = tempfile::tempdir().unwrap();
    let baseline = write_file(dir.path(), "base.csv", averaging_csv());
    // Same sites, but the four outputs at x=2 are spread three times as far
    // from their mean of 5.
    let inflated_csv = "x1,y\n\
                        1.0,-2.0\n\
                        1.5,-1.0\n\
                        1.5,0.0\n\
                        2.0,-5.5\n\
                        2.0,2.0\n\
                        2.0,11.0\n\
                        2.0,12.5\n\
                        2.5,6.0\n\
                        2.5,5.0\n\
                        3.0,3.0\n";
    let inflated = write_file(dir.path(), "inflated.csv", inflated_csv);

    let tau2_of = |path: &Path| -> f64 {
        let out = krig(&["tune", "--data", path.to_str().unwrap(), "--kernel", SE_KERNEL, "--ml"]);
        assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
        let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
        report["tau2_ml"].as_f64().unwrap()
    };
    let base_tau2 = tau2_of(&baseline);
    let inflated_tau2 = tau2_of(&inflated);
    assert!(
        inflated_tau2 >= base_tau2,
        "wider site scatter must not shrink the nugget: {inflated_tau2} < {base_tau2}"
    );
}

#[test]
fn tune_lengthscales_recovers_a_sensible_scale() {
    let dir = tempfile::tempdir().unwrap();
    // Smooth single-scale data: y = sin(1.3 x) at distinct points.
    let mut csv = String::from("x1,y\n");
    for i in 0..12 {
        let x = 0.3 * i as f64;
        csv.push_str(&format!("{x},{}\n", (1.3 * x).sin()));
    }
    let data = write_file(dir.path(), "smooth.csv", &csv);
    let out = krig(&[
        "tune",
        "--data",
        data.to_str().unwrap(),
        "--kernel",
        SE_KERNEL,
        "--lengthscales",
        "--bounds",
        "0.05:10",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let theta = report["theta"].as_array().unwrap();
    assert_eq!(theta.len(), 1);
    let t = theta[0].as_f64().unwrap();
    assert!((0.05..=10.0).contains(&t), "theta within bounds, got {t}");
    assert!(report["sigma2"].as_f64().unwrap() > 0.0);

    let dot = krig(&[
        "tune",
        "--data",
        data.to_str().unwrap(),
        "--kernel",
        r#"{"kind":"DotProduct","dim":1}"#,
        "--lengthscales",
    ]);
    assert_eq!(exit_code(&dot), 2, "dot-product kernel has no length-scales");
}

#[test]
fn tune_condition_targets_match_the_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_file(dir.path(), "data.csv", averaging_csv());
    let kappa_max = 1e6;
    let out = krig(&[
        "tune",
        "--data",
        data.to_str().unwrap(),
        "--kernel",
        SE_KERNEL,
        "--kappa-max",
        "1e6",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();

    let (design, _) = averaging_design_and_outputs();
    let kernel = KernelSpec::squared_exponential(1.0, vec![0.3]).unwrap();
    let c = kernel.covariance_matrix(&design).unwrap();
    let s = SpectralDecomposition::with_default_tolerance(&c).unwrap();
    let ev = s.eigenvalues();
    let tau2 =
        smallest_nugget_for_condition(ev[0], ev[ev.len() - 1].max(0.0), kappa_max).unwrap();
    let eta = pi_tolerance_for_condition(ev[0], kappa_max).unwrap();

    assert_eq!(report["tau2_for_condition"].as_f64().unwrap(), tau2);
    assert_eq!(report["eta_for_condition"].as_f64().unwrap(), eta);
}

#[test]
fn paper_example_check_passes_for_every_id() {
    for id in [
        "repeated",
        "additive1",
        "additive2",
        "periodic",
        "linear",
        "averaging",
        "discrepancy",
        "additive-discr",
        "distwise",
    ] {
        let out = krig(&["paper-example", id, "--check"]);
        assert_eq!(exit_code(&out), 0, "{id}: stderr: {}", stderr_of(&out));
        let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
        assert_eq!(report["id"], id);
        assert_eq!(report["check"], "pass");
    }
}

#[test]
fn paper_example_unknown_id_lists_the_valid_ones() {
    let out = krig(&["paper-example", "no-such-example"]);
    assert_eq!(exit_code(&out), 2);
    let stderr = stderr_of(&out);
    for id in ["repeated", "additive1", "distwise"] {
        assert!(stderr.contains(id), "stderr should list '{id}': {stderr}");
    }
}

#[test]
fn saved_model_reloads_to_identical_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_file(dir.path(), "data.csv", averaging_csv());
    let model_a = dir.path().join("model-a.json");
    let model_b = dir.path().join("model-b.json");

    let fit_args = |model: &Path| {
        vec![
            "fit-predict".to_string(),
            "--data".to_string(),
            data.to_str().unwrap().to_string(),
            "--kernel".to_string(),
            SE_KERNEL.to_string(),
            "--save-model".to_string(),
            model.to_str().unwrap().to_string(),
            "--grid".to_string(),
            "0.8:3.2:41".to_string(),
        ]
    };
    let first = Command::new(env!("CARGO_BIN_EXE_krig"))
        .args(fit_args(&model_a))
        .output()
        .unwrap();
    assert_eq!(exit_code(&first), 0, "stderr: {}", stderr_of(&first));
    let second = Command::new(env!("CARGO_BIN_EXE_krig"))
        .args(fit_args(&model_b))
        .output()
        .unwrap();
    assert_eq!(exit_code(&second), 0);

    assert_eq!(
        fs::read(&model_a).unwrap(),
        fs::read(&model_b).unwrap(),
        "saving the same fit twice must produce identical files"
    );

    let reloaded = krig(&[
        "fit-predict",
        "--load-model",
        model_a.to_str().unwrap(),
        "--grid",
        "0.8:3.2:41",
    ]);
    assert_eq!(exit_code(&reloaded), 0, "stderr: {}", stderr_of(&reloaded));
    assert_eq!(
        stdout_of(&first),
        stdout_of(&reloaded),
        "a reloaded model must predict digit-for-digit the same"
    );

    let conflicting = krig(&[
        "fit-predict",
        "--load-model",
        model_a.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--kernel",
        SE_KERNEL,
    ]);
    assert_eq!(exit_code(&conflicting), 2);
}

#[test]
fn kernel_accepted_inline_or_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_file(dir.path(), "data.csv", averaging_csv());
    let kernel_file = write_file(dir.path(), "kernel.json", SE_KERNEL);

    let inline = krig(&[
        "fit-predict",
        "--data",
        data.to_str().unwrap(),
        "--kernel",
        SE_KERNEL,
        "--grid",
        "1:3:9",
    ]);
    let from_file = krig(&[
        "fit-predict",
        "--data",
        data.to_str().unwrap(),
        "--kernel",
        kernel_file.to_str().unwrap(),
        "--grid",
        "1:3:9",
    ]);
    assert_eq!(exit_code(&inline), 0, "stderr: {}", stderr_of(&inline));
    assert_eq!(exit_code(&from_file), 0, "stderr: {}", stderr_of(&from_file));
    assert_eq!(stdout_of(&inline), stdout_of(&from_file));
}

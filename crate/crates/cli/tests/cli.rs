use std::path::{Path, PathBuf};
use std::process::Command;

use limpet_cli::plot::render_svg;
use limpet_cli::{emit_plot, run, validate_config, verify_manifest, Labels, RunManifest, Series, EXIT_CONFIG};

const MINIMAL_BANDS: &str = r#"
kind = "bands"

[potential]
values = [0.0]

[lambda]
values = [1.0]
"#;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn limpet(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_limpet"))
        .args(args)
        .env_remove("LIMPET_OUT_DIR")
        .output()
        .unwrap()
}

#[test]
fn minimal_bands_config_is_valid() {
    let c = validate_config(MINIMAL_BANDS).unwrap();
    assert_eq!(c.family.len(), 1);
    assert_eq!(c.lambdas, vec![1.0]);
}

#[test]
fn zero_step_is_one_violation_naming_the_field() {
    let text = format!("{MINIMAL_BANDS}\n[energy]\nmin = -4.0\nmax = 4.0\nstep = 0.0\n");
    let v = validate_config(&text).unwrap_err();
    assert_eq!(v.len(), 1, "{v:?}");
    assert_eq!(v[0].field, "energy.step");
}

#[test]
fn unknown_kind_lists_the_allowed_kinds() {
    let v = validate_config(&MINIMAL_BANDS.replace("\"bands\"", "\"spectrum\"")).unwrap_err();
    let msg = v.iter().find(|x| x.field == "kind").unwrap().to_string();
    for k in [
        "bands",
        "lyapunov-curve",
        "meas-bounds",
        "start",
        "induction",
        "iterate",
    ] {
        assert!(msg.contains(k), "{msg}");
    }
}

#[test]
fn violations_are_reported_together() {
    let text = r#"
kind = "iterate"
colour = "blue"

[potential]
values = [0.0]

[lambda]
values = [0.0]

[iterate]
depth = 0
"#;
    let fields: Vec<String> = validate_config(text)
        .unwrap_err()
        .into_iter()
        .map(|v| v.field)
        .collect();
    for f in ["colour", "lambda.values", "iterate.depth"] {
        assert!(fields.iter().any(|x| x == f), "{fields:?}");
    }
}

#[test]
fn shipped_configs_validate() {
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(validate_config(&text).is_ok(), "{}", path.display());
    }
}

#[test]
fn free_bands_run_writes_one_band_and_a_verifiable_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(&validate_config(MINIMAL_BANDS).unwrap(), dir.path(), Some(1)).unwrap();
    assert!(m.passed);
    assert_eq!(m.exit_code(), 0);
    let csv = std::fs::read_to_string(dir.path().join("bands.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    let cols: Vec<f64> = rows[0].split(',').skip(3).take(2).map(|x| x.parse().unwrap()).collect();
    assert!((cols[0] + 2.0).abs() < 1e-9 && (cols[1] - 2.0).abs() < 1e-9, "{cols:?}");
    assert!(verify_manifest(dir.path(), &m).is_empty());

    std::fs::write(dir.path().join("bands.csv"), "tampered\n").unwrap();
    assert_eq!(verify_manifest(dir.path(), &m), vec!["bands.csv".to_string()]);
}

#[test]
fn manifest_on_disk_lists_every_other_file() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(&validate_config(MINIMAL_BANDS).unwrap(), dir.path(), None).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    let listed: Vec<&str> = json["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["path"].as_str().unwrap())
        .collect();
    assert_eq!(listed.len(), m.files.len());
    let on_disk = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(on_disk, listed.len() + 1);
    assert_eq!(json["kind"], "bands");
}

#[test]
fn free_lyapunov_curve_matches_the_closed_form() {
    let text = std::fs::read_to_string(configs_dir().join("lyapunov_free.toml")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = run(&validate_config(&text).unwrap(), dir.path(), None).unwrap();
    assert!(m.passed, "{:?}", m.checks);
    assert!(
        m.checks.iter().any(|c| c.name.contains("closed form")),
        "{:?}",
        m.checks
    );
    let svg = std::fs::read_to_string(dir.path().join("lyapunov_plot.svg")).unwrap();
    assert!(svg.contains("<polyline"));
    assert!(dir.path().join("lyapunov_plot.csv").exists());
}

#[test]
fn meas_bounds_checks_pass() {
    let text = std::fs::read_to_string(configs_dir().join("meas_bounds.toml")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = run(&validate_config(&text).unwrap(), dir.path(), None).unwrap();
    assert!(m.passed, "{:?}", m.checks);
    assert!(!m.checks.is_empty());
}

#[test]
fn single_series_plot_has_one_polyline() {
    let s = Series::new("L", vec![(0.0, 0.0), (1.0, 0.5), (2.0, 0.25)]);
    let svg = render_svg(&[s.clone()], &Labels::default());
    assert_eq!(svg.matches("<polyline").count(), 1);

    let dir = tempfile::tempdir().unwrap();
    let (svg_path, csv_path) = emit_plot(&[s], &Labels::default(), &dir.path().join("p.svg")).unwrap();
    assert!(svg_path.exists());
    let csv = std::fs::read_to_string(csv_path).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(emit_plot(&[], &Labels::default(), &dir.path().join("q.svg")).is_err());
}

#[test]
fn failed_checks_give_exit_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut m: RunManifest = run(&validate_config(MINIMAL_BANDS).unwrap(), dir.path(), None).unwrap();
    m.passed = false;
    assert_eq!(m.exit_code(), 1);
}

#[test]
fn binary_runs_with_override_and_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("bands_free.toml");
    let out = dir.path().join("o");
    let res = limpet(&[
        "bands",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--override",
        "lambda.values=[2.0]",
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = std::fs::read_to_string(out.join("bands.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains(",2.0,"), "{csv}");
}

#[test]
fn binary_rejects_bad_configs_with_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        format!("{MINIMAL_BANDS}\n[energy]\nmin = 1.0\nmax = -1.0\nstep = 0.0\n"),
    )
    .unwrap();
    let res = limpet(&[
        "bands",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(EXIT_CONFIG));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(
        err.contains("energy.step:") && err.contains("energy: need finite min < max"),
        "{err}"
    );

    let res = limpet(&[
        "iterate",
        "--config",
        configs_dir().join("bands_free.toml").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(EXIT_CONFIG));

    let res = limpet(&["bands", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(EXIT_CONFIG));
}

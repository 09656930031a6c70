use std::process::{Command, Output};

use serde_json::Value;

fn biharm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biharm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (Value, i32) {
    let mut all = args.to_vec();
    all.push("--json");
    let out = biharm(&all);
    let text = String::from_utf8(out.stdout).unwrap();
    let value = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}"));
    (value, out.status.code().unwrap())
}

#[test]
fn list_shows_every_entry() {
    let out = biharm(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for id in [
        "inversion",
        "radial",
        "stereo_identity",
        "ball_identity",
        "half_identity",
        "h4_flat",
        "conf_flat",
        "twisted_projection",
    ] {
        assert!(text.contains(id), "{id} missing");
    }

    let (v, code) = json(&["list"]);
    assert_eq!(code, 0);
    assert_eq!(v.as_array().unwrap().len(), 8);

    let (v, _) = json(&["list", "--id", "inversion"]);
    assert_eq!(v["id"], "inversion");
    assert_eq!(v["expected"]["morphism"], true);

    assert_eq!(biharm(&["list", "--id", "nope"]).status.code(), Some(2));
}

#[test]
fn inversion_in_dimension_four_is_a_morphism() {
    let (v, code) = json(&["check", "--entry", "inversion", "--n", "4", "--samples", "20", "--seed", "7", "--tol", "1e-8"]);
    assert_eq!(code, 0);
    assert_eq!(v["schema"], "biharm-report/1");
    assert_eq!(v["aggregate"]["morphism"], true);
    assert_eq!(v["aggregate"]["first_failure"], Value::Null);
    assert_eq!(v["points"].as_array().unwrap().len(), 20);
    assert_eq!(v["matches"], true);
}

#[test]
fn inversion_in_dimension_three_is_not_biharmonic() {
    let (v, code) = json(&["check", "--entry", "inversion", "--n", "3", "--samples", "10"]);
    assert_eq!(code, 0);
    assert_eq!(v["aggregate"]["biharmonic"], false);
    assert_eq!(v["aggregate"]["first_failure"]["condition"], "biharmonic");
}

#[test]
fn ball_identity_is_biharmonic_but_not_a_morphism() {
    let (v, code) = json(&["check", "--entry", "ball_identity", "--n", "4", "--samples", "10"]);
    assert_eq!(code, 0);
    assert_eq!(v["aggregate"]["biharmonic"], true);
    assert_eq!(v["aggregate"]["morphism"], false);
    assert_eq!(v["aggregate"]["first_failure"]["condition"], "longeq");
}

#[test]
fn mismatch_exits_with_one() {
    // a huge tolerance makes every residual pass, contradicting the expected verdict
    let (v, code) = json(&["check", "--entry", "inversion", "--n", "3", "--samples", "5", "--tol", "10"]);
    assert_eq!(code, 1);
    assert_eq!(v["matches"], false);
    let diff = v["diff"].as_array().unwrap();
    assert!(diff.iter().any(|d| d["claim"] == "biharmonic" && d["status"] == "mismatch"));
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["check", "--entry", "nope"][..],
        &["check", "--entry", "inversion", "--n", "1"],
        &["check", "--entry", "inversion", "--samples", "0"],
        &["check", "--entry", "inversion", "--tol", "-1"],
        &["check", "--entry", "inversion", "--bogus"],
        &["check"],
        &["sweep", "--entry", "h4_flat", "--dims", "3..5"],
        &["sweep", "--entry", "inversion", "--dims", "5..2"],
        &["check", "--entry", "inversion", "--region", "3,1"],
    ] {
        let out = biharm(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn json_output_is_deterministic() {
    let args = ["check", "--entry", "stereo_identity", "--n", "4", "--eps", "-1", "--samples", "12", "--seed", "3", "--json"];
    let a = biharm(&args);
    let b = biharm(&args);
    assert_eq!(a.stdout, b.stdout);
    let c = biharm(&["check", "--entry", "stereo_identity", "--n", "4", "--eps", "-1", "--samples", "12", "--seed", "4", "--json"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn floats_use_seventeen_significant_digits() {
    let out = biharm(&["check", "--entry", "twisted_projection", "--samples", "2", "--json"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let x = v["points"][0]["x"][0].as_f64().unwrap();
    let literal = format!("{x:.16e}");
    assert!(text.contains(&literal), "{literal}");
    assert!(text.contains("\"tol\": 1.0000000000000000e-8"));
}

#[test]
fn sweep_flags_the_vanishing_dimension() {
    let (v, code) = json(&["sweep", "--entry", "stereo_identity", "--eps", "1", "--dims", "2..6"]);
    assert_eq!(code, 0);
    assert_eq!(v["vanishing_dims"], serde_json::json!([2, 4]));
    assert_eq!(v["harmonic_dims"], serde_json::json!([2]));
    let rows = v["rows"].as_array().unwrap();
    for row in rows {
        let dim = row["dim"].as_u64().unwrap();
        let max = row["max_bitension_residual"].as_f64().unwrap();
        let min = row["min_bitension_residual"].as_f64().unwrap();
        match dim {
            2 | 4 => assert!(max < 1e-8),
            _ => assert!(min > 1e-2),
        }
    }

    let (v, _) = json(&["sweep", "--entry", "half_identity", "--dims", "3..5"]);
    assert_eq!(v["vanishing_dims"], serde_json::json!([4]));

    let (v, code) = json(&["sweep", "--entry", "inversion", "--dims", "2..2"]);
    assert_eq!(code, 0);
    assert_eq!(v["harmonic_dims"], serde_json::json!([2]));
}

#[test]
fn out_flag_writes_the_report_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let args = ["check", "--entry", "radial", "--m", "4", "--samples", "4", "--json"];
    let stdout = biharm(&args).stdout;
    let mut with_out = args.to_vec();
    let p = path.to_str().unwrap();
    with_out.extend(["--out", p]);
    let out = biharm(&with_out);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), stdout);
}

#[test]
fn region_override_is_echoed_and_respected() {
    let (v, code) = json(&[
        "check",
        "--entry",
        "twisted_projection",
        "--c1",
        "-1",
        "--c2",
        "3",
        "--region",
        "-3,-0.5",
        "--samples",
        "6",
    ]);
    assert_eq!(code, 0);
    assert!(v["config"]["region"].as_str().unwrap().starts_with("-3 <= x_1 <= -0.5"));
    for p in v["points"].as_array().unwrap() {
        let x0 = p["x"][0].as_f64().unwrap();
        assert!((-3.0..=-0.5).contains(&x0));
    }
}

#[test]
fn human_report_ends_with_a_verdict() {
    let out = biharm(&["check", "--entry", "conf_flat", "--n", "2", "--samples", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("aggregate"));
    assert!(text.trim_end().ends_with("result: MATCH"));
}

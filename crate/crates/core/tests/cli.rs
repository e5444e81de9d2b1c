use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phaseiso"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn recipe(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("recipes").join(name)
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["simulate", "--help"]).status.code(), Some(0));
}

#[test]
fn configuration_errors_exit_two() {
    let cases: &[&[&str]] = &[
        &["bogus"],
        &["locked", "--state", "synchrony", "--eps", "0.1", "--N", "1"],
        &["sweep", "--state", "synchrony", "--eps-range", "0:1:0"],
        &["sweep", "--state", "synchrony", "--eps-range", "0:1"],
        &["locked", "--model", "nope", "--eps", "0.1", "--state", "synchrony"],
        &["locked", "--state", "zigzag", "--eps", "0.1"],
        &["simulate", "--eps", "0.1", "--dt", "0"],
        &["hop", "--c1", "-2", "--c2", "1.1", "--order", "4", "--state", "synchrony"],
        &["recipe", "/nonexistent/recipe.json"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn tolerance_violation_exits_three() {
    let out = run(&["compare", "--c2", "1.1", "--c1", "-2", "--state", "synchrony", "--tol", "1e-30"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["compare", "--c2", "1.1", "--c1", "-2", "--state", "synchrony"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("# max_deviation="));
}

#[test]
fn output_is_byte_identical_across_runs() {
    let args = ["simulate", "--c1", "-2", "--c2", "1.1", "--N", "6", "--eps", "0.3", "--seed", "5", "--theta-box", "0:6", "--psi-box", "-0.1:0.1", "--t-end", "30", "--dt", "1"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let a = run(&["oracle", "--c1", "-2", "--c2", "1.1"]);
    assert_eq!(a.stdout, run(&["oracle", "--c1", "-2", "--c2", "1.1"]).stdout);
}

#[test]
fn out_flag_writes_the_table() {
    let dir = std::env::temp_dir().join(format!("phaseiso-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("h.csv");
    let out = run(&["reduce", "--c1", "-2", "--c2", "1.1", "--table", "interaction", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("chi,H1"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn json_output_parses() {
    let out = run(&["locked", "--c1", "-2", "--c2", "1.1", "--state", "splay", "--N", "5", "--eps", "0.2", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.is_object() || v.is_array());
}

#[test]
fn fast_recipes_run() {
    for name in ["fig1_oracle_c2_11.json", "ml_orbit.json", "fig7.json", "fig9_ml_n200_reduced.json", "fig1_hop3_splay_c2_11.json"] {
        let out = bin().arg("recipe").arg(recipe(name)).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn reduced_recipe_reports_two_clusters() {
    let out = bin().arg("recipe").arg(recipe("fig9_ml_n200_reduced.json")).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["clusters"], serde_json::json!([172, 28]));
    assert_eq!(v["class"], "Clusters(2)");
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kform")).args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn baran_square_has_144_cells() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mesh.json");
    let o = kform(&["mesh", "--body", "cube", "--n", "2", "--k", "1", "--r", "4", "--m", "8", "--method", "baran", "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mesh = read_json(&out);
    assert_eq!(mesh["cells"].as_array().unwrap().len(), 144);
    assert_eq!(mesh["tag"], "baran_cube");
    assert_eq!(mesh["constant"].as_f64().unwrap(), 2.0);
}

#[test]
fn simplex_mesh_constant() {
    let o = kform(&["mesh", "--body", "simplex", "--n", "2", "--k", "1", "--r", "5", "--theta", "0.6667", "--method", "alg1"]);
    assert!(o.status.success());
    let mesh: Value = serde_json::from_slice(&o.stdout).unwrap();
    let c = mesh["constant"].as_f64().unwrap();
    let expected = 2.0f64.sqrt() / (0.6667 * std::f64::consts::PI / 2.0).cos();
    assert!((c - expected).abs() < 1e-12);
    assert!((c - 2.0 * 2.0f64.sqrt()).abs() < 1e-3);
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(kform(&["mesh", "--n", "2", "--k", "1", "--r", "2", "--method", "nope"]).status.code(), Some(2));
    assert_eq!(kform(&["mesh", "--n", "2", "--k", "3", "--r", "2", "--method", "baran"]).status.code(), Some(2));
    assert_eq!(kform(&["mesh", "--n", "2", "--k", "1", "--r", "3", "--m", "3", "--method", "baran"]).status.code(), Some(2));
    assert_eq!(kform(&["mesh", "--n", "2", "--k", "1", "--r", "3", "--theta", "1.2", "--method", "alg1"]).status.code(), Some(2));
    assert_eq!(kform(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn malformed_form_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("mesh.json");
    let sel = dir.path().join("sel.json");
    let form = dir.path().join("form.json");
    assert!(kform(&["mesh", "--n", "2", "--k", "1", "--r", "2", "--method", "baran", "--out", p(&mesh)]).status.success());
    assert!(kform(&["fekete", "--in", p(&mesh), "--out", p(&sel)]).status.success());
    std::fs::write(&form, r#"{"n":2,"k":1,"terms":[{"beta":[1,0] "alpha":[1],"coef":1}]}"#).unwrap();
    let o = kform(&["interp", "--in", p(&sel), "--form", p(&form)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1 column"));
}

#[test]
fn interpolation_reproduces_forms_in_the_space() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("mesh.json");
    let sel = dir.path().join("sel.json");
    let form = dir.path().join("form.json");
    let result = dir.path().join("result.json");
    assert!(kform(&["mesh", "--n", "2", "--k", "1", "--r", "3", "--method", "baran", "--out", p(&mesh)]).status.success());
    assert!(kform(&["leja", "--in", p(&mesh), "--out", p(&sel)]).status.success());
    std::fs::write(&form, r#"{"n":2,"k":1,"terms":[{"beta":[2,1],"alpha":[1],"coef":1.5},{"beta":[0,0],"alpha":[2],"coef":-0.25}]}"#).unwrap();
    let o = kform(&["interp", "--in", p(&sel), "--form", p(&form), "--out", p(&result)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["coefficient_error"].as_f64().unwrap() < 1e-8);
    let terms = read_json(&result)["terms"].as_array().unwrap().clone();
    let big: Vec<&Value> = terms.iter().filter(|t| t["coef"].as_f64().unwrap().abs() > 1e-8).collect();
    assert_eq!(big.len(), 2);
}

#[test]
fn fit_reports_bound_factors() {
    let dir = tempfile::tempdir().unwrap();
    let form = dir.path().join("form.json");
    std::fs::write(&form, r#"{"n":2,"k":1,"terms":[{"beta":[1,1],"alpha":[2],"coef":2.0}]}"#).unwrap();
    let o = kform(&["fit", "--n", "2", "--k", "1", "--r", "2", "--method", "baran", "--form", p(&form)]);
    assert!(o.status.success());
    let report: Value = serde_json::from_slice(&o.stderr).unwrap();
    // equal weights on M = 2 * 3 * 4 = 24 cells, N = 12
    let m = 24.0f64;
    let c = report["constant"].as_f64().unwrap();
    assert!((report["bounds"]["sharp"].as_f64().unwrap() - (1.0 + c * (1.0 + m.sqrt()))).abs() < 1e-12);
    assert!((report["bounds"]["standard"].as_f64().unwrap() - (1.0 + c * m.sqrt() * 12.0)).abs() < 1e-12);
    assert!(report["coefficient_error"].as_f64().unwrap() < 1e-8);
}

#[test]
fn fekete_is_deterministic_and_bounded() {
    let args = ["fekete", "--n", "2", "--k", "1", "--r", "3", "--method", "alg1", "--seed", "7"];
    let a = kform(&args);
    let b = kform(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
    let report: Value = serde_json::from_slice(&a.stderr).unwrap();
    assert!(report["lebesgue_lower"].as_f64().unwrap() <= report["lebesgue_bound"].as_f64().unwrap());
}

#[test]
fn too_small_mesh_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("mesh.json");
    assert!(kform(&["mesh", "--n", "1", "--k", "0", "--r", "1", "--m", "2", "--method", "baran", "--out", p(&mesh)]).status.success());
    let mut json = read_json(&mesh);
    json["r"] = Value::from(5);
    std::fs::write(&mesh, json.to_string()).unwrap();
    assert_eq!(kform(&["fekete", "--in", p(&mesh)]).status.code(), Some(1));
}

#[test]
fn verify_and_lebesgue_run() {
    let o = kform(&["verify", "--n", "2", "--k", "2", "--r", "3", "--method", "faces", "--trials", "10", "--probe-res", "0.05"]);
    assert!(o.status.success());
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["pass"], true);
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("mesh.json");
    assert!(kform(&["mesh", "--n", "2", "--k", "1", "--r", "2", "--method", "baran", "--out", p(&mesh)]).status.success());
    let o = kform(&["lebesgue", "--in", p(&mesh)]);
    assert!(o.status.success());
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["kind"], "least_squares");
    assert!(report["m"].as_f64().unwrap() <= report["m2_bound"].as_f64().unwrap() * (1.0 + 1e-12));
}

#[test]
fn tables_have_expected_columns() {
    let o = kform(&["tables", "--fig", "comparecard", "--n", "3", "--k", "2", "--rmax", "20"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "r,markov_card,baran_card,dim");
    assert_eq!(lines.len(), 21);
    let o = kform(&["tables", "--fig", "cardsimplex", "--rmax", "1"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().collect::<Vec<_>>(), vec!["r,card,ratio", "1,87,"]);
}

#[test]
fn mesh_table_appends_rows() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("card.csv");
    for r in ["2", "3"] {
        let o = kform(&["mesh", "--n", "2", "--k", "1", "--r", r, "--method", "baran", "--table", p(&table)]);
        assert!(o.status.success());
    }
    let text = std::fs::read_to_string(&table).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "r,cardinality,constant,tag");
    // m = 3 and m = 5 Chebyshev nodes: 2 m (m + 1) cells
    assert!(lines[1].starts_with("2,24,") && lines[2].starts_with("3,60,"));
    assert!(lines[1].ends_with(",baran_cube"));
}

#[test]
fn mesh_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert!(kform(&["mesh", "--n", "2", "--k", "1", "--r", "3", "--method", "alg1", "--out", p(&a)]).status.success());
    let mesh: kform::mesh::IntegralKMesh = serde_json::from_str(&std::fs::read_to_string(&a).unwrap()).unwrap();
    std::fs::write(&b, serde_json::to_string(&mesh).unwrap()).unwrap();
    assert_eq!(std::fs::read_to_string(&a).unwrap().trim_end(), std::fs::read_to_string(&b).unwrap());
}

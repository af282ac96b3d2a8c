use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn nhtdse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhtdse"))
        .args(args)
        .env("NHTDSE_LOG", "error")
        .output()
        .expect("binary runs")
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    nhtdse(&args)
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn every_shipped_config_validates_and_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut names: Vec<PathBuf> = fs::read_dir(configs()).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    assert!(names.len() >= 8);
    for path in names {
        let v = nhtdse(&["validate", path.to_str().unwrap()]);
        assert!(v.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&v.stderr));
        let out = tmp.path().join(path.file_stem().unwrap());
        let r = run(&path, &out, &[]);
        assert_eq!(r.status.code(), Some(0), "{}: {}", path.display(), String::from_utf8_lossy(&r.stderr));
        let s = summary(&out);
        assert_eq!(s["status"], "ok");
        assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);
        for t in s["tables"].as_array().unwrap() {
            assert!(out.join(t.as_str().unwrap()).exists());
        }
    }
}

#[test]
fn hermitian_exchange_total_phase_is_pi() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    assert!(run(&configs().join("hermitian_exchange.toml"), &out, &[]).status.success());
    let s = summary(&out);
    for trace in s["results"]["traces"].as_array().unwrap() {
        let gamma = trace["gamma_total"].as_f64().unwrap();
        assert!((gamma - PI).abs() < 1e-6, "{trace}");
    }
}

#[test]
fn unit_metric_demo_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("w1");
    assert!(run(&configs().join("demo_w1.toml"), &out, &[]).status.success());
    let (header, rows) = read_csv(&out.join("trajectory.csv"));
    let energies_im = [0.1, -0.2, 0.05];
    let slopes = [0.02, 0.01, -0.03];
    let psi0 = [(0.5f64, 0.1f64), (0.3, -0.6), (0.2, 0.4)];
    for row in rows {
        let t: f64 = row[column(&header, "t")].parse().unwrap();
        let weights: Vec<f64> = (0..3)
            .map(|n| {
                let d = 2.0 * (energies_im[n] * t + 0.5 * slopes[n] * t * t);
                (psi0[n].0.powi(2) + psi0[n].1.powi(2)) * d.exp()
            })
            .collect();
        let a: f64 = weights.iter().sum();
        for n in 0..3 {
            let got: f64 = row[column(&header, &format!("c2_{n}"))].parse().unwrap();
            assert!((got - weights[n] / a).abs() < 1e-8, "t = {t}, n = {n}");
        }
    }
}

#[test]
fn malformed_configs_exit_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax.toml", "kind = \"evolve\"\n[evolve\n"),
        ("unknown_key.toml", "kind = \"anyon-quench\"\n[anyon_quench]\nsites = 8\nhopping = 1.0\nkappa = 1.0\nfilling = 4\nquench_bond = 3\nquench_value = 0.0\ncolour = 1\n"),
        ("bad_kappa.toml", "kind = \"anyon-quench\"\n[anyon_quench]\nsites = 8\nhopping = 1.0\nkappa = 4.0\nfilling = 4\nquench_bond = 3\nquench_value = 0.0\n"),
        ("missing_section.toml", "kind = \"quench\"\n"),
        ("wrong_dim.toml", "kind = \"evolve\"\n[evolve]\nt_span = [0.0, 1.0]\nmodel = { type = \"constant\", h = [[[1.0, 0.0]]] }\nstate = { type = \"amplitudes\", values = [[1.0, 0.0], [0.0, 0.0]] }\n"),
        ("not_pd.toml", "kind = \"quench\"\n[quench]\nw_minus = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-1.0, 0.0]]]\nw_plus = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]\nstate = { type = \"random\" }\n"),
    ];
    for (name, text) in cases {
        let path = tmp.path().join(name);
        fs::write(&path, text).unwrap();
        let out = tmp.path().join(format!("out_{name}"));
        let r = run(&path, &out, &[]);
        assert_eq!(r.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&r.stderr));
        assert!(!out.exists(), "{name} left output behind");
        assert_eq!(nhtdse(&["validate", path.to_str().unwrap()]).status.code(), Some(2), "{name}");
    }
    let r = nhtdse(&["run", tmp.path().join("absent.toml").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3_and_names_the_error() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("jordan.toml");
    fs::write(
        &path,
        "kind = \"evolve\"\n[evolve]\nt_span = [0.0, 1.0]\n\
         model = { type = \"constant\", h = [[[0.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]] }\n\
         state = { type = \"amplitudes\", values = [[1.0, 0.0], [0.0, 0.0]] }\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    let r = run(&path, &out, &[]);
    assert_eq!(r.status.code(), Some(3), "{}", String::from_utf8_lossy(&r.stderr));
    let s = summary(&out);
    assert_eq!(s["status"], "numerical-error");
    assert_eq!(s["error"]["name"], "Defective");
    assert_eq!(s["tables"].as_array().unwrap().len(), 0);
    assert!(!out.join("trajectory.csv").exists());
}

#[test]
fn reruns_are_byte_identical_and_seed_matters() {
    let tmp = tempfile::tempdir().unwrap();
    let config = configs().join("random_schedule.toml");
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert!(run(&config, &a, &[]).status.success());
    assert!(run(&config, &b, &[]).status.success());
    assert!(run(&config, &c, &["--seed", "43"]).status.success());
    let table = |d: &Path| fs::read(d.join("trajectory.csv")).unwrap();
    assert_eq!(table(&a), table(&b));
    assert_ne!(table(&a), table(&c));
    assert_eq!(summary(&a)["config_hash"], summary(&b)["config_hash"]);
    assert_ne!(summary(&a)["config_hash"], summary(&c)["config_hash"]);
    assert_eq!(summary(&c)["seed"], 43);
}

#[test]
fn overrides_reach_the_experiment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let r = run(
        &configs().join("demo_w1.toml"),
        &out,
        &["--set", "evolve.variant=\"gong\"", "--set", "evolve.samples=5"],
    );
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let s = summary(&out);
    assert_eq!(s["results"]["variant"], "gong");
    let (_, rows) = read_csv(&out.join("trajectory.csv"));
    assert_eq!(rows.len(), 6);
    let bad = run(&configs().join("demo_w1.toml"), &tmp.path().join("bad"), &["--set", "evolve.colour=1"]);
    assert_eq!(bad.status.code(), Some(2));
}

fn compare_rows(config: &str, out: &Path) -> Vec<(String, f64, f64)> {
    let r = nhtdse(&["compare", configs().join(config).to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let printed = String::from_utf8(r.stdout).unwrap();
    assert!(printed.starts_with("variant,drift"));
    let (header, rows) = read_csv(&out.join("compare.csv"));
    let (d, dist) = (column(&header, "drift"), column(&header, "distance_to_new_nh"));
    rows.into_iter()
        .map(|r| (r[0].clone(), r[d].parse().unwrap(), r[dist].parse().unwrap()))
        .collect()
}

#[test]
fn hermitian_comparison_agrees_across_variants() {
    let tmp = tempfile::tempdir().unwrap();
    let rows = compare_rows("hermitian_drive.toml", &tmp.path().join("h"));
    assert_eq!(rows.len(), 5);
    for (variant, _, distance) in rows {
        assert!(distance < 1e-8, "{variant}: {distance}");
    }
}

#[test]
fn real_spectrum_comparison_matches_gong() {
    let tmp = tempfile::tempdir().unwrap();
    let rows = compare_rows("dimer_compare.toml", &tmp.path().join("d"));
    let gong = rows.iter().find(|r| r.0 == "gong").unwrap();
    assert!(gong.2 < 1e-8, "{gong:?}");
    let left = rows.iter().find(|r| r.0 == "left-nh").unwrap();
    assert!(left.2 < 1e-6, "{left:?}");
}

#[test]
fn generic_comparison_separates_standard_from_metric_aware() {
    let tmp = tempfile::tempdir().unwrap();
    let rows = compare_rows("random_schedule.toml", &tmp.path().join("g"));
    let drift = |name: &str| rows.iter().find(|r| r.0 == name).unwrap().1;
    assert!(drift("new-nh") < 1e-7);
    assert!(drift("standard") > 1e-3);
}

#[test]
fn compare_rejects_other_kinds() {
    let r = nhtdse(&["compare", configs().join("anyon_cut.toml").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
}

//! Exit-code contract and determinism of the `bubblereduce` binary.

use bubblereduce::model::{Bubble, PerturbativeLandscape, PerturbativeModel, SpaceDims};
use bubblereduce::quadrature::QuadratureSpec;
use bubblereduce::residual::{energy, ConcentrationAnsatz};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

const FLAT: &str = r#"{"kind":"flat_points","N":5,"k":4,"h":1,"epsilon":0.01,
 "points":[{"eta":[-0.5],"gamma":2,"xi":[-1,-1,-1,-1],"a":[-1],"sigma":0.5,"delta":0.4},
           {"eta":[0.5],"gamma":2,"xi":[-1,-1,-1,-1],"a":[-1],"sigma":0.5,"delta":0.4}]}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bubblereduce")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn flat_model(epsilon: f64) -> PerturbativeLandscape {
    let dims = SpaceDims::new(5, 4, 1).unwrap();
    let mk = |c: f64| PerturbativeModel::new(dims, vec![c], 0.0, 2.0, vec![-1.0; 4], vec![-1.0], 0.5, 0.4, epsilon).unwrap();
    PerturbativeLandscape::new(vec![mk(-0.5), mk(0.5)], epsilon).unwrap()
}

#[test]
fn usage_errors_exit_two() {
    let o = run(&[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(code(&run(&["--bogus"])), 2);
    assert_eq!(code(&run(&["constants", "--dims", "4,2"])), 2);
    assert_eq!(code(&run(&["check-lemma", "--id", "nonsense", "--dims", "5,4,1"])), 2);
    assert_eq!(code(&run(&["check-lemma", "--id", "curvature-dlambda", "--dims", "4,3,1"])), 2);
}

#[test]
fn constants_signs_and_determinism() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        assert_eq!(code(&run(&["constants", "--dims", "4,2,2", "--gamma", "1.5", "--out", s(p)])), 0);
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r.split(',').nth(4) == Some("true")), "{text}");
    assert!(text.lines().any(|l| l.starts_with("# signs_ok = true; passed = true")));
}

#[test]
fn corrupted_constant_fails_certificate() {
    let o = run(&["constants", "--dims", "4,2,2", "--gamma", "1.5", "--corrupt", "b1=1.1"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("passed = false"));
}

#[test]
fn solve_reduced_exit_matrix() {
    let dir = TempDir::new().unwrap();
    let good = write(&dir, "flat.json", FLAT);
    let out = dir.path().join("ansatz.json");
    assert_eq!(code(&run(&["solve-reduced", "--config", s(&good), "--out", s(&out)])), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["certificates"]["degree"], -1);
    assert_eq!(v["bubbles"].as_array().unwrap().len(), 2);
    assert!(v["certificates"]["residual_sup"].as_f64().unwrap() < 1e-12);

    let positive_k = FLAT.replace(r#""xi":[-1,-1,-1,-1],"a":[-1]"#, r#""xi":[1,1,1,1],"a":[1]"#);
    let bad = write(&dir, "bad.json", &positive_k);
    let o = run(&["solve-reduced", "--config", s(&bad)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("g = "));

    let boxed = write(&dir, "box.json", &FLAT.replace(r#""epsilon":0.01,"#, r#""epsilon":0.01,"box":[20,100],"#));
    let o = run(&["solve-reduced", "--config", s(&boxed)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("degree"));

    let missing = dir.path().join("missing.json");
    assert_eq!(code(&run(&["solve-reduced", "--config", s(&missing)])), 2);
    let broken = write(&dir, "broken.json", "{\"kind\": ");
    assert_eq!(code(&run(&["solve-reduced", "--config", s(&broken)])), 2);
    let unknown = write(&dir, "unknown.json", &FLAT.replace(r#""epsilon":0.01,"#, r#""epsilon":0.01,"colour":1,"#));
    assert_eq!(code(&run(&["solve-reduced", "--config", s(&unknown)])), 2);

    let maxp = r#"{"kind":"max_points","N":3,"k":2,"h":1,"a0":0.5,"a1":2,"sigma":0.5,"nu":0.5,
        "points":[{"eta":[-25],"K":1,"gamma":0.5,"q":1},{"eta":[25],"K":1,"gamma":1.8,"q":1}]}"#;
    let outside = write(&dir, "gamma.json", maxp);
    assert_eq!(code(&run(&["solve-reduced", "--config", s(&outside), "--separation", "50"])), 2);
}

#[test]
fn residual_sweep_is_deterministic_and_decreasing() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "flat.json", FLAT);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = run(&["residual-sweep", "--config", s(&cfg), "--epsilons", "1e-2,3e-3,1e-3", "--out", s(p)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("# residual_decreasing = true"));
    assert!(text.contains("param,lambda1,lambda2,eps12,energy,fnorm_proxy,res_sup,res_l2,pohozaev"));
    assert_eq!(code(&run(&["residual-sweep", "--config", s(&cfg)])), 2);
    assert_eq!(code(&run(&["residual-sweep", "--config", s(&cfg), "--epsilons", "-1"])), 2);
}

fn map_rows(text: &str) -> Vec<(f64, f64, f64)> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (v[0], v[1], v[2])
        })
        .collect()
}

#[test]
fn energy_map_single_cell_and_symmetry() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "flat.json", FLAT);
    let o = run(&["energy-map", "--config", s(&cfg), "--grid", "1", "--lambda1", "500,900", "--lambda2", "700,900"]);
    assert_eq!(code(&o), 0);
    let rows = map_rows(&String::from_utf8_lossy(&o.stdout));
    assert_eq!(rows.len(), 1);
    let land = flat_model(0.01);
    let dims = land.patches[0].dims;
    let bs = vec![Bubble::new(dims, vec![-0.5], 500.0).unwrap(), Bubble::new(dims, vec![0.5], 700.0).unwrap()];
    let e = energy(&ConcentrationAnsatz::new(bs, vec![1.0, 1.0], None).unwrap(), &land, &QuadratureSpec::with_rel_tol(1e-8))
        .unwrap();
    assert!((rows[0].2 - e).abs() <= 1e-14 * e.abs(), "{} {e}", rows[0].2);

    let o = run(&["energy-map", "--config", s(&cfg), "--grid", "4"]);
    assert_eq!(code(&o), 0);
    let rows = map_rows(&String::from_utf8_lossy(&o.stdout));
    assert_eq!(rows.len(), 16);
    for i in 0..4 {
        for j in 0..4 {
            let (a, b) = (rows[4 * i + j].2, rows[4 * j + i].2);
            assert!((a - b).abs() <= 1e-8 * a.abs(), "{a} {b}");
        }
    }
}

#[test]
fn transform_demo_chain_matches_scaled_bubble() {
    for n in ["1", "2"] {
        let o = run(&["transform-demo", "--n", n, "--points", "20", "--norms"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let text = String::from_utf8_lossy(&o.stdout).to_string();
        let header: Vec<&str> = text.lines().find(|l| !l.starts_with('#')).unwrap().split(',').collect();
        let iv = header.iter().position(|h| *h == "v_euclid").unwrap();
        let is = header.iter().position(|h| *h == "scaled_bubble").unwrap();
        let rows: Vec<Vec<f64>> = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 20);
        for r in rows {
            assert!((r[iv] - r[is]).abs() <= 1e-12 * r[is]);
        }
        assert_eq!(text, String::from_utf8_lossy(&run(&["transform-demo", "--n", n, "--points", "20", "--norms"]).stdout));
    }
    assert_eq!(code(&run(&["transform-demo", "--profile", "square"])), 2);
}

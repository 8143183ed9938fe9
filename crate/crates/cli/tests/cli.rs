use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn qtext(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtext")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn write(dir: &TempDir, name: &str, v: &Value) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn read(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Real text with the given off-diagonal entries.
fn real_text(n: usize, entries: &[(usize, usize, f64)]) -> Value {
    let mut g = vec![vec![[0.0, 0.0]; n]; n];
    for (i, row) in g.iter_mut().enumerate() {
        row[i] = [1.0, 0.0];
    }
    for &(i, j, z) in entries {
        g[i][j] = [z, 0.0];
        g[j][i] = [z, 0.0];
    }
    json!({ "n": n, "gram": g })
}

#[test]
fn classify_identity() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "id.json", &real_text(3, &[]));
    let o = qtext(&["classify", "-i", s(&t)]);
    assert_eq!(code(&o), 0);
    let d = stdout_json(&o);
    assert_eq!(d["reason"], "OK_CLASSICAL");
    assert_eq!(d["translatable"], true);
}

#[test]
fn classify_two_k2() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "2k2.json", &real_text(4, &[(0, 1, 0.5), (2, 3, 0.5)]));
    let o = qtext(&["classify", "-i", s(&t)]);
    assert_eq!(code(&o), 1);
    let d = stdout_json(&o);
    assert_eq!(d["reason"], "NOT_WELL_SPLIT");
    assert_eq!(d["forbidden_witness"]["kind"], "TwoK2");

    let o = qtext(&["translate", "-i", s(&t)]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout_json(&o)["reason"], "NOT_WELL_SPLIT");
}

#[test]
fn translate_verify_and_tamper() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "u.json", &real_text(3, &[(0, 1, 0.5), (0, 2, 0.5), (1, 2, 0.5)]));
    let w = dir.path().join("w.json");
    assert_eq!(code(&qtext(&["translate", "-i", s(&t), "-o", s(&w)])), 0);
    let o = qtext(&["verify", "-i", s(&t), "-w", s(&w)]);
    assert_eq!(code(&o), 0);
    let r = stdout_json(&o);
    assert_eq!(r["pass"], true);
    assert!(r["eq4"].as_f64().unwrap() <= 1e-8);

    let mut witness = read(&w);
    let y = witness["output_gram"][0][1][0].as_f64().unwrap();
    witness["output_gram"][0][1][0] = json!(y + 0.1);
    let bad = write(&dir, "bad.json", &witness);
    let o = qtext(&["verify", "-i", s(&t), "-w", s(&bad)]);
    assert_eq!(code(&o), 3);
    assert_eq!(stdout_json(&o)["pass"], false);
}

#[test]
fn sign_and_q0_restrictions() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "u.json", &real_text(3, &[(0, 1, 0.5), (0, 2, 0.5), (1, 2, 0.5)]));
    assert_eq!(code(&qtext(&["translate", "-i", s(&t), "--sign", "+", "--budget", "2000"])), 1);
    let o = qtext(&["translate", "-i", s(&t), "--sign=-"]);
    assert_eq!(code(&o), 0);
    assert!(stdout_json(&o)["Q"].as_f64().unwrap() < 0.0);

    let o = qtext(&["classify", "-i", s(&t), "--q0"]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout_json(&o)["reason"], "NOT_CLASSICAL_Q0");
    assert_eq!(code(&qtext(&["translate", "-i", s(&t), "--q0"])), 1);

    let id = write(&dir, "id.json", &real_text(2, &[]));
    let o = qtext(&["translate", "-i", s(&id), "--q0"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["Q"], 0.0);
}

#[test]
fn untranslatable_four_text() {
    let dir = TempDir::new().unwrap();
    let t = dir.path().join("t.json");
    assert_eq!(code(&qtext(&["gen", "--mode", "untranslatable4", "-o", s(&t)])), 0);
    let o = qtext(&["classify", "-i", s(&t)]);
    assert_eq!(code(&o), 1);
    let d = stdout_json(&o);
    assert_eq!(d["reason"], "THEOREM_F_FAIL");
    assert_eq!(code(&qtext(&["validate", "-i", s(&t)])), 0);
}

#[test]
fn graph_analyze_and_realize() {
    let dir = TempDir::new().unwrap();
    let star = write(&dir, "star.json", &json!({ "n": 4, "edges": [[0, 1], [0, 2], [0, 3]] }));
    let o = qtext(&["analyze", "-g", s(&star)]);
    assert_eq!(code(&o), 0);
    let a = stdout_json(&o);
    assert_eq!(a["class"], "WellSplit");
    assert!(a["shape"].is_object());

    let c4 = write(&dir, "c4.json", &json!({ "n": 4, "edges": [[0, 1], [1, 2], [2, 3], [0, 3]] }));
    let a = stdout_json(&qtext(&["analyze", "-g", s(&c4)]));
    assert_eq!(a["witness"]["kind"], "C4");
    assert_eq!(code(&qtext(&["realize", "-g", s(&c4)])), 1);

    let (t, w, g) = (dir.path().join("t.json"), dir.path().join("w.json"), dir.path().join("g.json"));
    assert_eq!(code(&qtext(&["realize", "-g", s(&star), "-o", s(&t), "-w", s(&w)])), 0);
    assert_eq!(code(&qtext(&["verify", "-i", s(&t), "-w", s(&w)])), 0);
    assert_eq!(code(&qtext(&["graph", "-i", s(&t), "-o", s(&g)])), 0);
    assert_eq!(read(&g), read(&star));

    let both = stdout_json(&qtext(&["realize", "-g", s(&star)]));
    assert_eq!(both["text"], read(&t));
    assert_eq!(both["witness"], read(&w));
}

#[test]
fn validate_reports_properties() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "t.json", &real_text(3, &[(0, 1, 0.5)]));
    let o = qtext(&["validate", "-i", s(&t)]);
    assert_eq!(code(&o), 0);
    let r = stdout_json(&o);
    assert_eq!(r["n"], 3);
    assert_eq!(r["rank"], 3);
    assert_eq!(r["classical"], false);
    assert_eq!(r["fully_quantum"], false);
    assert_eq!(r["null_pairs"], json!([[0, 2], [1, 2]]));
}

#[test]
fn invalid_input() {
    let dir = TempDir::new().unwrap();
    let not_psd = write(&dir, "bad.json", &real_text(3, &[(0, 1, 0.9), (0, 2, 0.9), (1, 2, -0.9)]));
    let o = qtext(&["classify", "-i", s(&not_psd)]);
    assert_eq!(code(&o), 2);
    assert!(o.stdout.is_empty());

    let o = qtext(&["--json", "validate", "-i", s(&not_psd)]);
    assert_eq!(code(&o), 2);
    let e: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(e["error"], "invalid_input");
    assert_eq!(e["exit_code"], 2);

    assert_eq!(code(&qtext(&["classify", "-i", s(&not_psd), "--bogus"])), 2);
    assert_eq!(code(&qtext(&["classify", "-i", "/nonexistent/t.json"])), 2);
    let extra = write(&dir, "extra.json", &json!({ "n": 1, "gram": [[[1.0, 0.0]]], "x": 1 }));
    assert_eq!(code(&qtext(&["validate", "-i", s(&extra)])), 2);
    assert_eq!(code(&qtext(&["gen", "--mode", "uniform", "-n", "3", "--z", "-0.6"])), 2);
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "spec.json", &json!({ "mode": "random_efficient", "n": 4, "seed": 7 }));
    let t = dir.path().join("t.json");
    assert_eq!(code(&qtext(&["gen", "-i", s(&spec), "-o", s(&t)])), 0);
    let flags = qtext(&["gen", "--mode", "random_efficient", "-n", "4", "--seed", "7"]);
    assert_eq!(flags.stdout, std::fs::read(&t).unwrap());

    let mixed = write(&dir, "m.json", &real_text(4, &[(0, 1, -0.3), (0, 2, -0.3), (1, 2, -0.3), (0, 3, 0.4)]));
    for input in [&t, &mixed] {
        let a = qtext(&["translate", "-i", s(input), "--seed", "3"]);
        let b = Command::new(env!("CARGO_BIN_EXE_qtext"))
            .args(["translate", "-i", s(input), "--seed", "3"])
            .env("RAYON_NUM_THREADS", "1")
            .output()
            .unwrap();
        assert!(code(&a) == 0 || code(&a) == 1, "{}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout);
        assert_eq!(code(&a), code(&b));
    }
    let a = qtext(&["translate", "-i", s(&mixed)]);
    assert_eq!(code(&a), 0);
    let w = write(&dir, "w.json", &stdout_json(&a));
    assert_eq!(code(&qtext(&["verify", "-i", s(&mixed), "-w", s(&w)])), 0);
}

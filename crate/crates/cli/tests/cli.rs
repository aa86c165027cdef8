use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kmslab_cli::commands::{catalog_file, catalog_names};
use kmslab_cli::InstanceFile;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kms-lab"))
}

fn instance(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("instances").join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn critical_beta_examples() {
    let out = run(&["critical-beta", path(&instance("cuntz2"))]);
    assert_eq!(out.status.code(), Some(0));
    let bc = report(&out)["beta_c"].as_f64().unwrap();
    assert_eq!(format!("{bc:.7}"), "0.6931472");

    let out = run(&["critical-beta", path(&instance("fibonacci"))]);
    assert_eq!(out.status.code(), Some(0));
    let bc = report(&out)["beta_c"].as_f64().unwrap();
    assert_eq!(format!("{bc:.7}"), "0.4812118");

    let out = run(&["critical-beta", path(&instance("acyclic"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("r(Z(β)) < 1 for all β ≥ 0"));
    assert_eq!(report(&out)["result"], "none");
}

#[test]
fn solve_examples() {
    let ln3 = format!("{:?}", 3f64.ln());
    let out = run(&["solve", path(&instance("cuntz2")), "--beta", &ln3, "--target", "toeplitz"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!((r["trace"]["t"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(r["type"], "finite");

    let out = run(&["solve", path(&instance("cuntz2")), "--beta", &ln3, "--target", "pimsner"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["result"], "none");

    let out = run(&["solve", path(&instance("fibonacci")), "--beta", "critical", "--target", "pimsner"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((r["trace"]["t"][0].as_f64().unwrap() - 1.0 / golden).abs() < 1e-9);
    assert_eq!(r["type"], "infinite");
    assert!(r["wold"]["lambda"].as_f64().unwrap() < 1e-9);
}

#[test]
fn evaluate_examples() {
    let words = scratch(
        "words.json",
        r#"[{"xi": [[{"w":0,"v":0,"copy":0}]], "eta": [[{"w":0,"v":0,"copy":0}]]},
            {"xi": [[{"w":0,"v":0,"copy":1}]]},
            {}]"#,
    );
    let out = run(&["evaluate", path(&instance("cuntz2")), "--words", path(&words)]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let v = |i: usize| r["values"][i]["value"][0].as_f64().unwrap();
    assert!((v(0) - 0.5).abs() < 1e-12);
    assert_eq!(v(1), 0.0);
    assert!((v(2) - 1.0).abs() < 1e-15);
}

#[test]
fn verify_examples() {
    let out = run(&["verify", path(&instance("cuntz2")), "--seed", "42", "--max-degree", "3", "--fock-level", "6"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(&out)["pass"], true);

    let out = run(&["verify", path(&instance("cuntz2")), "--seed", "42", "--beta", "0.5", "--trace", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let r = report(&out);
    let failed: Vec<&str> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["check"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"subinvariance") && failed.contains(&"moment_psd"), "{failed:?}");

    let out = run(&["verify", path(&instance("twisted")), "--seed", "7", "--beta", "1.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert!(r["weights"].get("defining_property").is_some());

    let out = run(&["verify", path(&instance("fibonacci")), "--seed", "3", "--beta", "1.0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(report(&out)["fock"].get("tail_bound").is_some());
}

#[test]
fn verify_requires_a_seed() {
    let out = run(&["verify", path(&instance("cuntz2"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn reports_are_byte_identical() {
    let fib = instance("fibonacci");
    let args = ["verify", path(&fib), "--seed", "9", "--beta", "0.9"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["verify", path(&fib), "--seed", "10", "--beta", "0.9"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn floats_carry_seventeen_digits() {
    let out = run(&["critical-beta", path(&instance("cuntz2"))]);
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.contains("\"beta_c\"")).unwrap();
    let digits: String =
        line.split(':').nth(1).unwrap().chars().take_while(|c| *c != 'e').filter(|c| c.is_ascii_digit()).collect();
    assert_eq!(digits.len(), 17, "{line}");
}

#[test]
fn malformed_files_exit_one_with_diagnostics() {
    let bad = scratch("bad.json", "{\n  \"format\": \"kms-lab/1\",\n  \"algebra\": {\"block_dims\": [1]},\n  oops\n}");
    let out = run(&["critical-beta", path(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
    assert!(out.stdout.is_empty());

    let text = std::fs::read_to_string(instance("cuntz2")).unwrap().replace("kms-lab/1", "kms-lab/9");
    let out = run(&["solve", path(&scratch("version.json", &text))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("format"));

    let mut f = InstanceFile::parse(&std::fs::read_to_string(instance("cuntz2")).unwrap()).unwrap();
    f.generator.slots.values_mut().next().unwrap()[0][1] = [0.5, 0.0];
    let out = run(&["solve", path(&scratch("nonherm.json", &f.to_json()))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("generator.slots.(0,0)"));

    let words = scratch("badwords.json", r#"[{"xi": [[{"w":0,"v":0,"copy":5}]]}]"#);
    let out = run(&["evaluate", path(&instance("cuntz2")), "--words", path(&words)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("words[0].xi[0][0]"));
}

#[test]
fn non_positive_energy_is_an_input_error() {
    let mut f = InstanceFile::parse(&std::fs::read_to_string(instance("cuntz2")).unwrap()).unwrap();
    f.generator.slots.values_mut().next().unwrap()[0][0] = [-1.0, 0.0];
    let out = run(&["critical-beta", path(&scratch("negative.json", &f.to_json()))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn shipped_instances_match_the_catalog_and_round_trip() {
    for name in ["cuntz2", "fibonacci", "acyclic", "twisted"] {
        let text = std::fs::read_to_string(instance(name)).unwrap();
        let f = InstanceFile::parse(&text).unwrap();
        assert_eq!(f, catalog_file(name).unwrap(), "{name}");
        assert_eq!(InstanceFile::parse(&f.to_json()).unwrap(), f);
    }
    for name in catalog_names() {
        let f = catalog_file(&name).unwrap();
        let again = InstanceFile::parse(&f.to_json()).unwrap();
        assert_eq!(again, f, "{name}");
        assert!(again.model().is_ok());
    }
    let out = run(&["catalog", "--list"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(report(&out).as_array().unwrap().iter().any(|v| v == "fibonacci"));
}

#[test]
fn random_instances_round_trip() {
    for seed in 0..60 {
        let inst = kmslab_core::catalog::random_instance(seed, 3, 2, 2).unwrap();
        let f = InstanceFile::from_parts(&inst.correspondence, &inst.generator, inst.dynamics.as_ref());
        let text = f.to_json();
        let again = InstanceFile::parse(&text).unwrap();
        assert_eq!(again, f, "seed {seed}");
        assert_eq!(again.to_json(), text);
        let m = again.model().unwrap();
        assert_eq!(m.correspondence.mult(), inst.correspondence.mult());
    }
}

use std::path::PathBuf;
use std::process::Command;

use kazcert::sdpa::import_sdpa;
use kazcert::solver::{export_solution, solve, SolverConfig};

fn dir(name: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn kazcert(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_kazcert")).args(args).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap(), text)
}

fn s(p: &PathBuf) -> &str {
    p.to_str().unwrap()
}

#[test]
fn certify_and_verify_paren() {
    let d = dir("paren");
    let (code, out) = kazcert(&["certify", "--preset", "cyclic:3", "--mode", "paren", "--degree", "1", "--out", s(&d)]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("Δ₀(Δ₁ - "), "{out}");
    let (code, out) = kazcert(&[
        "verify",
        "--certificate",
        s(&d.join("certificate.txt")),
        "--complex",
        s(&d.join("complex.txt")),
    ]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("accepted"));
}

#[test]
fn wrong_complex_is_a_mismatch() {
    let (a, b) = (dir("mismatch-a"), dir("mismatch-b"));
    assert_eq!(kazcert(&["certify", "--preset", "cyclic:3", "--out", s(&a)]).0, 0);
    assert_eq!(kazcert(&["certify", "--preset", "cyclic:4", "--radius", "2", "--out", s(&b)]).0, 0);
    let (code, out) = kazcert(&[
        "verify",
        "--certificate",
        s(&a.join("certificate.txt")),
        "--complex",
        s(&b.join("complex.txt")),
    ]);
    assert_eq!(code, 4, "{out}");
}

#[test]
fn tampered_certificate_exits_two() {
    let d = dir("tamper");
    assert_eq!(kazcert(&["certify", "--preset", "cyclic:3", "--out", s(&d)]).0, 0);
    let path = d.join("certificate.txt");
    let text = std::fs::read_to_string(&path).unwrap();
    let tampered: String = text
        .lines()
        .map(|l| if l.starts_with("gram 0 0 ") { "gram 0 0 1/3".to_string() } else { l.to_string() })
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(&path, tampered).unwrap();
    let (code, out) = kazcert(&["verify", "--certificate", s(&path), "--complex", s(&d.join("complex.txt"))]);
    assert_eq!(code, 2, "{out}");
    assert!(out.contains("block (0, 0)"), "{out}");
}

#[test]
fn integers_have_no_certificate() {
    let d = dir("z");
    let (code, out) = kazcert(&["certify", "--preset", "z", "--mode", "ozawa", "--out", s(&d)]);
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("no certificate at radius d = 1"));
    assert!(d.join("diagnostics.txt").exists());
}

#[test]
fn usage_errors() {
    assert_eq!(kazcert(&["certify", "--presentation", "/no/such/file"]).0, 64);
    assert_eq!(kazcert(&["certify", "--preset", "cyclic:3", "--mode", "ozawa", "--degree", "2"]).0, 64);
    assert_eq!(kazcert(&["certify", "--preset", "nonsense"]).0, 64);
    assert_eq!(kazcert(&["frobnicate"]).0, 64);
    // degree 1 is not proven exact for the presentation complex of a free abelian group
    assert_eq!(kazcert(&["certify", "--preset", "z2", "--mode", "bracket", "--degree", "2"]).0, 64);
    let d = dir("garbage");
    let junk = d.join("junk.txt");
    std::fs::write(&junk, "not a certificate").unwrap();
    assert_eq!(kazcert(&["verify", "--certificate", s(&junk), "--complex", s(&junk)]).0, 65);
}

#[test]
fn oracle_commands() {
    let (code, out) = kazcert(&["oracle", "--preset", "cyclic:5", "--module", "reg0", "--degrees", "0..3"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.trim_end().ends_with("PASS"));
    let d = dir("oracle");
    let json = d.join("report.json");
    let (code, out) = kazcert(&["oracle", "--preset", "s3", "--module", "reg0", "--degrees", "0..1", "--json", s(&json)]);
    assert_eq!(code, 0, "{out}");
    assert!(std::fs::read_to_string(json).unwrap().contains("\"module\": \"reg0\""));
    let rot = d.join("rot.txt");
    std::fs::write(&rot, "0 -1\n1 0\n").unwrap();
    let (code, out) = kazcert(&["oracle", "--preset", "cyclic:4", "--module-file", s(&rot), "--degrees", "0,1,2"]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn export_solve_import() {
    let d = dir("sdpa");
    let problem = d.join("problem.sdpa");
    let (code, out) = kazcert(&["export-sdpa", "--preset", "cyclic:4", "--mode", "bracket", "--degree", "1", "--out", s(&problem)]);
    assert_eq!(code, 0, "{out}");
    let p = import_sdpa(&std::fs::read_to_string(&problem).unwrap()).unwrap();
    let solution = d.join("solution.txt");
    std::fs::write(&solution, export_solution(&solve(&p, &SolverConfig::default()))).unwrap();
    let out_dir = d.join("out");
    let (code, out) = kazcert(&[
        "import",
        "--preset",
        "cyclic:4",
        "--problem",
        s(&problem),
        "--solution",
        s(&solution),
        "--out",
        s(&out_dir),
    ]);
    assert_eq!(code, 0, "{out}");
    let (code, out) = kazcert(&[
        "verify",
        "--certificate",
        s(&out_dir.join("certificate.txt")),
        "--complex",
        s(&out_dir.join("complex.txt")),
    ]);
    assert_eq!(code, 0, "{out}");
    let (code, _) = kazcert(&["import", "--preset", "cyclic:5", "--problem", s(&problem), "--solution", s(&solution)]);
    assert_eq!(code, 4);
}

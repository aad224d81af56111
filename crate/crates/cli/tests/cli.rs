use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stoqham"))
}

fn toy(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../circuits").join(format!("{name}.qc"))
}

fn run(cmd: &mut Command) -> (i32, Value, String) {
    let Output { status, stdout, stderr } = cmd.output().expect("spawn");
    let json = serde_json::from_slice(&stdout).unwrap_or(Value::Null);
    (status.code().unwrap_or(-1), json, String::from_utf8_lossy(&stderr).into_owned())
}

#[test]
fn compile_line_writes_four_terms() {
    let dir = tempfile::tempdir().unwrap();
    let (code, summary, err) = run(bin().args(["compile", "--construction", "line1d", "--circuit"]).arg(toy("n4_accept")).arg("--out").arg(dir.path()));
    assert_eq!(code, 0, "{err}");
    assert_eq!(summary["dim"], 6859);
    assert_eq!(summary["site_dim"], 19);
    let mtx = std::fs::read_dir(dir.path()).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "mtx")).count();
    assert_eq!(mtx, 4);
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn compile_grid_reports_shape() {
    let (code, summary, err) = run(bin().args(["compile", "--circuit"]).arg(toy("n2_accept")));
    assert_eq!(code, 0, "{err}");
    assert_eq!(summary["grid"], "1x3");
    assert_eq!(summary["site_dim"], 14);
    assert_eq!(summary["dim"], 2744);
}

#[test]
fn malformed_gate_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.qc");
    std::fs::write(&path, "QUBITS 3\nROLE 2 output\nTOF 0 1\n").unwrap();
    let (code, _, err) = run(bin().args(["compile", "--circuit"]).arg(&path));
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"), "{err}");
}

#[test]
fn positive_off_diagonal_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(bin().args(["compile", "--construction", "kitaev", "--circuit"]).arg(toy("n2_accept")).arg("--out").arg(dir.path()));
    assert_eq!(code, 0, "{err}");
    let good = dir.path().join("kitaev_prop.mtx");
    assert_eq!(run(bin().args(["verify", "--mtx"]).arg(&good)).0, 0);

    let text = std::fs::read_to_string(&good).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let k = lines.iter().position(|l| {
        let f: Vec<&str> = l.split_whitespace().collect();
        !l.starts_with('%') && f.len() == 3 && f[0] != f[1] && f[2].parse::<f64>().is_ok_and(|v| v < 0.0)
    });
    let k = k.expect("an off-diagonal entry");
    let f: Vec<String> = lines[k].split_whitespace().map(String::from).collect();
    lines[k] = format!("{} {} 0.25", f[0], f[1]);
    let bad = dir.path().join("bad.mtx");
    std::fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let (code, report, _) = run(bin().args(["verify", "--mtx"]).arg(&bad));
    assert_eq!(code, 1);
    assert_eq!(report["pass"], false);
}

#[test]
fn verify_reproduces_the_cycle_table() {
    let (code, report, _) = run(bin().args(["verify", "--fig5"]));
    assert_eq!(code, 0);
    assert_eq!(report["checks"][0]["detail"]["rows"], 22);
    assert_eq!(report["checks"][0]["detail"]["transitions"], 21);
}

#[test]
fn verify_small_instances() {
    for (con, name) in [("kitaev", "n4_reject"), ("grid2d", "n2_accept"), ("line1d", "n4_accept")] {
        let (code, report, err) = run(bin().args(["verify", "--construction", con, "--circuit"]).arg(toy(name)));
        assert_eq!(code, 0, "{con}/{name}: {report} {err}");
    }
}

#[test]
fn spectrum_on_the_legal_sector() {
    let (code, report, err) = run(bin().args(["spectrum", "--construction", "line1d", "--sector", "legal", "--mode", "dense", "--circuit"]).arg(toy("n4_reject")));
    assert_eq!(code, 0, "{err}");
    assert!(report["spectrum"]["lambda_min"].as_f64().unwrap() > 1e-9);
    assert_eq!(report["sector"], "legal");
}

#[test]
fn unknown_solver_is_an_error() {
    let (code, _, _) = run(bin().args(["spectrum", "--mode", "qr", "--circuit"]).arg(toy("n2_accept")));
    assert_eq!(code, 2);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const HEADER: &str = r#"
[geometry]
dim = 2
sizes = [16]

[operator]
family = "monge_ampere"
sigma = 0.5
"#;

struct Run {
    out: PathBuf,
    output: Output,
}

impl Run {
    fn code(&self) -> i32 {
        self.output.status.code().unwrap()
    }

    fn stderr(&self) -> String {
        String::from_utf8_lossy(&self.output.stderr).into_owned()
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.out.join(name)).unwrap()
    }

    fn report(&self) -> Value {
        serde_json::from_str(&self.read("report.json")).unwrap()
    }
}

fn run(dir: &Path, cmd: &str, body: &str, extra: &[&str]) -> Run {
    let cfg = dir.join(format!("{cmd}.toml"));
    std::fs::write(&cfg, format!("{HEADER}{body}")).unwrap();
    let out = dir.join(format!("out_{cmd}"));
    let output = Command::new(env!("CARGO_BIN_EXE_hessian-lab"))
        .args([cmd, "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    Run { out, output }
}

#[test]
fn constant_rhs_solves_to_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run(
        tmp.path(),
        "solve",
        "[problem]\nrhs = { expr = { const = 1.0 } }\n",
        &[],
    );
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let csv = r.read("solve.csv");
    assert_eq!(
        csv,
        "size,b,residual,bisections,sup_norm,error,order\r\n16,0.0,0.0,0,0.0,,\r\n"
    );
    let report = r.report();
    assert_eq!(report["pass"], Value::Bool(true));
    assert_eq!(report["input_hash"].as_str().unwrap().len(), 64);
    let outputs: Vec<&str> = report["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["path"].as_str().unwrap())
        .collect();
    for f in ["phi_16.bin", "solve.csv", "solve_path.csv", "solve.json"] {
        assert!(outputs.contains(&f), "{outputs:?}");
    }
    let phi = hessian_lab_cli::commands::read_field(&r.out.join("phi_16.bin")).unwrap();
    assert_eq!(phi.max_abs(), 0.0);
}

#[test]
fn cone_violation_names_the_point() {
    let tmp = tempfile::tempdir().unwrap();
    let body = r#"[problem]
chi = { components = [{ trig = [{ coeff = -1.0, modes = [1, 0], kinds = ["cos", "cos"] }] }, { const = 0.0 }, { const = 1.0 }] }
rhs = { expr = { const = 1.0 } }
"#;
    let r = run(tmp.path(), "solve", body, &[]);
    assert_eq!(r.code(), 1);
    let err = r.stderr();
    assert!(
        err.contains("cone violation") && err.contains("[0, 0]"),
        "{err}"
    );
}

#[test]
fn unknown_experiment_lists_valid_names() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run(
        tmp.path(),
        "experiment",
        "[experiment]\nname = \"nonsense\"\n",
        &[],
    );
    assert_eq!(r.code(), 1);
    assert!(r.stderr().contains("weak-solve"), "{}", r.stderr());
}

#[test]
fn empty_parameter_grid_warns_and_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run(tmp.path(), "experiment", "[experiment]\nname = \"stability\"\neta = { const = 1.0 }\ndeltas = []\n[problem]\nrhs = { expr = { const = 1.0 } }\n", &[]);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    assert!(r.stderr().contains("empty parameter grid"));
    let report = r.report();
    assert_eq!(report["warnings"].as_array().unwrap().len(), 1);
    assert!(report["checks"].as_array().unwrap().is_empty());
}

#[test]
fn stability_reports_the_exponent() {
    let tmp = tempfile::tempdir().unwrap();
    let body = r#"[problem]
rhs = { expr = { exp = { trig = [{ coeff = 0.5, modes = [1, 1], kinds = ["sin", "sin"] }] } }, times_f_chi = true }
[experiment]
name = "stability"
eta = { trig = [{ coeff = 1.0, modes = [1, 0], kinds = ["cos", "cos"] }] }
deltas = [0.2, 0.1, 0.0]
"#;
    let r = run(tmp.path(), "experiment", body, &[]);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let summary: Value = serde_json::from_str(&r.read("stability.json")).unwrap();
    assert_eq!(summary["exponent"].as_f64().unwrap(), 1.0 / 3.0);
    let csv = r.read("stability.csv");
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().last().unwrap().contains(",zero,"));
}

#[test]
fn abp_experiment_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run(
        tmp.path(),
        "experiment",
        "[experiment]\nname = \"abp\"\nresolution = 64\nrandom = 3\n",
        &[],
    );
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let stdout = String::from_utf8_lossy(&r.output.stdout).into_owned();
    assert!(stdout.contains("PASS abp.equality_case"), "{stdout}");
    assert_eq!(r.read("abp.csv").lines().count(), 5);
}

#[test]
fn failed_certificate_exits_with_check_code() {
    // ψ growing like |p|³ in the gradient violates the o(|ω|³) growth condition
    let tmp = tempfile::tempdir().unwrap();
    let body = r#"[problem]
rhs = { expr = { sum = [{ const = 1.0 }, { trig = [{ coeff = 0.2, modes = [1, 0], kinds = ["sin", "cos"] }] }] } }
[experiment]
name = "gradient"
center = [0, 0]
radius = 0.25
schedule = { levels = 3 }
psi = [{ horizontal = 1.0, t_coeff = 0.0, grad_coeff = 1.0, grad_power = 3.0 }]
"#;
    let r = run(tmp.path(), "experiment", body, &[]);
    let report = r.report();
    let growth = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "gradient.growth[0]")
        .unwrap()
        .clone();
    assert_eq!(growth["pass"], Value::Bool(false), "{growth}");
    let levels = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "gradient.level_envelope")
        .unwrap()
        .clone();
    assert_eq!(levels["pass"], Value::Bool(true), "{levels}");
    assert_eq!(r.code(), 3);
}

#[test]
fn seed_flag_overrides_config_and_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let body = "[conditions]\nsamples = 500\n";
    let a = run(tmp.path(), "verify-conditions", body, &["--seed", "5"]);
    assert_eq!(a.code(), 0, "{}", a.stderr());
    assert_eq!(a.report()["seed"], 5);
    let first = a.read("conditions.csv");
    let b = run(
        tmp.path(),
        "verify-conditions",
        body,
        &["--seed", "5", "--threads", "2"],
    );
    assert_eq!(b.read("conditions.csv"), first);
    let c = run(tmp.path(), "verify-conditions", body, &["--seed", "6"]);
    assert_ne!(c.read("conditions.csv"), first);
}

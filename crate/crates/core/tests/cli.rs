use std::path::Path;
use std::process::Command;

fn shapelab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_shapelab")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const GAUSSIAN: &str = r#"
[grid]
dim = 2
n = 64
box = 1.5

[data]
f = { kind = "gaussian", amp = 1.0, width = 0.5 }
g = { kind = "gaussian", amp = 1.0, width = 0.5 }
Q = { kind = "constant", value = 0.015625 }
domain = { kind = "ball", radius = 0.8 }

[optimize]
max_steps = 60
stop_tol = 1e-9

[blowup]
points = 4
seed = 11
balls = 3

[output]
directory = "run"
"#;

fn summary(dir: &Path, key: &str) -> String {
    let text = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
    text.lines().find_map(|l| l.strip_prefix(&format!("{key},"))).unwrap().to_string()
}

#[test]
fn missing_cell_count_exits_with_validation_code_and_no_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", &GAUSSIAN.replace("n = 64\n", ""));
    let out = shapelab(&["solve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    assert!(!tmp.path().join("run").exists());
    let unknown = write(tmp.path(), "unknown.toml", &GAUSSIAN.replace("seed = 11", "seed = 11\nsed = 1"));
    assert_eq!(shapelab(&["classify", "--config", &unknown]).status.code(), Some(2));
}

#[test]
fn empty_domain_is_a_numerical_failure_with_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let text = GAUSSIAN.replace("radius = 0.8 }", "radius = 0.001, center = [0.0117, 0.0117] }");
    let cfg = write(tmp.path(), "empty.toml", &text);
    let out = shapelab(&["solve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let m = std::fs::read_to_string(tmp.path().join("run/manifest.toml")).unwrap();
    assert!(m.contains("status = \"failed"));
}

#[test]
fn optimize_then_analyse_the_result() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "gauss.toml", GAUSSIAN);
    let out = shapelab(&["optimize", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = tmp.path().join("run");
    for f in ["opt_trace.csv", "final.fld", "summary.csv", "manifest.toml"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let r: f64 = summary(&run, "radius").parse().unwrap();
    assert!((r - 0.978).abs() < 0.1, "{r}");

    // Feed the optimum back as the domain of the analysis subcommands.
    let text = GAUSSIAN
        .replace("{ kind = \"ball\", radius = 0.8 }", "{ kind = \"file\", path = \"run/final.fld\" }")
        .replace("directory = \"run\"", "directory = \"analysis\"");
    let cfg = write(tmp.path(), "analysis.toml", &text);
    let dir = tmp.path().join("analysis");
    for sub in ["classify", "blowup", "diagnose"] {
        let out = shapelab(&[sub, "--config", &cfg]);
        assert!(out.status.success(), "{sub}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(dir.join("classification.csv").exists());
    assert!(dir.join("weiss_0.csv").exists() && dir.join("blowup_0.fld").exists());
    assert!(dir.join("diagnostics.csv").exists() && dir.join("minimality.csv").exists());

    // The manifest of the last run reproduces it byte for byte.
    let first = std::fs::read(dir.join("minimality.csv")).unwrap();
    let manifest = dir.join("manifest.toml");
    let copy = write(tmp.path(), "replay.toml", &std::fs::read_to_string(&manifest).unwrap());
    assert!(shapelab(&["diagnose", "--config", &copy]).status.success());
    assert_eq!(std::fs::read(dir.join("minimality.csv")).unwrap(), first);
}

#[test]
fn output_flag_overrides_the_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "gauss.toml", GAUSSIAN);
    let other = tmp.path().join("elsewhere");
    let out = shapelab(&["solve", "--config", &cfg, "--out", other.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(other.join("u.fld").exists() && !tmp.path().join("run").exists());
}

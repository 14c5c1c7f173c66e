use std::path::Path;
use std::process::{Command, Output};

fn run(config: &str, dir: &Path) -> Output {
    let path = dir.join("run.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_gibbs"))
        .arg("--config")
        .arg(&path)
        .arg("--output")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

const POISSON: &str = r#"command = "sample"
seed = 1

[model]
kind = "poisson"
activity = 2.0

[window]
lower = [0.0, 0.0]
upper = [1.0, 1.0]

[mc]
samples = 5
"#;

#[test]
fn minimal_poisson_run_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(POISSON, dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let samples = std::fs::read_to_string(dir.path().join("out/samples.jsonl")).unwrap();
    assert_eq!(samples.lines().count(), 5);
    let first: serde_json::Value = serde_json::from_str(samples.lines().next().unwrap()).unwrap();
    assert_eq!(first["seed"], 1);
    assert_eq!(first["config_hash"].as_str().unwrap().len(), 64);
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["config_hash"], first["config_hash"]);
}

#[test]
fn strauss_parameter_out_of_range_is_a_validation_error() {
    let config = r#"command = "sample"
seed = 1

[model]
kind = "strauss"
activity = 2.0
c = 1.5
range = 0.1

[window]
lower = [0.0, 0.0]
upper = [1.0, 1.0]
"#;
    let dir = tempfile::tempdir().unwrap();
    let out = run(config, dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("run.toml:7: invalid `c`"), "{err}");
}

#[test]
fn unknown_model_kind_is_a_validation_error() {
    let config = POISSON.replace("\"poisson\"", "\"gaussian\"");
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config, dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("run.toml:5:") && err.contains("gaussian"),
        "{err}"
    );
}

#[test]
fn exhausted_sampler_is_a_runtime_error() {
    let config = POISSON
        .replace(
            "kind = \"poisson\"\nactivity = 2.0",
            "kind = \"hard_sphere\"\nactivity = 200.0\nrange = 0.2",
        )
        .replace("samples = 5", "samples = 5\nmax_attempts = 10");
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config, dir.path());
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn seed_override_changes_samples_but_not_hash() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, POISSON).unwrap();
    let mut outputs = Vec::new();
    for (seed, sub) in [("1", "a"), ("2", "b")] {
        let status = Command::new(env!("CARGO_BIN_EXE_gibbs"))
            .args([
                "--config",
                path.to_str().unwrap(),
                "--seed",
                seed,
                "--output",
            ])
            .arg(dir.path().join(sub))
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read_to_string(dir.path().join(sub).join("samples.jsonl")).unwrap());
    }
    assert_ne!(outputs[0], outputs[1]);
    let hash = |s: &str| -> serde_json::Value {
        serde_json::from_str::<serde_json::Value>(s.lines().next().unwrap()).unwrap()["config_hash"]
            .clone()
    };
    assert_eq!(hash(&outputs[0]), hash(&outputs[1]));
}

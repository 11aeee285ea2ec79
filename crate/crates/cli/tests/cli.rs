use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

const SIX_EDGES: &str = "s,r,t\n0,1,0\n0,1,1\n2,3,2\n0,1,3\n2,3,4\n2,1,5\n";

fn config(dir: &Path) -> std::path::PathBuf {
    fs::write(dir.join("six.csv"), SIX_EDGES).unwrap();
    let cfg = dir.join("run.toml");
    fs::write(
        &cfg,
        r#"
seed = 1
ks = [1, 3]
repetitions = 2

[model]
gamma = 1.0
tau = 1.0
alpha = 1.0
decay = "exponential"
decay_scale = 1.0

[chain]
n_sweeps = 40
burn_in = 20
thin = 5

[split]
mode = "next-slot"
target_slot = 1

[dataset]
path = "six.csv"
header = true

[dataset.slotting]
kind = "explicit"
boundaries = [0.0, 2.5, 5.0]
"#,
    )
    .unwrap();
    cfg
}

fn run(args: &[&str], out: &Path, env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dynmdnd"));
    cmd.args(args).env_remove("DYNMDND_OUTPUT_DIR");
    if let Some(dir) = env_out {
        cmd.env("DYNMDND_OUTPUT_DIR", dir);
    } else {
        cmd.arg("--output").arg(out);
    }
    cmd.output().unwrap()
}

fn ok(output: &Output) -> String {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout.clone()).unwrap()
}

#[test]
fn full_pipeline_is_reproducible_and_fast() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let cfg = cfg.to_str().unwrap();
    let mut runs = Vec::new();
    let out = dir.path().join("a");
    for _ in 0..2 {
        let _ = fs::remove_dir_all(&out);
        let start = Instant::now();
        let mut stdout = String::new();
        for cmd in ["train", "loglik", "predict", "metrics", "evaluate"] {
            stdout += &ok(&run(&[cmd, "--config", cfg, "--seed", "7"], &out, None));
        }
        assert!(start.elapsed().as_secs_f64() < 5.0, "{:?}", start.elapsed());
        let files: Vec<Vec<u8>> = [
            "posterior.json",
            "predictions.csv",
            "metrics.csv",
            "metrics.json",
            "trace.csv",
        ]
        .iter()
        .map(|f| fs::read(out.join(f)).unwrap())
        .collect();
        runs.push((stdout, files));
    }
    assert_eq!(runs[0], runs[1]);
    let other = dir.path().join("c");
    ok(&run(
        &["train", "--config", cfg, "--seed", "8"],
        &other,
        None,
    ));
    assert_ne!(
        fs::read(other.join("posterior.json")).unwrap(),
        runs[0].1[0]
    );
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let env_dir = dir.path().join("from-env");
    ok(&run(
        &["train", "--config", cfg.to_str().unwrap()],
        Path::new(""),
        Some(&env_dir),
    ));
    assert!(env_dir.join("posterior.json").exists());
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let out = dir.path().join("o");
    let text = ok(&run(
        &[
            "config",
            "--config",
            cfg.to_str().unwrap(),
            "--decay",
            "logistic",
            "--decay-scale",
            "3",
            "--alpha",
            "0.5",
            "--chains",
            "2",
        ],
        &out,
        None,
    ));
    assert!(text.contains("decay = \"logistic\""));
    assert!(text.contains("decay_scale = 3.0"));
    assert!(text.contains("alpha = 0.5"));
    assert!(text.contains("n_chains = 2"));
}

#[test]
fn usage_and_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let cfg = cfg.to_str().unwrap();
    let out = dir.path().join("o");
    assert_eq!(
        run(&["train", "--bogus"], &out, None).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["train", "--config", cfg, "--alpha", "-1"], &out, None)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["train", "--config", cfg, "--decay", "cubic"], &out, None)
            .status
            .code(),
        Some(2)
    );
    fs::write(dir.path().join("bad.toml"), "nonsense = true\n").unwrap();
    let bad = dir.path().join("bad.toml");
    assert_eq!(
        run(&["train", "--config", bad.to_str().unwrap()], &out, None)
            .status
            .code(),
        Some(2)
    );
    // loglik without a trained posterior fails at run time
    let status = run(
        &["loglik", "--config", cfg],
        &dir.path().join("empty"),
        None,
    )
    .status;
    assert_eq!(status.code(), Some(1));
}

#[test]
fn simulate_command_writes_edges() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.toml");
    fs::write(&cfg, "[simulate]\nn_edges = 30\n[model]\ngamma = 1.0\ntau = 1.0\nalpha = 1.0\ndecay = \"identity\"\n").unwrap();
    let out = dir.path().join("o");
    let text = ok(&run(
        &["simulate", "--config", cfg.to_str().unwrap(), "--seed", "2"],
        &out,
        None,
    ));
    assert!(text.contains("\"n_edges\": 30"));
    assert_eq!(
        fs::read_to_string(out.join("edges.csv"))
            .unwrap()
            .lines()
            .count(),
        31
    );
}

#[test]
fn shipped_presets_resolve() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = run(
                &["config", "--config", path.to_str().unwrap()],
                Path::new("unused"),
                None,
            );
            assert!(
                out.status.success(),
                "{}: {}",
                path.display(),
                String::from_utf8_lossy(&out.stderr)
            );
            n += 1;
        }
    }
    assert!(n >= 5);
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dppo::checkpoint::Checkpoint;
use dppo::cli::METRICS_HEADER;
use dppo::config::RunConfig;

fn dppo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dppo"))
        .args(args)
        .env_remove("DPPO_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

const SMALL: &str = "\
master_seed = 3
camera.width = 16
camera.height = 16
network.input_size = 16
network.filters = 4, 4
network.kernels = 3, 3
network.dense = 8
sim.max_steps = 30
ppo.rollout_horizon = 32
ppo.minibatch_size = 16
ppo.epochs_per_update = 2
ppo.checkpoint_every = 2
";

fn write_config(dir: &Path, name: &str, extra: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, format!("{SMALL}{extra}")).unwrap();
    path.display().to_string()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(dppo(&[]).status.code(), Some(2));
    assert_eq!(dppo(&["fly"]).status.code(), Some(2));
    assert_eq!(dppo(&["train"]).status.code(), Some(2));
    assert_eq!(
        dppo(&["train", "/nonexistent/run.cfg"]).status.code(),
        Some(2)
    );
    assert_eq!(dppo(&["--help"]).status.code(), Some(0));
}

#[test]
fn zero_episodes_writes_initial_checkpoint_and_empty_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.cfg",
        "ppo.total_episodes = 0\noutput_dir = out\n",
    );
    let out = dppo(&["train", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let run = dir.path().join("out");
    assert!(run.join("checkpoints/ckpt_000000.bin").is_file());
    assert_eq!(
        fs::read_to_string(run.join("metrics.csv")).unwrap(),
        format!("{METRICS_HEADER}\n")
    );
    let resolved = RunConfig::load(&run.join("resolved_config")).unwrap();
    assert_eq!(resolved, RunConfig::load(Path::new(&cfg)).unwrap());
}

#[test]
fn config_errors_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", "ppo.gamma = 1.5\n");
    let out = dppo(&["train", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    assert!(err.contains("gamma") && err.contains("line 13"), "{err}");

    let cfg = write_config(dir.path(), "typo.cfg", "ppo.gamme = 0.9\n");
    let err = text(&dppo(&["train", &cfg]).stderr);
    assert!(err.contains("unknown key `ppo.gamme`"), "{err}");

    let cfg = write_config(dir.path(), "map.cfg", "map_path = missing.map\n");
    let out = dppo(&["train", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains(&dir.path().join("missing.map").display().to_string()));
}

#[test]
fn output_dir_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", "ppo.total_episodes = 0\n");
    let target = dir.path().join("elsewhere");
    let out = Command::new(env!("CARGO_BIN_EXE_dppo"))
        .args(["train", &cfg])
        .env("DPPO_OUTPUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("metrics.csv").is_file());
    assert!(!dir.path().join("dppo_output").exists());
}

#[test]
fn train_eval_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.cfg",
        "ppo.total_episodes = 40\noutput_dir = a\n",
    );
    let out = dppo(&["train", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let a = dir.path().join("a");
    let metrics = fs::read_to_string(a.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 41);

    // Evaluation: one report row per episode, comparison on request.
    let ckpt = a.join("checkpoints/latest.bin").display().to_string();
    let out = dppo(&[
        "eval",
        &ckpt,
        &cfg,
        "--episodes",
        "4",
        "--baseline",
        "random",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let report = fs::read_to_string(a.join("eval_report.csv")).unwrap();
    assert_eq!(report.lines().count(), 5);
    assert!(text(&out.stdout).contains("ratio,"));
    let traj = dir.path().join("traj.csv");
    let out = dppo(&[
        "eval",
        &ckpt,
        &cfg,
        "--episodes",
        "2",
        "--trajectory",
        traj.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(fs::read_to_string(&traj)
        .unwrap()
        .starts_with("episode,t,x,y,z,yaw,action,reward\n"));

    // Resume from an intermediate checkpoint after a simulated crash that
    // left rows past it in the logs.
    let b = dir.path().join("b");
    fs::create_dir_all(b.join("checkpoints")).unwrap();
    for f in ["metrics.csv", "stats.csv"] {
        fs::copy(a.join(f), b.join(f)).unwrap();
    }
    let mid = a.join("checkpoints/ckpt_000002.bin");
    let resumed = Checkpoint::load(&mid).unwrap();
    assert_eq!(resumed.updates, 2);
    let cfg_b = write_config(
        dir.path(),
        "b.cfg",
        "ppo.total_episodes = 40\noutput_dir = b\n",
    );
    let out = dppo(&["train", &cfg_b, "--resume", mid.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert_eq!(fs::read(b.join("metrics.csv")).unwrap(), metrics.as_bytes());
    assert_eq!(
        fs::read(b.join("stats.csv")).unwrap(),
        fs::read(a.join("stats.csv")).unwrap()
    );
    assert_eq!(
        fs::read(b.join("checkpoints/latest.bin")).unwrap(),
        fs::read(a.join("checkpoints/latest.bin")).unwrap()
    );
}

#[test]
fn eval_rejects_mismatched_architecture() {
    let dir = tempfile::tempdir().unwrap();
    let small = write_config(
        dir.path(),
        "small.cfg",
        "ppo.total_episodes = 0\noutput_dir = s\n",
    );
    assert_eq!(dppo(&["train", &small]).status.code(), Some(0));
    let full = dir.path().join("full.cfg");
    fs::write(&full, "output_dir = f\n").unwrap();
    let ckpt = dir.path().join("s/checkpoints/latest.bin");
    let out = dppo(&["eval", ckpt.to_str().unwrap(), full.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("does not match"));
}

#[test]
fn depth_tool_examples() {
    let dir = tempfile::tempdir().unwrap();
    let uniform = dir.path().join("uniform.pgm");
    let mut bytes = b"P5\n4 2\n255\n".to_vec();
    bytes.extend([255u8; 8]);
    fs::write(&uniform, &bytes).unwrap();
    let mask = dir.path().join("mask.pgm");
    let out = dppo(&[
        "depth-tool",
        uniform.to_str().unwrap(),
        "--tau",
        "0.7",
        "--mask-out",
        mask.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        text(&out.stdout),
        format!("{},1.5,0.5,0,100\n", uniform.display())
    );
    assert_eq!(fs::read(&mask).unwrap(), bytes);

    let dark = dir.path().join("dark.pgm");
    let mut bytes = b"P5 2 2 65535\n".to_vec();
    bytes.extend([0u8; 8]);
    fs::write(&dark, &bytes).unwrap();
    let out = dppo(&["depth-tool", dark.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let d = 2f64.sqrt() / 2.0;
    assert_eq!(text(&out.stdout), format!("{},,,{d},100\n", dark.display()));

    let empty = dir.path().join("empty.pgm");
    fs::write(&empty, b"").unwrap();
    assert_eq!(
        dppo(&["depth-tool", empty.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(
        dppo(&["depth-tool", uniform.to_str().unwrap(), "--tau", "0"])
            .status
            .code(),
        Some(2)
    );
}

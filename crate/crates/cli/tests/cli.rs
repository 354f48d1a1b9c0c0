use std::path::Path;
use std::process::{Command, Output};

fn sim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meqc-sim"))
        .args(args)
        .current_dir(cwd)
        .env("MEQC_SIM_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn run_writes_records_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = sim(
        &[
            "run",
            "--policy",
            "cpu-continuous",
            "--slots",
            "4",
            "--seed",
            "1",
            "--seed",
            "2",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let o = dir.path().join("o");
    for seed in [1, 2] {
        let text = read(&o.join(format!("records_cpu-continuous_seed{seed}.csv")));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "slot,device_id,policy,mode,phi,time_s,energy_j,wset,backlog,feasible,seed"
        );
        assert_eq!(lines.len(), 1 + 4 * 15);
        assert!(!text.contains('\r'));
    }
    let summary = read(&o.join("summary_cpu-continuous.csv"));
    assert_eq!(summary.lines().count(), 3);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = sim(
            &[
                "run", "--policy", "random", "--slots", "6", "--seed", "9", "--format", "jsonl",
                "--out", out,
            ],
            dir.path(),
        );
        assert!(o.status.success());
    }
    for f in ["records_random_seed9.jsonl", "summary_random.jsonl"] {
        assert_eq!(
            std::fs::read(dir.path().join("a").join(f)).unwrap(),
            std::fs::read(dir.path().join("b").join(f)).unwrap()
        );
    }
}

#[test]
fn config_file_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "world": {"num_devices": 3},
        "horizon_slots": 5,
        "seeds": [1, 2],
        "sweep": {"path": "world.leased_qubits", "values": [1000, 5000], "policies": ["local-only", "lyapunov-exact"]}
    }"#;
    std::fs::write(dir.path().join("c.json"), cfg).unwrap();
    let out = sim(&["sweep", "--config", "c.json", "--out", "o"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = read(&dir.path().join("o/sweep_world_leased_qubits.csv"));
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("parameter,value,policy,seed,time_avg_wset"));
    assert_eq!(lines.len(), 1 + 2 * 2 * 2);
    assert!(lines[1].starts_with("world.leased_qubits,1000.0,local-only,1,"));
}

#[test]
fn dqn_checkpoint_has_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"world": {"num_devices": 2}, "epochs": 1,
        "policy": {"dqn": {"hidden": [8], "batch_size": 4, "episode_slots": 5}}}"#;
    std::fs::write(dir.path().join("c.json"), cfg).unwrap();
    let out = sim(
        &[
            "run",
            "--config",
            "c.json",
            "--policy",
            "dqn",
            "--slots",
            "3",
            "--seed",
            "5",
            "--save-dqn",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let bytes = std::fs::read(dir.path().join("o/dqn_seed5.bin")).unwrap();
    assert_eq!(&bytes[..8], b"MEQCDQN1");
    assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 2);
    // (10 inputs -> 8) + (8 -> 3), weights and biases.
    assert_eq!(bytes.len(), 16 + 8 * (10 * 8 + 8 + 8 * 3 + 3));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"dpp": {"v_param": -1}}"#).unwrap();
    std::fs::write(dir.path().join("typo.json"), r#"{"dpp": {"vparam": 3}}"#).unwrap();
    let cases: [(&[&str], &str); 5] = [
        (&["run", "--config", "bad.json"], "dpp.v_param"),
        (&["run", "--config", "typo.json"], "vparam"),
        (&["run", "--config", "missing.json"], "missing.json"),
        (&["run", "--policy", "greedy"], "greedy"),
        (
            &[
                "sweep", "--param", "dpp.nope", "--values", "1", "--slots", "2",
            ],
            "valid numeric paths",
        ),
    ];
    for (args, needle) in cases {
        let out = sim(args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{args:?}: {err}");
    }
}

#[test]
fn unwritable_output_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("file"), "").unwrap();
    let out = sim(
        &[
            "run",
            "--policy",
            "local-only",
            "--slots",
            "2",
            "--seed",
            "1",
            "--out",
            "file/sub",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn idlc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idlc")).current_dir(dir).args(args).output().expect("spawn idlc")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const MESSAGE: &[u8] = b"locally!";

fn message_bits() -> Vec<u8> {
    MESSAGE.iter().flat_map(|b| (0..8).rev().map(move |i| (b >> i) & 1)).collect()
}

/// Temp dir holding `msg.bin`, its encoding `w.bin` and the key `k.key`.
fn encoded() -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("msg.bin"), MESSAGE).unwrap();
    let out = idlc(dir.path(), &["encode", "msg.bin", "--key", "k.key", "--seed", "7", "--out", "w.bin"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    dir
}

fn decoded_values(out: &Output) -> Vec<u8> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn empty_message_is_rejected() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("empty"), b"").unwrap();
    let out = idlc(dir.path(), &["encode", "empty", "--key", "k.key", "--out", "w.bin"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("empty"));
    assert!(!dir.path().join("w.bin").exists());
}

#[test]
fn encode_then_decode_recovers_every_bit() {
    let dir = encoded();
    let out = idlc(dir.path(), &["decode", "w.bin", "--key", "k.key", "--out", "d.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(decoded_values(&out), message_bits());
    let csv = fs::read_to_string(dir.path().join("d.csv")).unwrap();
    assert!(csv.starts_with("# build="));
    assert_eq!(csv.lines().count(), 2 + message_bits().len());
}

#[test]
fn key_file_is_owner_only() {
    let dir = encoded();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let mode = fs::metadata(dir.path().join("k.key")).unwrap().permissions().mode();
        assert_eq!(mode & 0o777, 0o600);
    }
    // an existing key is reused, never overwritten
    let before = fs::read(dir.path().join("k.key")).unwrap();
    let out = idlc(dir.path(), &["encode", "msg.bin", "--key", "k.key", "--seed", "8", "--out", "w2.bin"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(fs::read(dir.path().join("k.key")).unwrap(), before);
}

#[test]
fn rate_zero_corruption_is_the_identity() {
    let dir = encoded();
    for channel in ["random-insdel", "random-flips", "zero-run-killer", "subprocess:cat"] {
        let out = idlc(dir.path(), &["corrupt", "w.bin", "--channel", channel, "--rate", "0", "--out", "c.bin"]);
        assert_eq!(code(&out), 0, "{channel}: {}", stderr(&out));
        assert_eq!(fs::read(dir.path().join("c.bin")).unwrap(), fs::read(dir.path().join("w.bin")).unwrap());
    }
}

#[test]
fn corruption_replays_from_its_seed_and_still_decodes() {
    let dir = encoded();
    let args = |out: &'static str| ["corrupt", "w.bin", "--channel", "random-insdel", "--rate", "0.001", "--seed", "5", "--out", out];
    assert_eq!(code(&idlc(dir.path(), &args("a.bin"))), 0);
    assert_eq!(code(&idlc(dir.path(), &args("b.bin"))), 0);
    let a = fs::read(dir.path().join("a.bin")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.bin")).unwrap());
    let sidecar: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("a.bin.json")).unwrap()).unwrap();
    assert!(sidecar["corruption"]["edit_fraction"].as_f64().unwrap() <= 0.0015);
    let out = idlc(dir.path(), &["decode", "a.bin", "--key", "k.key", "--index", "0", "--index", "9", "--index", "63"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let bits = message_bits();
    assert_eq!(decoded_values(&out), vec![bits[0], bits[9], bits[63]]);
}

#[test]
fn out_of_range_index_and_wrong_key_are_usage_errors() {
    let dir = encoded();
    let out = idlc(dir.path(), &["decode", "w.bin", "--key", "k.key", "--index", "64"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("out of range"));

    fs::write(dir.path().join("m2"), b"x").unwrap();
    assert_eq!(code(&idlc(dir.path(), &["encode", "m2", "--key", "other.key", "--seed", "1", "--out", "o.bin"])), 0);
    let out = idlc(dir.path(), &["decode", "w.bin", "--key", "other.key", "--index", "0"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn malformed_config_names_every_bad_field() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.json"), r#"{"rate": 3.0, "trials": 4, "rounds": 0, "channel": "nope"}"#).unwrap();
    let out = idlc(dir.path(), &["game", "--config", "bad.json"]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    for field in ["rate:", "trials:", "rounds:", "channel:"] {
        assert!(err.contains(field), "{field} missing from {err}");
    }
    fs::write(dir.path().join("typo.json"), r#"{"trails": 100}"#).unwrap();
    let out = idlc(dir.path(), &["game", "--config", "typo.json"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("trails"));
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_idlc"))
        .current_dir(dir.path())
        .env("IDLC_THREADS", "0")
        .args(["game", "--codec", "priv-hamming"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("IDLC_THREADS"));
}

#[test]
fn one_round_game_reports_regenerate_identically() {
    let dir = TempDir::new().unwrap();
    let args = |out: &'static str| {
        ["game", "--codec", "priv-hamming", "--channel", "random-flips", "--rounds", "1", "--games", "2", "--seed", "4", "--out", out]
    };
    for out in ["r1", "r2"] {
        let o = idlc(dir.path(), &args(out));
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let read = |name: &str| fs::read_to_string(dir.path().join(name)).unwrap();
    let strip_out = |s: String| s.replace("\"r1\"", "\"r2\"");
    assert_eq!(strip_out(read("r1.json")), read("r2.json"));
    assert_eq!(strip_out(read("r1.csv")), read("r2.csv"));

    let report: serde_json::Value = serde_json::from_str(&read("r1.json")).unwrap();
    assert_eq!(report["summary"]["games"], 2);
    assert_eq!(report["summary"]["wins"], 0);
    assert_eq!(report["reports"][0]["rounds"].as_array().unwrap().len(), 1);
    // header comment, column names, one row per game
    assert_eq!(read("r1.csv").lines().count(), 4);

    // the config stored in the report drives an identical rerun
    fs::write(dir.path().join("cfg.json"), report["config"].to_string()).unwrap();
    let o = idlc(dir.path(), &["game", "--config", "cfg.json", "--out", "r3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let again: serde_json::Value = serde_json::from_str(&read("r3.json")).unwrap();
    assert_eq!(again["reports"], report["reports"]);
}

#[test]
fn key_aware_attack_wins_and_budgeted_attack_exits_four() {
    let dir = TempDir::new().unwrap();
    let o = idlc(dir.path(), &["game", "--codec", "priv-hamming", "--channel", "key-aware-block", "--games", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("wins=2"));

    let o = idlc(dir.path(), &["game", "--codec", "rb-hamming", "--channel", "safe-function-recompute", "--budget-rounds", "64"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn calibration_failure_rate_grows_with_the_channel_rate() {
    let dir = TempDir::new().unwrap();
    let o = idlc(
        dir.path(),
        &["calibrate", "--rates", "0,0.001,0.002,0.004", "--trials", "40", "--seed", "2", "--out", "cal"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("cal.json")).unwrap()).unwrap();
    let theta2: Vec<f64> =
        report["points"].as_array().unwrap().iter().map(|p| p["theta2_hat"].as_f64().unwrap()).collect();
    assert_eq!(theta2.len(), 4);
    assert_eq!(theta2[0], 0.0);
    for w in theta2.windows(2) {
        assert!(w[1] + 0.1 >= w[0], "{theta2:?}");
    }
    assert!(theta2[3] > theta2[0]);
    assert!(fs::read_to_string(dir.path().join("cal.csv")).unwrap().starts_with("# build="));
}

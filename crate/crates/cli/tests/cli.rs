use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qds(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qds"))
        .args(args)
        .current_dir(dir)
        .env_remove("QDS_SEED")
        .output()
        .expect("spawn qds")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Keys for `rounds` signatures of a 128-bit hash in `dir/keys`: each of the three
/// pools spends 3n bits per round.
fn keygen(dir: &Path, rounds: u64) {
    let bits = (3 * 3 * 128 * rounds).to_string();
    let out = qds(dir, &["--seed", "11", "keygen", "--bits", &bits, "--out", "keys"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn help_lists_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = qds(dir.path(), &["--help"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for word in ["keygen", "sign", "verify", "simulate", "analyze", "attack", "QDS_SEED", "64  usage"] {
        assert!(text.contains(word), "missing {word}");
    }
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&qds(p, &["frobnicate"])), 64);
    assert_eq!(code(&qds(p, &["keygen", "--parties", "4", "--bits", "384", "--out", "k"])), 64);
    assert_eq!(code(&qds(p, &["keygen", "--bits", "100", "--out", "k"])), 64);
    assert_eq!(code(&qds(p, &["simulate", "--protocol", "nope", "--out", "x.csv"])), 64);

    let bad_seed = Command::new(env!("CARGO_BIN_EXE_qds"))
        .args(["demo", "conference"])
        .current_dir(p)
        .env("QDS_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(code(&bad_seed), 64);
}

#[test]
fn missing_files_are_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    keygen(dir.path(), 1);
    let out = qds(dir.path(), &["sign", "--doc", "absent.bin", "--keys", "keys", "--out", "s.sig"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn sign_verify_and_tamper() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    keygen(p, 2);
    fs::write(p.join("doc.txt"), b"pay 10 to carol").unwrap();
    let out = qds(p, &["--seed", "5", "sign", "--doc", "doc.txt", "--keys", "keys", "--out", "doc.sig"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(p.join("doc.transcript").exists());

    for who in ["bob", "charlie"] {
        let out = qds(p, &["verify", "--doc", "doc.txt", "--sig", "doc.sig", "--keys", "keys", "--as", who]);
        assert_eq!(code(&out), 0, "{who}: {}", stdout(&out));
    }

    fs::write(p.join("doc.txt"), b"pay 99 to carol").unwrap();
    for who in ["bob", "charlie"] {
        let out = qds(p, &["verify", "--doc", "doc.txt", "--sig", "doc.sig", "--keys", "keys", "--as", who]);
        assert_eq!(code(&out), 1, "{who} accepted an altered document");
    }
}

#[test]
fn exhausted_and_reused_keys_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    keygen(p, 1);
    fs::write(p.join("a.txt"), b"first").unwrap();
    fs::write(p.join("b.txt"), b"second").unwrap();
    assert_eq!(code(&qds(p, &["sign", "--doc", "a.txt", "--keys", "keys", "--out", "a.sig"])), 0);
    // No keys left for a second round.
    assert_eq!(code(&qds(p, &["sign", "--doc", "b.txt", "--keys", "keys", "--out", "b.sig"])), 3);
    // Explicitly pointing back at the consumed keys is refused too.
    let reuse = qds(p, &["sign", "--doc", "b.txt", "--keys", "keys", "--out", "b.sig", "--key-offset", "0"]);
    assert_eq!(code(&reuse), 3);
}

#[test]
fn demos_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("m.txt"), b"hello").unwrap();
    let enc = stdout(&qds(p, &["--seed", "1", "demo", "encrypt", "--in", "m.txt"]));
    assert!(enc.contains("Bob recovers the file: yes"), "{enc}");
    let share = stdout(&qds(p, &["--seed", "1", "demo", "secret-share", "--in", "m.txt"]));
    assert!(share.contains("recovered only jointly: yes"), "{share}");
    let conf = stdout(&qds(p, &["--seed", "1", "demo", "conference", "--bits", "64"]));
    assert!(conf.contains("all three hold the same 64-bit key: yes"), "{conf}");
}

#[test]
fn analyze_prints_link_table_and_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let out = qds(dir.path(), &["analyze", "--out", "report.txt"]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    for needle in ["920042", "263482", "4.83%", "9.57%", "p_e = 7.06%", "improvement: 1.429e8"] {
        assert!(text.contains(needle), "missing {needle} in\n{text}");
    }
}

#[test]
fn simulate_writes_csv_and_plot_script() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("sim.toml"), "[grid]\nl_max = 100\nl_step = 25\n").unwrap();
    let out = qds(p, &["simulate", "--protocol", "mdi", "--config", "sim.toml", "--out", "out/mdi.csv"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(p.join("out/mdi.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "protocol_id,L_km,rate_per_pulse,rate_per_second,tps,opt_params");
    assert_eq!(lines.len(), 1 + 5);
    assert!(lines[1].starts_with("mdi,0,4.8889871069226334e-2,"));
    assert!(fs::read_to_string(p.join("out/mdi.gp")).unwrap().contains("mdi.csv"));
}

#[test]
fn attacks_stay_within_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let tamper = stdout(&qds(p, &["--seed", "3", "attack", "--mode", "mac-tamper", "--trials", "2000"]));
    assert!(tamper.contains("required >= 1 - eps_aut"), "{tamper}");
    let rep = stdout(&qds(p, &["--seed", "3", "attack", "--mode", "repudiation", "--trials", "300"]));
    assert!(rep.contains("divergent verdicts 0"), "{rep}");
    let forge = qds(p, &["--seed", "3", "attack", "--mode", "forgery", "--trials", "20000"]);
    assert_eq!(code(&forge), 0, "{}", stdout(&forge));
}

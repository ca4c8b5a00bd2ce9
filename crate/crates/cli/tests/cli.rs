use std::fs;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fbmc-pevd"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

const SMALL: &[&str] = &["--subcarriers", "8", "--symbols", "400"];

#[test]
fn run_is_byte_identical_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let mut args = vec!["run", "--seed", "7", "--snr-db", "10", "--out", p.to_str().unwrap()];
        args.extend_from_slice(SMALL);
        let o = run(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("# seed = 7"));
    assert_eq!(data_rows(&text).len(), 2);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("link.toml");
    fs::write(&cfg, "subcarriers = 8\nsymbols_per_run = 400\nseed = 3\nprecoder = \"none\"\n[fiber]\nlength_km = 40.0\n").unwrap();
    let out = stdout(&run(&["run", "--config", cfg.to_str().unwrap(), "--length-km", "0"]));
    assert!(out.contains("# length_km = 0.0"));
    assert!(out.contains("# seed = 3"));
    let row = data_rows(&out)[1];
    assert!(row.contains(",none,"), "{row}");
}

#[test]
fn validation_failure_exits_nonzero_with_field() {
    let o = run(&["run", "--subcarriers", "12"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("subcarriers"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[truncation]\nalpha = 2.0\n").unwrap();
    let o = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("truncation"));

    let o = run(&["sweep", "--axis", "snr"]);
    assert!(!o.status.success());
    let o = run(&["sweep", "--axis", "bogus", "--values", "1"]);
    assert!(!o.status.success());
}

#[test]
fn sweep_emits_one_row_per_value_in_order() {
    let mut args = vec!["sweep", "--axis", "snr", "--values", "4,8,12", "--precoder", "none", "--length-km", "0"];
    args.extend_from_slice(SMALL);
    let out = stdout(&run(&args));
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 4);
    let header: Vec<&str> = rows[0].split(',').collect();
    let col = header.iter().position(|h| *h == "snr_db").unwrap();
    let snrs: Vec<&str> = rows[1..].iter().map(|r| r.split(',').nth(col).unwrap()).collect();
    assert_eq!(snrs, ["4.0", "8.0", "12.0"]);
    assert!(out.contains("# sweep over snr"));
}

#[test]
fn designed_precoders_can_be_reused() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.txt");
    let o = run(&["design", "--subcarriers", "8", "--iterations", "10", "--out", file.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&file).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("precoder ")).count(), 8);

    let mut args = vec!["run", "--precoders", file.to_str().unwrap(), "--snr-db", "inf"];
    args.extend_from_slice(SMALL);
    let reused = stdout(&run(&args));
    let mut args = vec!["run", "--iterations", "10", "--snr-db", "inf"];
    args.extend_from_slice(SMALL);
    let fresh = stdout(&run(&args));
    let evm = |s: &str| {
        let rows = data_rows(s);
        let col = rows[0].split(',').position(|h| h == "evm_percent").unwrap();
        rows[1].split(',').nth(col).unwrap().to_string()
    };
    assert_eq!(evm(&reused), evm(&fresh));

    let o = run(&["run", "--precoders", file.to_str().unwrap(), "--subcarriers", "16"]);
    assert!(!o.status.success());
}

#[test]
fn bench_has_one_row_per_cell() {
    let out = stdout(&run(&["bench", "--axis", "iterations", "--values", "2,4", "--subcarriers", "8"]));
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("axis,value,proposed_s,conventional_s,ratio"));
}

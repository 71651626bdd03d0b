use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aris-opt"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn bad_inputs_are_usage_errors() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    let missing = run(&["radar-comm", "--config", "no/such/file.toml", "--out-dir", o]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("--help"));
    assert_eq!(run(&["radar-comm", "--set", "antennas=3", "--out-dir", o]).status.code(), Some(2));
    assert_eq!(run(&["radar-comm", "--set", "elements", "--out-dir", o]).status.code(), Some(2));
    assert_eq!(run(&["radar-comm", "--trials", "0", "--out-dir", o]).status.code(), Some(2));
    let fig12 = configs().join("fig12.toml");
    assert_eq!(run(&["d2d", "--config", fig12.to_str().unwrap(), "--out-dir", o]).status.code(), Some(2));

    let bad = out.path().join("bad.toml");
    fs::write(&bad, "experiment = \"pls-sigma-de\"\ncolour = \"red\"\n").unwrap();
    assert_eq!(run(&["pls", "--config", bad.to_str().unwrap(), "--out-dir", o]).status.code(), Some(2));
    fs::write(&bad, "experiment = \"pls-sigma-de\"\n[params]\nantennas = 3\n").unwrap();
    assert_eq!(run(&["pls", "--config", bad.to_str().unwrap(), "--out-dir", o]).status.code(), Some(2));
    assert!(fs::read_dir(out.path()).unwrap().all(|e| e.unwrap().path() == bad));
}

#[test]
fn shipped_config_runs_and_writes_its_table() {
    let out = tempfile::tempdir().unwrap();
    let fig3 = configs().join("fig3.toml");
    let o = run(&["radar-comm", "--config", fig3.to_str().unwrap(), "--trials", "10", "--out-dir", out.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("# fig3\n"));
    assert!(text.contains("trials = 10"));
    let csv = fs::read_to_string(out.path().join("fig3.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5 * 2);
    assert!(csv.starts_with("experiment,sweep_param,sweep_value,mode,"));
    assert!(out.path().join("fig3_residual_norm.svg").exists());
    assert!(out.path().join("fig3_modulus.svg").exists());
}

#[test]
fn flag_beats_file_beats_builtin() {
    let out = tempfile::tempdir().unwrap();
    let cfg = out.path().join("layered.toml");
    fs::write(
        &cfg,
        "experiment = \"radar-comm-sigma-d\"\nname = \"layered\"\nsweep = [0.0]\ntrials = 3\nbase_seed = 5\n\n[params]\nelements = 8\nrx_antennas = 2\n",
    )
    .unwrap();
    let o = run(&[
        "radar-comm",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "2",
        "--set",
        "rx_antennas=3",
        "--mode",
        "aris",
        "--no-plots",
        "--out-dir",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let resolved = &text[..text.find("wrote").unwrap()];
    for expected in ["trials = 2", "base_seed = 5", "elements = 8", "rx_antennas = 3", "tx_antennas = 6", "modes = [\"aris\"]", "sweep = [0.0]"] {
        assert!(resolved.contains(expected), "missing `{expected}` in\n{resolved}");
    }
    let csv = fs::read_to_string(out.path().join("layered.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(!out.path().join("layered_modulus.svg").exists());
}

#[test]
fn repeated_runs_write_identical_trees() {
    let args = |dir: &str| {
        vec![
            "all".to_string(),
            "--seed".into(),
            "7".into(),
            "--trials".into(),
            "1".into(),
            "--set".into(),
            "elements=4".into(),
            "--set".into(),
            "links=2".into(),
            "--set".into(),
            "rx_antennas=2".into(),
            "--set".into(),
            "tx_antennas=2".into(),
            "--set".into(),
            "randomization_trials=20".into(),
            "--out-dir".into(),
            dir.to_string(),
        ]
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let o = bin().args(args(dir.path().to_str().unwrap())).output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert_eq!(ta.len(), 9 * 3);
    assert!(ta == tb, "output trees differ");
}

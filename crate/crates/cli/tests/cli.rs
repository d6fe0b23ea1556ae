use std::process::Command;

fn sim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ncfet-sim"))
}

#[test]
fn s_curve_run_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = sim().args(["s-curve", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("s_curve.csv").exists());
    assert!(dir.path().join("manifest.toml").exists());
    assert!(String::from_utf8_lossy(&out.stdout).contains("s_curve.csv"));
}

#[test]
fn print_config_shows_overrides() {
    let out = sim()
        .args(["metrics", "--print-config", "--set", "ferro.a_fe_nm2=500"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("a_fe_nm2 = 500.0  # source=set"), "{text}");
}

#[test]
fn bad_input_exits_with_two() {
    let unknown = sim()
        .args(["metrics", "--set", "ferro.nonsense=1", "--print-config"])
        .output()
        .unwrap();
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("nonsense"));

    let missing = sim()
        .args(["idvg", "--config", "/nonexistent/cfg.toml"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let threads = sim()
        .args(["s-curve", "--print-config"])
        .env("NCFET_SIM_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

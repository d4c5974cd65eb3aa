use std::path::Path;
use std::process::{Command, Output};

fn calgame(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_calgame"))
        .args(args)
        .current_dir(dir)
        .env_remove("CALGAME_OUT_DIR")
        .output()
        .unwrap()
}

fn summary(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn run_prints_a_reproducible_summary() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["run", "-T", "500", "--adversary", "iid:0.5", "--forecaster", "const:1/2", "--seed", "9"];
    let a = summary(&calgame(&args, dir.path()));
    let b = summary(&calgame(&args, dir.path()));
    assert_eq!(a, b);
    assert_eq!(a["t_act"], 500);
    assert!(a["calerr"].as_f64().unwrap() <= a["maxerr"].as_f64().unwrap());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("game.cfg");
    std::fs::write(
        &cfg,
        "# defaults for a quick game\nhorizon = 300\nadversary = iid:0.5\nforecaster = const:1/2\nseed = 1\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = summary(&calgame(&["run", "--config", cfg], dir.path()));
    assert_eq!(from_file["t_act"], 300);
    let overridden = summary(&calgame(&["run", "--config", cfg, "-T", "200"], dir.path()));
    assert_eq!(overridden["t_act"], 200);
}

#[test]
fn bad_specs_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["run", "--adversary", "bogus"][..],
        &["run", "--forecaster", "const:3/2"],
        &["run", "--playerA", "tensor:3,2"],
    ] {
        let out = calgame(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn solver_budget_overrun_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = calgame(
        &["run", "-T", "262144", "--adversary", "sidestep", "--forecaster", "const:1/2", "--playerA", "minimax"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn opt_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("opt.csv");
    let out = calgame(
        &["opt", "--k-max", "3", "--r-max", "2", "--out", path.to_str().unwrap()],
        dir.path(),
    );
    assert!(out.status.success());
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().next(), Some("k,r,opt,diagonal"));
    assert!(text.contains("3,2,2,1"));
}

#[test]
fn trials_print_one_row_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let out = calgame(
        &["trials", "-T", "200", "--adversary", "iid:0.5", "--forecaster", "coarse", "--trials", "5"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("seed,t_act,calerr,maxerr,preserved_signs,epoch_labels\n"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn scaling_writes_into_the_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_calgame"))
        .args([
            "scaling", "--adversary", "iid:0.5", "--forecaster", "const:1/2", "--horizons", "256,1024,4096",
            "--trials", "20", "--resamples", "50", "--format", "json",
        ])
        .env("CALGAME_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("scaling.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let e = v[0]["result"]["fitted_exponent"].as_f64().unwrap();
    assert!((0.35..0.65).contains(&e), "iid vs const should scale like sqrt(T), got {e}");
}

#[test]
fn classify_reads_a_dumped_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let out = calgame(
        &[
            "run", "-T", "4096", "--adversary", "sidestep", "--forecaster", "hedging", "--theta", "2",
            "--transcript", csv.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = calgame(
        &["classify", "--transcript", csv.to_str().unwrap(), "-T", "4096", "--theta", "2"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out.stdout.is_empty());
}

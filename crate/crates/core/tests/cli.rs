use std::process::Command;

use dirichlet_mc::harness::cli::{run, EXIT_INVALID, EXIT_OK, EXIT_THRESHOLD};

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("dirichlet-mc").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn density_example() {
    let (code, out, _) = call(&[
        "density",
        "--scenario",
        "gaussian",
        "--estimator",
        "direct",
        "--points",
        "0",
        "--samples",
        "100000",
        "--seed",
        "1",
        "--workers",
        "2",
    ]);
    assert_eq!(code, EXIT_OK);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("x,estimate,std_error,reference"));
    let row: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(row[0], 0.0);
    assert!(((row[1] - 0.398942) / row[2]).abs() <= 4.0);
    assert!(lines.next().unwrap().starts_with("density gaussian direct"));
}

#[test]
fn negative_points_parse() {
    let (code, out, _) = call(&[
        "density",
        "--scenario",
        "gaussian",
        "--points",
        "-1,1",
        "--samples",
        "2000",
    ]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.lines().nth(1).unwrap().starts_with("-1,"));
}

#[test]
fn unknown_names_exit_two_with_valid_names() {
    let (code, _, err) = call(&["density", "--scenario", "nosuch"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(
        err.contains("gaussian") && err.contains("lognormal"),
        "{err}"
    );
    let (code, _, err) = call(&["density", "--scenario", "gaussian", "--estimator", "magic"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(
        err.contains("regularized") && err.contains("conditional"),
        "{err}"
    );
    let (code, _, err) = call(&[
        "sweep-bias",
        "--scenario",
        "gaussian",
        "--estimator",
        "magic",
    ]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("plain_gamma"), "{err}");
}

#[test]
fn validation_errors_exit_two() {
    for args in [
        &[
            "sweep-bias",
            "--scenario",
            "lognormal",
            "--epsilons",
            "0.1,0.2",
        ][..],
        &["sweep-bias", "--scenario", "lognormal", "--samples", "500"],
        &["sweep-bias", "--scenario", "euler_zero_noise"],
        &["sweep-bias", "--scenario", "gbm_euler"],
        &[
            "density",
            "--scenario",
            "gaussian",
            "--samples",
            "quadrature",
        ],
        &["density", "--bogus-flag"],
        &["frobnicate"],
    ] {
        assert_eq!(call(args).0, EXIT_INVALID, "{args:?}");
    }
}

#[test]
fn strict_bias_sweeps() {
    let (code, out, _) = call(&[
        "sweep-bias",
        "--scenario",
        "lognormal",
        "--estimator",
        "shifted",
        "--strict",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("epsilon,n,x,estimate,reference,abs_error,std_error\n"));
    assert_eq!(out.lines().count(), 6);
    let (code, _, _) = call(&[
        "sweep-bias",
        "--scenario",
        "lognormal",
        "--estimator",
        "plain_gamma",
        "--strict",
    ]);
    assert_eq!(code, EXIT_OK);
    let (code, _, _) = call(&[
        "sweep-bias",
        "--scenario",
        "lognormal",
        "--estimator",
        "plain_gamma",
        "--epsilons",
        "0.02,0.01,0.005,0.0025",
        "--strict",
    ]);
    assert_eq!(code, EXIT_OK);
}

#[test]
fn strict_failure_exits_three() {
    // plain identity kernel at ε = 1 is far too smooth
    let (code, _, err) = call(&[
        "density",
        "--scenario",
        "gaussian",
        "--estimator",
        "plain_identity",
        "--epsilon",
        "1",
        "--points",
        "0",
        "--samples",
        "100000",
        "--strict",
    ]);
    assert_eq!(code, EXIT_THRESHOLD, "{err}");
}

#[test]
fn variance_sweep_and_compare() {
    let (code, out, _) = call(&["sweep-variance", "--scenario", "lognormal", "--strict"]);
    assert_eq!(code, EXIT_OK, "{out}");
    let (code, out, _) = call(&["compare", "--scenario", "lognormal"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("estimator,n,epsilon,mse,bias,variance\n"));
    assert!(out.contains("\ndirect,1000,,"));
}

#[test]
fn identities_and_listing() {
    let (code, out, _) = call(&[
        "check-identities",
        "--scenario",
        "triangular",
        "--samples",
        "20000",
        "--strict",
    ]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("weight_centering[eps=0.1]"));
    let (code, out, _) = call(&["list-scenarios"]);
    assert_eq!(code, EXIT_OK);
    for name in dirichlet_mc::harness::SCENARIO_NAMES {
        assert!(out.contains(name));
    }
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let csv = dir.path().join("out.csv");
    std::fs::write(
        &cfg,
        format!(
            "scenario = \"lognormal\"\nestimator = \"direct\"\nsamples = 5000\npoints = [1.0]\nseed = 9\nout = {:?}\n",
            csv.to_str().unwrap()
        ),
    )
    .unwrap();
    let (code, out, err) = call(&[
        "density",
        "--scenario",
        "gaussian",
        "--seed",
        "1",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.starts_with("density lognormal direct N=5000"), "{out}");
    let written = std::fs::read_to_string(&csv).unwrap();
    assert!(written.starts_with("x,estimate,std_error,reference\n1,"));

    std::fs::write(&cfg, "scenarioo = \"gaussian\"\n").unwrap();
    let (code, _, err) = call(&["density", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("scenarioo"), "{err}");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_dirichlet-mc");
    let st = Command::new(bin)
        .args(["density", "--scenario", "nosuch"])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));
    let st = Command::new(bin)
        .args([
            "sweep-bias",
            "--scenario",
            "lognormal",
            "--estimator",
            "shifted",
            "--strict",
        ])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0));
    let st = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(st.status.code(), Some(0));
}

#[test]
fn seed_environment_variable_overrides_flag() {
    let bin = env!("CARGO_BIN_EXE_dirichlet-mc");
    let run_with = |env: Option<&str>, seed: &str| {
        let mut c = Command::new(bin);
        c.args([
            "density",
            "--scenario",
            "gaussian",
            "--samples",
            "3000",
            "--seed",
            seed,
        ]);
        c.env_remove("DIRICHLET_MC_SEED");
        if let Some(v) = env {
            c.env("DIRICHLET_MC_SEED", v);
        }
        String::from_utf8(c.output().unwrap().stdout).unwrap()
    };
    assert_eq!(run_with(Some("5"), "1"), run_with(None, "5"));
    assert_ne!(run_with(None, "1"), run_with(None, "5"));
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_dprh");

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn twin_fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/twins_synthetic.csv")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().unwrap()
}

fn simulate_args() -> Vec<&'static str> {
    vec![
        "simulate", "--theta", "1.5", "--theta1p", "1.7", "--theta2p", "1.8", "--alpha", "1.3", "--n", "100", "--p",
        "0.1", "--seed", "7", "-o", "s.csv",
    ]
}

#[test]
fn help_matches_golden_files() {
    // regenerate with DPRH_UPDATE_GOLDEN=1
    let update = std::env::var_os("DPRH_UPDATE_GOLDEN").is_some();
    let cases: [(&str, &[&str]); 7] = [
        ("help.txt", &["--help"]),
        ("help-eval.txt", &["eval", "--help"]),
        ("help-simulate.txt", &["simulate", "--help"]),
        ("help-fit-mle.txt", &["fit-mle", "--help"]),
        ("help-fit-bayes.txt", &["fit-bayes", "--help"]),
        ("help-study.txt", &["study", "--help"]),
        ("help-analyze-twins.txt", &["analyze-twins", "--help"]),
    ];
    for (file, args) in cases {
        let out = run(Path::new("."), args);
        assert!(out.status.success());
        let path = golden_dir().join(file);
        if update {
            std::fs::write(&path, &out.stdout).unwrap();
        }
        let want = std::fs::read_to_string(&path).unwrap();
        assert_eq!(String::from_utf8_lossy(&out.stdout), want, "{file}");
    }
}

#[test]
fn help_lists_every_flag() {
    let fit = std::fs::read_to_string(golden_dir().join("help-fit-mle.txt")).unwrap();
    for flag in ["--data", "--baseline", "--tie-theta", "--tie-theta-prime", "--independent", "--known", "--init",
        "--starts", "--ci-alpha", "--lrt", "--seed", "--output", "--format", "--threads"]
    {
        assert!(fit.contains(flag), "{flag}");
    }
}

#[test]
fn simulate_writes_pairs_and_a_run_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &simulate_args());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t1,d1,t2,d2");
    assert_eq!(lines.len(), 101);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 4));
    let record: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(record["schema_version"], 1);
    assert_eq!(record["seed"], 7);
    assert_eq!(record["config"]["n"], 100);
    assert_eq!(record["result"]["params"]["baseline"]["family"], "inverse-weibull");
}

#[test]
fn fit_mle_recovers_the_simulation_truth() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &simulate_args()).status.success());
    let out = run(
        dir.path(),
        &["fit-mle", "--data", "s.csv", "--baseline", "inverse-weibull", "--tie-theta"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let fit = &v["result"]["fit"];
    assert_eq!(fit["converged"], true);
    assert_eq!(v["config"]["spec"]["tie_theta"], true);
    let truth = [1.5, 1.7, 1.8, 1.3];
    for i in 0..4 {
        let est = fit["estimates"][i].as_f64().unwrap();
        let se = fit["se"][i].as_f64().unwrap();
        assert!((est - truth[i]).abs() < 3.0 * se, "{}: {est} ± {se}", fit["names"][i]);
    }
}

#[test]
fn seeded_commands_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(run(d, &simulate_args()).status.success());
    std::fs::write(
        d.join("study.json"),
        r#"{"true_params": {"theta1": 1.5, "theta2": 1.5, "theta1_prime": 1.7, "theta2_prime": 1.8,
            "baseline": {"family": "inverse-weibull", "alpha": 1.3}},
            "n": 40, "r": 6, "estimator": "mle", "seed": 3}"#,
    )
    .unwrap();
    let twins = twin_fixture();
    let twins = twins.to_str().unwrap();
    // each command with the files it writes besides stdout
    let commands: Vec<(Vec<&str>, &[&str])> = vec![
        (simulate_args(), &["s.csv"]),
        (vec!["fit-mle", "--data", "s.csv", "--baseline", "inverse-weibull", "--tie-theta", "--lrt"], &[]),
        (
            vec!["fit-bayes", "--data", "s.csv", "--baseline", "inverse-weibull", "--tie-theta", "--steps", "2000",
                "--bootstrap", "3", "--chain-out", "chain.csv"],
            &["chain.csv"],
        ),
        (vec!["study", "--config", "study.json", "--n", "30", "--n", "40"], &[]),
        (vec!["analyze-twins", "--data", twins, "--category", "2", "--bayes", "--steps", "2000"], &[]),
        (vec!["eval", "--theta", "1", "--theta1p", "2", "--theta2p", "0.5", "--alpha", "1", "--at", "1,2"], &[]),
    ];
    for (cmd, files) in commands {
        let mut outputs = Vec::new();
        for threads in ["1", "2"] {
            let mut args = cmd.clone();
            args.extend(["--threads", threads]);
            let out = run(d, &args);
            assert!(out.status.success(), "{cmd:?}: {}", String::from_utf8_lossy(&out.stderr));
            let mut bytes = out.stdout;
            for f in files {
                bytes.extend(std::fs::read(d.join(f)).unwrap());
            }
            outputs.push(bytes);
        }
        assert!(outputs[0] == outputs[1], "{cmd:?} differs between runs");
    }
}

#[test]
fn study_prints_the_table_layout() {
    let dir = tempfile::tempdir().unwrap();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/study-mle.json");
    let out = run(
        dir.path(),
        &["study", "--config", config.to_str().unwrap(), "--r", "5", "--format", "text"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let labels: Vec<&str> = text.lines().skip(2).map(|l| l[..18].trim()).collect();
    assert_eq!(labels, ["True value", "Estimates", "Bias", "MSE", "Cov. Probability"]);
    assert!(text.lines().nth(1).unwrap().split_whitespace().eq(["theta", "theta1_prime", "theta2_prime", "alpha"]));
}

#[test]
fn exit_codes_follow_the_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let code = |args: &[&str]| run(d, args).status.code().unwrap();
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["fit-mle", "--bogus"]), 1);
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["fit-mle", "--data", "missing.csv", "--baseline", "inverse-weibull"]), 1);
    assert_eq!(code(&["fit-mle", "--data", "x.csv", "--baseline", "no-such-family"]), 1);
    // the default start puts every observation outside this baseline's support
    std::fs::write(d.join("neg.csv"), "t1,d1,t2,d2\n-1,1,-2,1\n-3,1,-1,1\n-2,1,-4,1\n-1,1,-5,1\n-6,1,-2,1\n").unwrap();
    let out = run(d, &["fit-mle", "--data", "neg.csv", "--baseline", "inverse-weibull"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

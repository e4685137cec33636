use std::path::Path;
use std::process::{Command, Output};

use nash_elim_cli::RunManifest;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nash-elim"));
    c.env_remove("NASH_ELIM_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn density_examples() {
    let o = run(&["density", "--n", "2", "--points", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "x,f_star\n0,0.25\n0.5,2\n1,0\n");

    let o = run(&["density", "--n", "3", "--points", "5"]);
    let second = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(second.starts_with("0,0.19245"), "{second}");

    assert_eq!(run(&["density", "--n", "1"]).status.code(), Some(2));
    assert_eq!(
        run(&["density", "--n", "3", "--points", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["density"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn csv_layout() {
    let o = run(&["density", "--n", "4", "--points", "11"]);
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,f_star"));
    let row: Vec<&str> = lines.nth(1).unwrap().split(',').collect();
    // 0.1 needs all 17 digits to round-trip
    assert_eq!(row[0], "0.10000000000000001");
    let digits = row[1].trim_start_matches("0.").trim_start_matches('0');
    assert_eq!(digits.len(), 17, "{}", row[1]);
}

#[test]
fn scaling_columns() {
    let o = run(&[
        "scaling",
        "--n-list",
        "2,5,10,20",
        "--xi-min",
        "-1",
        "--points",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("xi,n_2,n_5,n_10,n_20,limit"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows[0][0], -1.0);
    assert_eq!(rows[0][5], 0.25);
    assert_eq!(rows[2][0], 0.0);
    assert_eq!(rows[2][5], 1.0);
    // finite-N columns decrease toward the limit at the edge
    let edge = &rows[2][1..5];
    assert!(edge.windows(2).all(|w| w[0] > w[1]));
    assert!(edge[3] > 1.0);

    // points left of x = 0 are empty cells
    let o = run(&[
        "scaling", "--n-list", "2", "--xi-min", "-10", "--points", "2",
    ]);
    assert_eq!(
        stdout(&o).lines().nth(1),
        Some("-10,,0.0082644628099173556")
    );
    assert_eq!(run(&["scaling", "--n-list", "1,3"]).status.code(), Some(2));
}

#[test]
fn verify_pass_and_fail() {
    for n in ["2", "10"] {
        let o = run(&["verify", "--n", n]);
        assert_eq!(o.status.code(), Some(0), "N={n}");
        let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(report["passed"], true);
        assert!(report["max_indifference_violation"].as_f64().unwrap() <= 1e-5);
        assert!(report["max_out_of_support_gain"].as_f64().unwrap() < 0.0);
    }
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verify.json");
    let o = run(&[
        "verify",
        "--n",
        "3",
        "--perturb",
        "0.05",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&read(&out)).unwrap();
    assert_eq!(report["passed"], false);
    assert!((report["total_mass"].as_f64().unwrap() - 1.05).abs() < 1e-4);
    let manifest = RunManifest::load(&dir.path().join("verify.json.manifest.json")).unwrap();
    assert_eq!(manifest.exit_code, 1);
    assert_eq!(
        run(&["verify", "--n", "3", "--format", "xml"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn solve_exit_codes() {
    assert_eq!(
        run(&["solve", "--n", "3", "--bins", "8"]).status.code(),
        Some(2)
    );

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    let report = dir.path().join("r.json");
    let o = run(&[
        "solve",
        "--n",
        "3",
        "--bins",
        "64",
        "--tol",
        "1e-9",
        "--max-iter",
        "50",
        "--out",
        out.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    // partial output is kept
    let csv = read(&out);
    assert!(csv.starts_with("bin,x,weight,density,analytic_weight\n"));
    assert_eq!(csv.lines().count(), 65);
    let r: serde_json::Value = serde_json::from_str(&read(&report)).unwrap();
    assert_eq!(r["converged"], false);
    assert_eq!(r["iterations"], 50);

    let o = run(&[
        "solve",
        "--n",
        "2",
        "--bins",
        "128",
        "--tol",
        "2e-2",
        "--min-iter",
        "20000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["converged"], true);
    assert!(r["residual"].as_f64().unwrap() <= 2e-2);
    assert_eq!(r["min_iter"], 20000);
}

#[test]
fn simulate_is_deterministic_and_seeded() {
    let args = ["simulate", "--n", "3", "--rounds", "50000", "--seed", "9"];
    let a = stdout(&run(&args));
    assert_eq!(a, stdout(&run(&args)));
    let report: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(report["seed"], 9);
    assert_eq!(report["rounds"], 50000);
    assert!(report["deviate"].is_null());

    // environment default seed
    let from_env = bin()
        .args(["simulate", "--n", "3", "--rounds", "50000"])
        .env("NASH_ELIM_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(stdout(&from_env), a);
    let other = stdout(&run(&["simulate", "--n", "3", "--rounds", "50000"]));
    assert_ne!(other, a);

    let o = run(&[
        "simulate",
        "--n",
        "3",
        "--rounds",
        "200000",
        "--deviate",
        "0.9",
        "--threads",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let g = r["mean_gain"][0].as_f64().unwrap();
    let se = r["std_error"][0].as_f64().unwrap();
    assert!((g + 0.4).abs() <= 4.0 * se);
    assert_eq!(
        run(&["simulate", "--n", "3", "--deviate", "1.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["simulate", "--n", "3", "--rounds", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn manifests_replay_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 5] = [
        &["density", "--n", "5", "--points", "33"],
        &["scaling", "--points", "21"],
        &["verify", "--n", "4", "--grid", "64"],
        &[
            "solve",
            "--n",
            "3",
            "--bins",
            "64",
            "--max-iter",
            "20000",
            "--min-iter",
            "0",
            "--tol",
            "5e-2",
        ],
        &[
            "simulate",
            "--n",
            "4",
            "--rounds",
            "30000",
            "--seed",
            "5",
            "--deviate",
            "0.7",
        ],
    ];
    for (k, args) in cases.iter().enumerate() {
        let first = dir.path().join(format!("first{k}"));
        let again = dir.path().join(format!("again{k}"));
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--out", first.to_str().unwrap()]);
        let o = run(&full);
        assert!(
            o.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let manifest_path = dir.path().join(format!("first{k}.manifest.json"));
        let manifest = RunManifest::load(&manifest_path).unwrap();
        assert_eq!(manifest.command, args[0]);
        assert_eq!(manifest.version, env!("CARGO_PKG_VERSION"));
        assert_eq!(manifest.outputs, vec![first.clone()]);
        assert!(manifest.wall_time_seconds >= 0.0);

        let o = run(&[
            "replay",
            manifest_path.to_str().unwrap(),
            "--out",
            again.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        assert_eq!(read(&first), read(&again), "{args:?}");
        let replayed =
            RunManifest::load(&dir.path().join(format!("again{k}.manifest.json"))).unwrap();
        assert_eq!(replayed.args, manifest.args);
        assert_eq!(replayed.params, manifest.params);
    }
    let missing = dir.path().join("missing.json");
    assert_eq!(
        run(&["replay", missing.to_str().unwrap()]).status.code(),
        Some(1)
    );
}

#[test]
fn manifest_without_out_goes_to_stderr() {
    let o = run(&["density", "--n", "2", "--points", "3"]);
    let m: RunManifest = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(m.args, ["density", "--n", "2", "--points", "3"]);
    assert!(m.outputs.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let o = run(&[
        "density",
        "--n",
        "2",
        "--points",
        "3",
        "--manifest",
        path.to_str().unwrap(),
    ]);
    assert!(o.stderr.is_empty());
    assert_eq!(RunManifest::load(&path).unwrap().command, "density");
}

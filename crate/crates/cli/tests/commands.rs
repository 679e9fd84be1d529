use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dmkde"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

/// 120 rows in 2-D: normals near the origin, every tenth row an outlier
/// around (3, 3). Values come from a fixed quasi-random sequence.
fn toy_csv(dir: &Path) -> PathBuf {
    let mut text = String::from("x,y,label\n");
    for i in 0..120 {
        let u = ((i as f64) * 0.618_033_988_75).fract() - 0.5;
        let v = ((i as f64) * 0.414_213_562_37).fract() - 0.5;
        let (x, y, label) = if i % 10 == 0 {
            (3.0 + u, 3.0 + v, 1)
        } else {
            (2.0 * u, 2.0 * v, 0)
        };
        text.push_str(&format!("{x:.6},{y:.6},{label}\n"));
    }
    let path = dir.join("toy.csv");
    fs::write(&path, text).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: PathBuf) -> String {
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn train_aff_two_points_best_loss_non_increasing() {
    let dir = scratch("train_two");
    let csv = dir.join("two.csv");
    fs::write(&csv, "x,label\n0.0,0\n1.0,0\n").unwrap();
    let args = |out: &str| {
        let mut c = bin();
        c.arg("train-aff")
            .arg("--data")
            .arg(&csv)
            .arg("-o")
            .arg(dir.join(out))
            .args([
                "--set",
                "train_aff.use_split=false",
                "--set",
                "experiment.training.epochs=20",
            ]);
        c
    };
    run(&mut args("a"));
    run(&mut args("b"));

    let loss = read(dir.join("a/loss.csv"));
    let mut lines = loss.lines();
    assert_eq!(lines.next(), Some("epoch,loss,best_loss"));
    let best: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(best.len(), 21);
    assert!(best.windows(2).all(|w| w[1] <= w[0]));

    assert_eq!(
        fs::read(dir.join("a/params.json")).unwrap(),
        fs::read(dir.join("b/params.json")).unwrap()
    );
}

#[test]
fn trained_params_are_reused_by_detect() {
    let dir = scratch("reuse");
    let csv = toy_csv(&dir);
    run(bin().arg("train-aff").arg("--data").arg(&csv).arg("-o").arg(&dir));
    run(bin()
        .arg("detect")
        .arg("--data")
        .arg(&csv)
        .arg("-o")
        .arg(&dir)
        .arg("--set")
        .arg(format!(
            "experiment.params_path={:?}",
            dir.join("params.json").display().to_string()
        )));
    let report: serde_json::Value = serde_json::from_str(&read(dir.join("report.json"))).unwrap();
    assert_eq!(report["outcomes"][0]["dim_features"], 4);
}

#[test]
fn detect_smoke_report_has_all_metrics() {
    let dir = scratch("detect");
    let csv = toy_csv(&dir);
    let out = run(bin()
        .arg("detect")
        .arg("--data")
        .arg(&csv)
        .arg("-o")
        .arg(&dir)
        .args(["--set", "experiment.embedding=rff", "--set", "experiment.repeats=2"])
        .args(["--set", r#"states=["pure","mixed"]"#]));
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.contains("RFF:4      Pure"));
    assert_eq!(table, read(dir.join("table.txt")));

    let report: serde_json::Value = serde_json::from_str(&read(dir.join("report.json"))).unwrap();
    let outcomes = report["outcomes"].as_array().unwrap();
    assert_eq!(outcomes.len(), 2);
    for o in outcomes {
        for key in ["accuracy", "f1_outlier", "auc"] {
            assert!(o["summary"][key]["mean"].is_number(), "{key}");
            assert!(o["summary"][key]["std"].is_number(), "{key}");
        }
        assert_eq!(o["runs"].as_array().unwrap().len(), 2);
    }
    let samples = read(dir.join("samples_mixed_r1.csv"));
    assert!(samples.starts_with("id,density,truth,prediction\n"));
    assert_eq!(samples.lines().count(), 1 + 24);
}

#[test]
fn shots_backend_records_exact_deltas() {
    let dir = scratch("shots");
    let csv = toy_csv(&dir);
    run(bin()
        .arg("detect")
        .arg("--data")
        .arg(&csv)
        .arg("-o")
        .arg(&dir)
        .args(["--set", "experiment.embedding=rff"])
        .args([
            "--set",
            "experiment.backend=simulator-shots",
            "--set",
            "experiment.shots=8192",
        ]));
    let samples = read(dir.join("samples_mixed_r0.csv"));
    let mut lines = samples.lines();
    assert_eq!(lines.next(), Some("id,density,truth,prediction,exact,delta"));
    for line in lines {
        let f: Vec<f64> = line.split(',').skip(4).map(|v| v.parse().unwrap()).collect();
        assert!(f[1].abs() < 0.05, "{line}");
    }
    let report: serde_json::Value = serde_json::from_str(&read(dir.join("report.json"))).unwrap();
    assert_eq!(report["outcomes"][0]["runs"][0]["shots"], 8192);
}

#[test]
fn density_estimate_writes_250_point_curves() {
    let dir = scratch("density");
    run(bin().arg("density-estimate").arg("-o").arg(&dir));
    let csv = read(dir.join("density.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,estimate_pure,estimate_mixed,true_pdf"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 250);
    assert_eq!(rows[0][0], -5.0);
    assert_eq!(rows[249][0], 5.0);
    let summary: serde_json::Value = serde_json::from_str(&read(dir.join("summary.json"))).unwrap();
    assert!(summary["l1_pure"].as_f64().unwrap() > 0.0);
    assert!(summary["l1_mixed"].as_f64().unwrap() > 0.0);
}

#[test]
fn sweep_gamma_grid_has_eleven_deterministic_rows() {
    let dir = scratch("sweep");
    let csv = toy_csv(&dir);
    for out in ["a", "b"] {
        run(bin()
            .arg("sweep")
            .arg("--data")
            .arg(&csv)
            .arg("-o")
            .arg(dir.join(out))
            .args(["--set", r#"sweep.embeddings=["rff"]"#, "--set", "sweep.dims=[4]"]));
    }
    let a = read(dir.join("a/sweep.csv"));
    assert_eq!(a.lines().count(), 12);
    assert_eq!(a, read(dir.join("b/sweep.csv")));
    assert!(a.lines().skip(1).all(|l| l.contains(",ok,")));
}

#[test]
fn empty_sweep_grid_fails_without_output() {
    let dir = scratch("sweep_empty");
    let csv = toy_csv(&dir);
    let out = bin()
        .arg("sweep")
        .arg("--data")
        .arg(&csv)
        .arg("-o")
        .arg(&dir)
        .args(["--set", "sweep.gammas=[]"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(!dir.join("sweep.csv").exists());
}

#[test]
fn errors_exit_nonzero_with_stage() {
    let dir = scratch("errors");
    let out = bin().arg("detect").arg("-o").arg(&dir).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("[config]"));

    let bad = dir.join("bad.csv");
    fs::write(&bad, "x,label\n1.0,0\nfoo,1\n").unwrap();
    let out = bin()
        .arg("detect")
        .arg("--data")
        .arg(&bad)
        .arg("-o")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("[ingestion]") && err.contains("row 2") && err.contains("column x"),
        "{err}"
    );

    let out = bin().args(["detect", "--set", "experiment.nope=1"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn help_lists_config_keys() {
    let out = run(bin().args(["detect", "--help"]));
    let help = String::from_utf8(out.stdout).unwrap();
    for key in [
        "experiment.data.path",
        "experiment.gamma_s",
        "sweep.gammas",
        "density.grid_points",
        "output.dir",
    ] {
        assert!(help.contains(key), "{key}");
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn irsc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irsc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn census_count(stdout: &str) -> u64 {
    let v: Value = serde_json::from_str(stdout).unwrap();
    v["count"].as_u64().unwrap()
}

#[test]
fn construct_writes_paper_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sc3");
    let pm = data("pm23.txt");
    let cm = data("cm3.txt");
    let stdout = ok(&irsc(&[
        "construct",
        "--pm",
        p(&pm),
        "--cm",
        p(&cm),
        "--z",
        "13",
        "--L",
        "10",
        "--out",
        p(&out),
    ]));
    assert!(stdout.contains("572 x 1690"));
    assert!(stdout.contains("interior check-node degrees: {11}"));
    let alist = fs::read_to_string(out.join("h_sc.alist")).unwrap();
    assert_eq!(alist.lines().next().unwrap(), "1690 572");
    let degrees: Value =
        serde_json::from_str(&fs::read_to_string(out.join("degrees.json")).unwrap()).unwrap();
    let lambda: Vec<f64> = serde_json::from_value(degrees["lambda"].clone()).unwrap();
    assert!((lambda[2] - 8.0 / 13.0).abs() < 1e-12 && (lambda[3] - 5.0 / 13.0).abs() < 1e-12);
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);
    assert_eq!(degrees["manifest"], manifest["digest"]);
}

#[test]
fn all_zero_partitioning_is_regular() {
    let dir = tempfile::tempdir().unwrap();
    let pm = dir.path().join("pm.txt");
    fs::write(&pm, "0 0 0 0 0\n0 0 0 0 0\n0 0 0 0 0\n").unwrap();
    let out = dir.path().join("out");
    ok(&irsc(&[
        "construct",
        "--pm",
        p(&pm),
        "--L",
        "3",
        "--out",
        p(&out),
    ]));
    let degrees: Value =
        serde_json::from_str(&fs::read_to_string(out.join("degrees.json")).unwrap()).unwrap();
    let lambda: Vec<f64> = serde_json::from_value(degrees["lambda"].clone()).unwrap();
    assert_eq!(lambda, vec![0.0, 0.0, 1.0]);
}

#[test]
fn bad_token_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let pm = dir.path().join("pm.txt");
    fs::write(&pm, "0 1 X\n1 Y 0\n").unwrap();
    let out = irsc(&[
        "construct",
        "--pm",
        p(&pm),
        "--out",
        p(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("line 2, column 3") && err.contains("`Y`"),
        "{err}"
    );
}

#[test]
fn dimension_flags_are_checked() {
    let dir = tempfile::tempdir().unwrap();
    let out = irsc(&[
        "construct",
        "--pm",
        p(&data("pm23.txt")),
        "--gamma",
        "3",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn census_reproduces_paper_counts() {
    let pm1 = data("pm1.txt");
    let pm23 = data("pm23.txt");
    let cm3 = data("cm3.txt");
    let proto = ok(&irsc(&["census", "--pm", p(&pm1), "--scope", "protograph"]));
    assert_eq!(census_count(&proto), 9754);
    let proto = ok(&irsc(&[
        "census",
        "--pm",
        p(&pm23),
        "--scope",
        "protograph",
    ]));
    assert_eq!(census_count(&proto), 4397);
    let ab = ok(&irsc(&["census", "--pm", p(&pm23), "--z", "13"]));
    assert_eq!(census_count(&ab), 5278);
    let tuned = ok(&irsc(&[
        "census",
        "--pm",
        p(&pm23),
        "--cm",
        p(&cm3),
        "--z",
        "13",
    ]));
    assert_eq!(census_count(&tuned), 1469);
    let four = ok(&irsc(&[
        "census",
        "--pm",
        p(&pm23),
        "--cm",
        p(&cm3),
        "--z",
        "13",
        "--length",
        "4",
    ]));
    assert_eq!(census_count(&four), 0);
}

#[test]
fn construct_then_census_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sc1");
    let pm1 = data("pm1.txt");
    ok(&irsc(&[
        "construct",
        "--pm",
        p(&pm1),
        "--z",
        "13",
        "--out",
        p(&out),
    ]));
    let alist = out.join("h_sc.alist");
    let from_file = ok(&irsc(&["census", "--alist", p(&alist)]));
    let in_process = ok(&irsc(&["census", "--pm", p(&pm1), "--z", "13"]));
    assert_eq!(census_count(&from_file), 12896);
    assert_eq!(census_count(&from_file), census_count(&in_process));
}

#[test]
fn optimize_reports_feasibility_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = irsc(&[
        "optimize",
        "--gamma",
        "3",
        "--kappa",
        "3",
        "--lambda",
        "1/3,0,2/3",
        "--phi",
        "1/3,0,2/3",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Gale-Ryser"));
}

#[test]
fn exhaustive_optimize_on_small_case() {
    let dir = tempfile::tempdir().unwrap();
    let pm = dir.path().join("pm.txt");
    fs::write(&pm, "X 0 0\n0 0 0\n").unwrap();
    let out = dir.path().join("opt");
    let stdout = ok(&irsc(&[
        "optimize",
        "--pm",
        p(&pm),
        "--mode",
        "exhaustive",
        "--L",
        "3",
        "--out",
        p(&out),
    ]));
    assert!(stdout.starts_with("F = "));
    let written = fs::read_to_string(out.join("pm.txt")).unwrap();
    let census = ok(&irsc(&[
        "census",
        "--pm",
        p(&out.join("pm.txt")),
        "--scope",
        "protograph",
        "--L",
        "3",
    ]));
    assert!(written.contains(&format!("# F = {}", census_count(&census))));
}

#[test]
fn tune_improves_and_is_reusable() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tuned");
    let pm23 = data("pm23.txt");
    ok(&irsc(&[
        "tune",
        "--pm",
        p(&pm23),
        "--z",
        "13",
        "--out",
        p(&out),
    ]));
    let cm = out.join("cm.txt");
    let count = census_count(&ok(&irsc(&[
        "census",
        "--pm",
        p(&pm23),
        "--cm",
        p(&cm),
        "--z",
        "13",
    ])));
    assert!(count < 5278);
    let trace = fs::read_to_string(out.join("trace.jsonl")).unwrap();
    let last: Value = serde_json::from_str(trace.lines().last().unwrap()).unwrap();
    assert_eq!(last["cycles6"].as_u64(), Some(count));
}

#[test]
fn tune_round_limit_is_partial() {
    let dir = tempfile::tempdir().unwrap();
    let out = irsc(&[
        "tune",
        "--pm",
        p(&data("pm23.txt")),
        "--z",
        "13",
        "--max-rounds",
        "1",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(dir.path().join("cm.txt").exists());
}

#[test]
fn simulate_missing_alist_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = irsc(&[
        "simulate",
        "--alist",
        p(&dir.path().join("nope.alist")),
        "--snr",
        "3",
        "--out",
        p(&dir.path().join("r.csv")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_seed_repeat_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let csv = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_irsc"))
            .env("IRSC_THREADS", threads)
            .args([
                "simulate",
                "--pm",
                p(&data("pm23.txt")),
                "--cm",
                p(&data("cm3.txt")),
                "--z",
                "13",
                "--snr",
                "2.5,3,inf",
                "--max-frames",
                "400",
                "--min-errors",
                "30",
                "--seed",
                "4",
                "--out",
                p(&csv),
            ])
            .output()
            .unwrap();
        ok(&out);
        fs::read(&csv).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "3");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.lines().any(|l| l.starts_with("inf,400,0,")));
}

#[test]
fn simulate_comparison_mode_labels_curves() {
    let dir = tempfile::tempdir().unwrap();
    let mut alists = Vec::new();
    for (name, pm, cm) in [
        ("sc1", "pm1.txt", None),
        ("sc3", "pm23.txt", Some("cm3.txt")),
    ] {
        let out = dir.path().join(name);
        let pm = data(pm);
        let mut args = vec!["construct", "--pm", p(&pm), "--z", "13", "--out", p(&out)];
        let cm = cm.map(data);
        if let Some(cm) = &cm {
            args.extend(["--cm", p(cm)]);
        }
        ok(&irsc(&args));
        let renamed = dir.path().join(format!("{name}.alist"));
        fs::rename(out.join("h_sc.alist"), &renamed).unwrap();
        alists.push(renamed);
    }
    let csv = dir.path().join("cmp.csv");
    ok(&irsc(&[
        "simulate",
        "--alist",
        p(&alists[0]),
        "--alist",
        p(&alists[1]),
        "--snr",
        "3",
        "--max-frames",
        "200",
        "--min-errors",
        "20",
        "--out",
        p(&csv),
    ]));
    let text = fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "code,snr_db,frames,errors,fer,ci_low,ci_high");
    assert!(rows[1].starts_with("sc1,3,") && rows[2].starts_with("sc3,3,"));
    assert!(dir.path().join("cmp.manifest.json").exists());
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_irsc"))
        .env("IRSC_THREADS", "many")
        .args([
            "census",
            "--pm",
            p(&data("pm1.txt")),
            "--scope",
            "protograph",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scsvm::data::{self, Format, LoadOptions};
use scsvm::trace;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_scsvm"));
    c.env_remove("SCSVM_THREADS");
    c
}

fn toy(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn scsvm")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Trace text without the timing column.
fn strip_elapsed(text: &str) -> String {
    text.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}

fn train_toy(dir: &Path, extra: &[&str]) -> (Output, PathBuf, PathBuf) {
    let model = dir.join("model.json");
    let tr = dir.join("trace.csv");
    let data = toy("toy.svm");
    let signs = toy("toy_signs.txt");
    let mut args = vec![
        "train",
        "--data",
        s(&data),
        "--signs",
        s(&signs),
        "--model",
        s(&model),
        "--trace",
        s(&tr),
    ];
    args.extend_from_slice(extra);
    (run(&args), model, tr)
}

#[test]
fn fw_training_certifies_the_gap() {
    let dir = tempfile::tempdir().unwrap();
    let (out, model, tr) = train_toy(
        dir.path(),
        &["--solver", "fw", "--lambda", "0.1", "--epsilon", "1e-3"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = trace::from_csv(&fs::read_to_string(tr).unwrap()).unwrap();
    assert!(rows.last().unwrap().gap.unwrap() <= 1e-3);
    let text = fs::read_to_string(model).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["certified"], true);
    assert_eq!(json["w"].as_array().unwrap().len(), 6);
}

#[test]
fn uncertified_run_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let (out, model, _) = train_toy(
        dir.path(),
        &["--lambda", "0.1", "--epsilon", "1e-12", "--max-iter", "5"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(model.exists());
}

#[test]
fn pg_log_schedule_records_55_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (out, _, tr) = train_toy(
        dir.path(),
        &[
            "--solver",
            "pg",
            "--lambda-over-n",
            "4",
            "--max-iter",
            "100",
            "--eval-schedule",
            "log",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = trace::from_csv(&fs::read_to_string(tr).unwrap()).unwrap();
    assert_eq!(rows.len(), 55);
    assert!(rows.iter().all(|r| r.dual.is_none() && r.gap.is_none()));
    assert_eq!(rows.last().unwrap().iter, 100);
}

#[test]
fn trace_schema_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let cases: [(&str, &[&str]); 2] = [
        (
            "pg_toy_trace.csv",
            &[
                "--solver",
                "pg",
                "--lambda",
                "0.1",
                "--max-iter",
                "20",
                "--eval-schedule",
                "log",
            ],
        ),
        (
            "fw_toy_trace.csv",
            &["--lambda", "0.1", "--max-iter", "10", "--epsilon", "1e-12"],
        ),
    ];
    for (name, args) in cases {
        let (_, _, tr) = train_toy(dir.path(), args);
        let text = fs::read_to_string(&tr).unwrap();
        assert!(text.starts_with("iter,primal,dual,gap,elapsed_ns\n"));
        let expected = fs::read_to_string(golden.join(name)).unwrap();
        assert_eq!(strip_elapsed(&text), expected, "{name}");
    }
}

#[test]
fn same_flags_give_identical_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let flags = [
        "--lambda",
        "0.05",
        "--epsilon",
        "1e-4",
        "--seed",
        "7",
        "--normalize",
    ];
    let (oa, ma, ta) = train_toy(a.path(), &flags);
    let (ob, mb, tb) = train_toy(b.path(), &flags);
    assert_eq!(oa.stdout, ob.stdout);
    assert_eq!(fs::read(ma).unwrap(), fs::read(mb).unwrap());
    let (ta, tb) = (fs::read_to_string(ta).unwrap(), fs::read_to_string(tb).unwrap());
    assert_eq!(strip_elapsed(&ta), strip_elapsed(&tb));
    // a parallel and a single-threaded run agree too
    let c = tempfile::tempdir().unwrap();
    let mc = c.path().join("model.json");
    let data = toy("toy.svm");
    let signs = toy("toy_signs.txt");
    let mut args = vec![
        "train",
        "--data",
        s(&data),
        "--signs",
        s(&signs),
        "--model",
        s(&mc),
    ];
    args.extend_from_slice(&flags);
    let out = bin().args(&args).env("SCSVM_THREADS", "1").output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        fs::read(&mc).unwrap(),
        fs::read(a.path().join("model.json")).unwrap()
    );
}

#[test]
fn missing_mask_file_is_reported_by_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no_such_mask.txt");
    let data = toy("toy.svm");
    let model = dir.path().join("m.json");
    let out = run(&[
        "train",
        "--data",
        s(&data),
        "--signs",
        s(&missing),
        "--lambda",
        "0.1",
        "--model",
        s(&model),
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("no_such_mask.txt"), "{}", stderr(&out));
    assert!(!model.exists());
}

#[test]
fn bad_flags_are_rejected() {
    let data = toy("toy.svm");
    let out = run(&["train", "--data", s(&data), "--model", "/tmp/x.json"]);
    assert!(!out.status.success());
    let out = run(&[
        "train",
        "--data",
        s(&data),
        "--model",
        "/tmp/x.json",
        "--lambda",
        "0.1",
        "--lambda-over-n",
        "1",
    ]);
    assert!(!out.status.success());
    let out = run(&[
        "train",
        "--data",
        s(&data),
        "--model",
        "/tmp/x.json",
        "--lambda",
        "-1",
    ]);
    assert!(!out.status.success());
    let out = bin()
        .args(["verify", "--check", "lmo", "--instances", "2"])
        .env("SCSVM_THREADS", "zero")
        .output()
        .unwrap();
    assert!(stderr(&out).contains("SCSVM_THREADS"));
}

#[test]
fn predictions_match_the_library_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let (out, model_path, _) = train_toy(dir.path(), &["--lambda", "0.1", "--normalize"]);
    assert!(out.status.success());
    let scores_path = dir.path().join("scores.txt");
    let data = toy("toy.svm");
    let out = run(&[
        "predict",
        "--data",
        s(&data),
        "--model",
        s(&model_path),
        "--out",
        s(&scores_path),
        "--auc",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(
        !stderr(&out).contains("differs"),
        "no fingerprint warning expected"
    );
    let text = fs::read_to_string(&scores_path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let auc_line = lines.pop().unwrap();

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&model_path).unwrap()).unwrap();
    let w: Vec<f64> = json["w"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let raw = data::load_dataset(&data, Format::Sparse, LoadOptions::default()).unwrap();
    let raw = data::normalize_unit(&raw).unwrap();
    let mask = scsvm::SignMask::new(6, &[0, 2, 3], &[4]).unwrap();
    let model = scsvm::PrimalModel {
        w,
        lambda: 0.1,
        sign_mask: mask,
        meta: scsvm::ModelMeta {
            solver: "fw".into(),
            iterations: 0,
            final_gap: None,
        },
    };
    let expected: Vec<f64> = (0..raw.n()).map(|i| model.score(raw.row(i))).collect();
    assert_eq!(lines.len(), expected.len());
    for (line, e) in lines.iter().zip(&expected) {
        assert_eq!(line.parse::<f64>().unwrap().to_bits(), e.to_bits());
    }
    let auc = scsvm::eval::auc(&expected, &raw.labels).unwrap();
    assert_eq!(auc_line, format!("# auc={auc}"));
}

#[test]
fn predict_checks_dimensions_and_fingerprint() {
    let dir = tempfile::tempdir().unwrap();
    let (_, model_path, _) = train_toy(dir.path(), &["--lambda", "0.1"]);
    let wide = dir.path().join("wide.csv");
    fs::write(&wide, "label,f0,f1\n1,0.5,0.5\n").unwrap();
    let out = run(&["predict", "--data", s(&wide), "--model", s(&model_path)]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("dimension mismatch"), "{}", stderr(&out));
    let other = dir.path().join("other.svm");
    fs::write(&other, "+1 1:1\n-1 2:1\n").unwrap();
    let out = run(&["predict", "--data", s(&other), "--model", s(&model_path)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("differs"));
}

#[test]
fn zero_model_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("zero.json");
    fs::write(
        &model,
        r#"{"schema_version":1,"w":[0.0,0.0],"sigma":[0,1],"lambda":1.0,"solver":"fw","iterations":0,
            "final_gap":null,"certified":null,"normalize":false,"dataset_fingerprint":""}"#,
    )
    .unwrap();
    let d = dir.path().join("d.svm");
    fs::write(&d, "+1 1:3 2:4\n-1 2:-1\n").unwrap();
    let out = run(&["predict", "--data", s(&d), "--model", s(&model)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "0\n0\n");
}

#[test]
fn pairwise_writes_ordered_dataset_mask_and_ids() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, mask, ids) = (
        dir.path().join("pw.svm"),
        dir.path().join("pw_signs.txt"),
        dir.path().join("ids.txt"),
    );
    let sim = toy("toy_similarity.csv");
    let labels = toy("toy_labels.txt");
    let out = run(&[
        "pairwise",
        "--similarity",
        s(&sim),
        "--labels",
        s(&labels),
        "--out-data",
        s(&ds),
        "--out-signs",
        s(&mask),
        "--out-ids",
        s(&ids),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(&mask).unwrap(), "0 +\n1 +\n2 -\n3 -\n");
    let order: Vec<usize> = fs::read_to_string(&ids)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    let raw = data::load_dataset(
        &ds,
        Format::Sparse,
        LoadOptions {
            d: Some(4),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(raw.labels, vec![1.0, 1.0, -1.0, -1.0]);

    // train on the pairwise data, predict, and map scores back to the original order
    let model = dir.path().join("m.json");
    let out = run(&[
        "train",
        "--data",
        s(&ds),
        "--dim",
        "4",
        "--signs",
        s(&mask),
        "--lambda",
        "0.5",
        "--model",
        s(&model),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = run(&["predict", "--data", s(&ds), "--dim", "4", "--model", s(&model)]);
    let scores: Vec<f64> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    let mut original = [f64::NAN; 4];
    for (j, &i) in order.iter().enumerate() {
        original[i] = scores[j];
    }
    let matrix = data::load_similarity(&sim, &labels, false).unwrap();
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    let w: Vec<f64> = json["w"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for (i, score) in original.iter().enumerate() {
        // feature h of sequence i is its similarity to reordered sequence h
        let direct: f64 = (0..4).map(|h| w[h] * matrix.get(order[h], i)).sum();
        assert!((score - direct).abs() <= 1e-12);
    }
}

#[test]
fn pairwise_rejects_non_square_and_single_class() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim.csv");
    let labels = dir.path().join("labels.txt");
    fs::write(&sim, "1,0.5,0.2\n0.5,1,0.1\n").unwrap();
    fs::write(&labels, "1\n-1\n").unwrap();
    let o = |d: &Path| {
        run(&[
            "pairwise",
            "--similarity",
            s(&sim),
            "--labels",
            s(&labels),
            "--out-data",
            s(&d.join("a")),
            "--out-signs",
            s(&d.join("b")),
            "--out-ids",
            s(&d.join("c")),
        ])
    };
    let out = o(dir.path());
    assert!(!out.status.success());
    assert!(stderr(&out).contains("not square"), "{}", stderr(&out));
    fs::write(&sim, "1,0.5\n0.5,1\n").unwrap();
    fs::write(&labels, "1\n1\n").unwrap();
    let out = o(dir.path());
    assert!(!out.status.success());
    assert!(stderr(&out).contains("both classes"), "{}", stderr(&out));
}

#[test]
fn eval_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let sim = scsvm::synth::two_blob_similarity(40, 3, 3.0, 1).unwrap();
    let sim_path = dir.path().join("sim.csv");
    let labels_path = dir.path().join("labels.txt");
    let mut text = String::new();
    for i in 0..sim.n {
        let row: Vec<String> = (0..sim.n).map(|j| sim.get(i, j).to_string()).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(&sim_path, text).unwrap();
    let labels: Vec<String> = sim.labels.iter().map(|y| y.to_string()).collect();
    fs::write(&labels_path, labels.join("\n")).unwrap();
    let out = run(&[
        "eval",
        "--similarity",
        s(&sim_path),
        "--labels",
        s(&labels_path),
        "--folds",
        "3",
        "--lambda-over-n",
        "1e-2,1",
        "--repeats",
        "2",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["protocol"], "pairwise");
    let series = json["series"].as_array().unwrap();
    assert_eq!(series.len(), 2);
    for s in series {
        assert_eq!(s["runs"].as_array().unwrap().len(), 2);
        let auc = s["mean_auc"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&auc));
    }

    let data = toy("toy.svm");
    let signs = toy("toy_signs.txt");
    let out = run(&[
        "eval",
        "--data",
        s(&data),
        "--signs",
        s(&signs),
        "--folds",
        "2",
        "--lambda",
        "0.01,0.1",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["protocol"], "generic");
    let report = &json["series"][0]["runs"][0]["report"];
    assert!(report["auc"].as_f64().unwrap() > 0.5);
    assert_eq!(
        report["n_pos"].as_u64().unwrap() + report["n_neg"].as_u64().unwrap(),
        20
    );
}

#[test]
fn verify_default_and_rate_report() {
    let out = run(&["verify", "--instances", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 6);

    let out = run(&[
        "verify",
        "--check",
        "rate",
        "--lambda",
        "0.1",
        "--epsilon",
        "0.01",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("bound 1998"), "{text}");
    assert!(text.contains("observed"));

    let a = run(&["verify", "--check", "lmo", "--seed", "3", "--json"]);
    let b = run(&["verify", "--check", "lmo", "--seed", "3", "--json"]);
    assert_eq!(a.stdout, b.stdout);
}

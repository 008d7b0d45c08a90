use std::path::Path;
use std::process::Command;

fn exp(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_xlabel-exp"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("run xlabel-exp")
}

fn synth(dir: &Path) -> String {
    let csv = dir.join("data.csv").to_string_lossy().into_owned();
    let out = exp(&["synth", "--out", &csv, "--seed", "7", "--n-records", "300", "--flag-noise", "0.1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    csv
}

#[test]
fn synth_writes_a_labeled_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth(dir.path());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 301);
    assert!(text.lines().next().unwrap().ends_with("DM_label,HTN_label,CKD_label,DLP_label"));
}

#[test]
fn totalflips_cv_and_noise_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth(dir.path());
    let out = dir.path().join("reports").to_string_lossy().into_owned();
    let common = ["--data", csv.as_str(), "--task", "HTN", "--seed", "3", "--out", out.as_str()];

    let mut args = vec!["totalflips"];
    args.extend(common);
    args.extend(["--repetitions", "3", "--batch-size", "25"]);
    let r = exp(&args);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(Path::new(&out).join("totalflips_HTN.json")).unwrap()).unwrap();
    assert_eq!(json["total_flips"].as_array().unwrap().len(), 3);
    assert_eq!(json["model"], "EBM");

    let mut args = vec!["cv"];
    args.extend(common);
    args.extend(["--k", "4", "--models", "RuleBased,AllNegative"]);
    assert!(exp(&args).status.success());
    let cv = std::fs::read_to_string(Path::new(&out).join("cv_HTN.csv")).unwrap();
    assert_eq!(cv.lines().count(), 1 + 2 * 4);

    let mut args = vec!["noise"];
    args.extend(common);
    args.extend(["--levels", "0.1,0.4", "--repeats", "2", "--models", "RuleBased"]);
    assert!(exp(&args).status.success());
    let noise = std::fs::read_to_string(Path::new(&out).join("noise_HTN.csv")).unwrap();
    assert_eq!(noise.lines().count(), 1 + 2 * 2);
}

#[test]
fn same_seed_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth(dir.path());
    let run = |sub: &str| {
        let out = dir.path().join(sub).to_string_lossy().into_owned();
        let r = exp(&["totalflips", "--data", &csv, "--task", "DM", "--seed", "11", "--out", &out, "--repetitions", "2"]);
        assert!(r.status.success());
        std::fs::read(Path::new(&out).join("totalflips_DM.json")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn bad_input_fails_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.csv").to_string_lossy().into_owned();
    let r = exp(&["cv", "--data", &missing, "--task", "DM", "--out", "x"]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("error"));

    let r = exp(&["cv", "--data", &missing, "--task", "XYZ", "--out", "x"]);
    assert!(!r.status.success());

    // a task column with gaps cannot drive an experiment
    let csv = dir.path().join("partial.csv");
    std::fs::write(&csv, "id,age,sex,height,weight,Glucose,HbA1c,eGFR,sbp1,dbp1,LDL-c,icd10,drugs,note,DM_label\nA,,,,,,,,,,,,,,1\nB,,,,,,,,,,,,,,\n").unwrap();
    let r = exp(&["cv", "--data", csv.to_str().unwrap(), "--task", "DM", "--out", "x"]);
    assert!(!r.status.success());
}

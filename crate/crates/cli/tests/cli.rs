use fgm_core::library::{read_csv, read_library};
use fgm_core::mech::BUNDLED_METHANE;
use std::path::{Path, PathBuf};
use std::process::Command as Process;
use std::sync::OnceLock;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn fgm_env(dir: &Path, args: &[&str], env: &dyn Fn(&str) -> Option<String>) -> Run {
    let mut argv = vec![
        "fgm".to_string(),
        "--output-dir".into(),
        dir.display().to_string(),
    ];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = fgm_cli::run(argv, env, &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn fgm(dir: &Path, args: &[&str]) -> Run {
    fgm_env(dir, args, &|_| None)
}

/// Reference library CSV, tabulated once for the whole file.
fn reference_csv() -> &'static PathBuf {
    static P: OnceLock<PathBuf> = OnceLock::new();
    P.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap().keep();
        let r = fgm(&dir, &["tabulate"]);
        assert_eq!(r.code, 0, "{}", r.err);
        dir.join("library.csv")
    })
}

fn records(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_fgm");
    let ok = Process::new(bin).arg("mech-check").output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(
        String::from_utf8_lossy(&ok.stdout).trim(),
        "7 species, 4 reactions, OK"
    );
    let bad = Process::new(bin).arg("no-such-command").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    let help = Process::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn mech_check_names_the_unbalanced_reaction() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.mech");
    std::fs::write(&path, BUNDLED_METHANE.replace("CO + 3H2 ", "CO + 2H2 ")).unwrap();
    let r = fgm(dir.path(), &["mech-check", path.to_str().unwrap()]);
    assert_eq!(r.code, 1);
    assert!(
        r.err.contains("reaction #2") && r.err.contains("element H"),
        "{}",
        r.err
    );
    let missing = fgm(dir.path(), &["mech-check", "/nonexistent/file.mech"]);
    assert_eq!(missing.code, 1);
    assert!(missing.out.is_empty());
}

#[test]
fn tabulate_writes_library_and_csv() {
    let csv = reference_csv();
    let ds = read_csv(csv).unwrap();
    assert_eq!(ds.len(), 210);
    assert_eq!(ds.input_names, ["Z", "chi"]);
    assert_eq!(ds.target_names[0], "T");
    let lib = read_library(csv.with_file_name("library.fgmlib")).unwrap();
    assert_eq!(lib.entries.len(), 7);
    assert!(lib.entries.iter().all(|e| e.converged));
}

#[test]
fn tabulate_single_chi_and_repeatability() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let r = fgm(d, &["tabulate", "--chi", "5"]);
        assert_eq!(r.code, 0, "{}", r.err);
    }
    let lib = read_library(a.join("library.fgmlib")).unwrap();
    assert_eq!(lib.entries.len(), 1);
    assert_eq!(lib.entries[0].chi_st, 5.0);
    assert_eq!(read_csv(a.join("library.csv")).unwrap().len(), 30);
    for f in ["library.fgmlib", "library.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn unconverged_flamelet_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[flamelet]\nchi = [5.0]\nmax_pseudo_steps = 1\n").unwrap();
    let r = fgm(dir.path(), &["--config", cfg.to_str().unwrap(), "tabulate"]);
    assert_eq!(r.code, 2, "{}", r.err);
    assert!(r.err.contains("chi = 5"), "{}", r.err);
}

#[test]
fn config_errors_are_input_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[flamelet]\nchii = [5.0]\n").unwrap();
    let r = fgm(dir.path(), &["--config", cfg.to_str().unwrap(), "tabulate"]);
    assert_eq!(r.code, 1);
    let r = fgm(
        dir.path(),
        &[
            "train",
            "--family",
            "knn",
            "--dataset",
            reference_csv().to_str().unwrap(),
        ],
    );
    assert_eq!(r.code, 1);
    assert!(r.err.contains("knn"));
    let r = fgm(dir.path(), &["train", "--dataset", "/nonexistent.csv"]);
    assert_eq!(r.code, 1);
}

#[test]
fn environment_sets_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let t = target.display().to_string();
    let argv = ["fgm", "tabulate", "--chi", "1"];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let env = move |k: &str| (k == "FGM_OUTPUT_DIR").then(|| t.clone());
    assert_eq!(fgm_cli::run(argv, &env, &mut out, &mut err), 0);
    assert!(target.join("library.csv").exists());
}

#[test]
fn train_writes_model_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = reference_csv().to_str().unwrap();
    let r = fgm(dir.path(), &["train", "--family", "lr", "--dataset", csv]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("accuracy"));
    let model = fgm_ml::load_model(dir.path().join("model-lr.fgm")).unwrap();
    assert_eq!(model.family(), fgm_ml::Family::Lr);
    let (header, rows) = records(&dir.path().join("report.csv"));
    assert_eq!(header[..3], ["family", "accuracy", "mse"]);
    assert_eq!(header.len(), 3 + 8);
    assert_eq!(rows.len(), 1);
    let acc: f64 = rows[0][1].parse().unwrap();
    assert!((0.0..=100.0).contains(&acc));
    let (header, rows) = records(&dir.path().join("timings.csv"));
    assert_eq!(header, ["family", "train_time_s", "predict_time_s"]);
    assert_eq!(rows.len(), 1);
}

#[test]
fn compare_emits_table_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let r = fgm(
        dir.path(),
        &["compare", "--dataset", reference_csv().to_str().unwrap()],
    );
    assert_eq!(r.code, 0, "{}", r.err);
    let (header, rows) = records(&dir.path().join("compare.csv"));
    assert_eq!(header[..4], ["family", "status", "accuracy", "mse"]);
    assert!(header.contains(&"acc_CO".to_string()) && header.contains(&"neg_CO".to_string()));
    let families: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(families, ["mlp", "rf", "lr", "svr"]);
    assert!(rows.iter().all(|r| r.len() == header.len() && r[1] == "ok"));
    let reference = read_csv(dir.path().join("curves_reference.csv")).unwrap();
    assert_eq!(reference.len(), 30);
    for f in ["mlp", "rf", "lr", "svr"] {
        let c = read_csv(dir.path().join(format!("curves_{f}.csv"))).unwrap();
        assert_eq!(c.len(), 30);
        assert_eq!(c.target_names, reference.target_names);
        assert!(c.inputs.iter().all(|x| x[1] == 5.0));
    }
}

#[test]
fn tune_reports_resumes_and_gates_the_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let csv = reference_csv().to_str().unwrap();
    let args = ["tune", "--budget", "6", "--top-k", "5", "--dataset", csv];
    let r = fgm(dir.path(), &args);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("accuracy bands"));
    let (header, rows) = records(&dir.path().join("tune_top.csv"));
    assert_eq!(header[0], "rank");
    assert_eq!(rows.len(), 5);
    let journal = dir.path().join("tune_journal.jsonl");
    let lines = std::fs::read_to_string(&journal).unwrap().lines().count();
    assert_eq!(lines, 6);
    let top = std::fs::read(dir.path().join("tune_top.csv")).unwrap();
    let again = fgm(dir.path(), &args);
    assert_eq!(again.code, 0);
    assert_eq!(
        std::fs::read_to_string(&journal).unwrap().lines().count(),
        6
    );
    assert_eq!(std::fs::read(dir.path().join("tune_top.csv")).unwrap(), top);

    let full = fgm(dir.path(), &["tune", "--full", "--dataset", csv]);
    assert_eq!(full.code, 1);
    assert!(full.out.contains("702900 configurations"), "{}", full.out);
    assert!(full.err.contains("--confirm-full"));
}

#[test]
fn subset_study_rows_and_pool_check() {
    let dir = tempfile::tempdir().unwrap();
    let r = fgm(
        dir.path(),
        &["subset-study", "--counts", "3,5", "--pool-size", "9"],
    );
    assert_eq!(r.code, 0, "{}", r.err);
    let (header, rows) = records(&dir.path().join("subset_study.csv"));
    assert_eq!(
        header,
        [
            "libraries",
            "T_max",
            "T_min",
            "T_mean",
            "CO2_max",
            "CO2_min",
            "CO2_mean"
        ]
    );
    assert_eq!(rows.len(), 2);
    let mean = |i: usize| rows[i][3].parse::<f64>().unwrap();
    assert!(mean(0) > mean(1));
    let r = fgm(
        dir.path(),
        &["subset-study", "--counts", "3,12", "--pool-size", "9"],
    );
    assert_eq!(r.code, 1);
    assert!(r.err.contains("12"));
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn mdfrac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdfrac")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

/// Write `text` as a config next to a copy of the single-fracture network.
fn config_in(dir: &Path, text: &str) -> PathBuf {
    std::fs::copy(fixture("single_fracture.txt"), dir.join("single_fracture.txt")).unwrap();
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn flow_run_writes_vtk_for_both_dimensions() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = mdfrac(&["run", fixture("single_fracture_flow.toml").to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["pressure_sd0_2d.vtk", "pressure_sd1_1d.vtk"] {
        let text = std::fs::read_to_string(out.join(f)).unwrap();
        assert!(text.contains("SCALARS pressure double"), "{f}");
    }
    let s = summary(&out);
    assert_eq!(s["status"], "ok");
    assert!(s["final_residual"].as_f64().unwrap() < 1e-10);
    // Every file in the directory is listed, and nothing else.
    let mut listed: Vec<String> = s["files"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    listed.push("summary.json".into());
    listed.sort();
    let mut on_disk: Vec<String> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    on_disk.sort();
    assert_eq!(listed, on_disk);
}

#[test]
fn imported_mesh_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = mdfrac(&["run", fixture("single_fracture_msh.toml").to_str().unwrap(), "--output", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(summary(tmp.path())["metrics"]["matrix_cells"], 84);
}

#[test]
fn typoed_key_exits_1_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("single_fracture_flow.toml")).unwrap().replace("matrix_perm", "matrx_perm");
    let cfg = config_in(tmp.path(), &text);
    let o = mdfrac(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("matrx_perm"), "{}", stderr(&o));
    assert!(!tmp.path().join("output").exists(), "no outputs on config errors");
}

#[test]
fn intersecting_poromech_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let o = mdfrac(&["run", fixture("crossing_poromech.toml").to_str().unwrap(), "--output", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("non-intersecting fractures"), "{}", stderr(&o));
    assert_eq!(summary(tmp.path())["status"], "error");
}

#[test]
fn malformed_network_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config_in(tmp.path(), "model = \"flow\"\n[paths]\nnetwork = \"single_fracture.txt\"\n");
    std::fs::write(tmp.path().join("single_fracture.txt"), "0 0 1 1\n0.2 0.3 0.8\n").unwrap();
    let o = mdfrac(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn newton_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("injection_poromech.toml"))
        .unwrap()
        .replace("end_time = 10.0", "end_time = 0.2\nnewton_tol = 1e-30\nmax_iterations = 3");
    std::fs::copy(fixture("injection.txt"), tmp.path().join("injection.txt")).unwrap();
    let cfg = tmp.path().join("config.toml");
    std::fs::write(&cfg, text).unwrap();
    let o = mdfrac(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn unknown_suite_exits_1() {
    let o = mdfrac(&["verify", "projection"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown suite"));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(mdfrac(&["simulate"]).status.code(), Some(1));
    assert_eq!(mdfrac(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_reports_a_table() {
    let tmp = tempfile::tempdir().unwrap();
    let o = mdfrac(&["verify", "contact-ncp", "--seed", "7", "--output", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("suite contact-ncp"));
    assert!(!out.contains("FAIL"));
    let csv = std::fs::read_to_string(tmp.path().join("verify.csv")).unwrap();
    assert!(csv.starts_with("suite,check,samples,measured,tolerance,passed\n"));
    assert_eq!(summary(tmp.path())["metrics"]["contact-ncp"], "pass");
}

#[test]
fn single_level_study_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("study.toml");
    std::fs::write(&cfg, "model = \"benchmark\"\n[study]\nlevels = [0.05]\n").unwrap();
    let o = mdfrac(&["converge", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("at least 2 mesh levels"), "{}", stderr(&o));
}

#[test]
fn converge_rejects_models_without_studies() {
    let o = mdfrac(&[
        "converge",
        fixture("single_fracture_flow.toml").to_str().unwrap(),
        "--output",
        tempfile::tempdir().unwrap().path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn identical_runs_give_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture("single_fracture_transport.toml");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let o = mdfrac(&["run", cfg.to_str().unwrap(), "--seed", "5", "--output", d.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let (ca, cb) = (csv_files(&a), csv_files(&b));
    assert_eq!(ca.len(), 1);
    assert_eq!(ca, cb);
}

#[test]
fn parallel_study_matches_serial() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("study.toml");
    std::fs::write(&cfg, "model = \"sneddon\"\n[study]\nangles = [0.0, 20.0]\nseeds = [1, 2]\nfracture_cells = [6, 12]\n").unwrap();
    let (a, b) = (tmp.path().join("serial"), tmp.path().join("parallel"));
    for (d, t) in [(&a, "1"), (&b, "3")] {
        let o = mdfrac(&["converge", cfg.to_str().unwrap(), "--threads", t, "--output", d.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let ca = csv_files(&a);
    assert_eq!(ca.iter().map(|c| c.0.as_str()).collect::<Vec<_>>(), ["errors.csv", "rates.csv", "runs.csv"]);
    assert_eq!(ca, csv_files(&b));
    assert!(summary(&a)["metrics"]["average_rate"].is_f64());
}

#[test]
fn different_seeds_change_the_mesh() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture("single_fracture_flow.toml");
    let mut cells = Vec::new();
    for s in ["1", "2"] {
        let d = tmp.path().join(s);
        let o = mdfrac(&["run", cfg.to_str().unwrap(), "--seed", s, "--output", d.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        cells.push(std::fs::read(d.join("pressure_sd0_2d.vtk")).unwrap());
    }
    assert_ne!(cells[0], cells[1]);
}

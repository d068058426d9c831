use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kscg_cli::{load_spec, ExperimentKind};

const SMALL: &str = r#"
name = "small"
experiment = "sweep"
trials = 3000
seed = 7

[scenario]
network = "tpil"
p_ave_db = 10.0
q_ave_db = 0.0
stsb = "rayleigh"
stpb = "weibull:1"

[solver]
batch_size = 4000

[sweep]
n_list = [4, 8, 16, 32]

[[series]]
label = "full"
feedback = "full"

[[series]]
label = "half"
feedback = "kscg:n^0.5"
"#;

fn kscg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kscg")).args(args).output().expect("binary runs")
}

fn write_spec(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("spec.toml");
    fs::write(&p, body).unwrap();
    p
}

fn read_csvs(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn bundled_specs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("specs");
    let mut count = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let spec = load_spec(&path).unwrap_or_else(|e| panic!("{e}"));
        if matches!(spec.experiment, ExperimentKind::Sweep | ExperimentKind::InterferenceProfile) {
            assert_eq!(spec.sweep.as_ref().unwrap().n_list.last(), Some(&1024), "{}", path.display());
        }
        count += 1;
    }
    assert_eq!(count, 11);
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), SMALL);
    let mut runs = Vec::new();
    for jobs in ["1", "3"] {
        let out = tmp.path().join(format!("j{jobs}"));
        let o = kscg(&["run", spec.to_str().unwrap(), "--jobs", jobs, "--out-dir", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        runs.push(read_csvs(&out));
    }
    assert_eq!(runs[0].len(), 3);
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn sidecar_reproduces_its_run() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), SMALL);
    let first = tmp.path().join("a");
    let o = kscg(&["run", spec.to_str().unwrap(), "--seed", "99", "--trials", "2000", "--out-dir", first.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let sidecar = first.join("small.json");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&sidecar).unwrap()).unwrap();
    assert_eq!(json["seed"], 99);
    assert_eq!(json["trials"], 2000);
    assert_eq!(json["series"][0]["fit"]["regressor"], "loglogN");

    let second = tmp.path().join("b");
    let o = kscg(&["run", sidecar.to_str().unwrap(), "--out-dir", second.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_csvs(&first), read_csvs(&second));
    assert_eq!(fs::read(&sidecar).unwrap(), fs::read(second.join("small.json")).unwrap());
}

#[test]
fn invalid_spec_exits_2_with_line() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), &SMALL.replace("stpb = \"weibull:1\"", "stpb = \"weibull:-1\""));
    let o = kscg(&["run", spec.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 12"), "{err}");
}

#[test]
fn missing_spec_exits_nonzero() {
    let o = kscg(&["run", "/nonexistent/spec.toml"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn non_convergence_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let body = SMALL.replace("batch_size = 4000", "batch_size = 4000\ntol = 0.0001\nmax_iter = 2");
    let spec = write_spec(tmp.path(), &body);
    let out = tmp.path().join("o");
    let o = kscg(&["run", spec.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("N="), "{err}");
}

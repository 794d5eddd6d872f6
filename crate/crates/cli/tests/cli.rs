use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use vrprox_cli::ExperimentConfig;

const MODEL: &str = r#"
[objective]
kind = "quadratic"
center = [0.0]

[quasi_distance]
kind = "euclidean"

[resistance]
kind = "quadratic"

[space]
kind = "grid"
lower = [-2.0]
upper = [2.0]
resolution = [5]
"#;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn shipped_configs() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    v.sort();
    assert!(!v.is_empty());
    v
}

fn vrprox(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vrprox"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("experiment.toml");
    std::fs::write(&p, body).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn global_mode_reports_the_minimizer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{MODEL}\n[[runs]]\nname = \"g\"\nmode = \"global\"\n"),
    );
    let out = dir.path().join("out");
    let o = vrprox(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let s = read_json(&out.join("summary.json"));
    assert_eq!(
        s["runs"][0]["result"]["minimizer"],
        serde_json::json!([0.0])
    );
    assert_eq!(s["runs"][0]["result"]["value"], 0.0);
}

#[test]
fn unknown_resistance_kind_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let body = MODEL.replace(
        "kind = \"quadratic\"\n\n[space]",
        "kind = \"cubic-ish\"\n\n[space]",
    );
    let cfg = write_config(
        dir.path(),
        &format!("{body}\n[[runs]]\nname = \"g\"\nmode = \"global\"\n"),
    );
    for cmd in ["run", "validate", "probes"] {
        let o = vrprox(&[cmd, cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{cmd}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(
            err.contains("resistance") && err.contains("cubic-ish"),
            "{err}"
        );
    }
}

#[test]
fn semantic_error_exits_2_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "{MODEL}\n[[runs]]\nname = \"s\"\nmode = \"exact-prox\"\nx0 = [2.0]\nlambda = -1.0\n"
        ),
    );
    let o = vrprox(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("runs[0].lambda"));
}

#[test]
fn probes_report_lemma_tallies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "{MODEL}\n[[runs]]\nname = \"g\"\nmode = \"global\"\n\n[[runs]]\nname = \"p\"\nmode = \"probes\"\nchecks = [\"lemma1\"]\ninstances = 50\n"
        ),
    );
    let out = dir.path().join("out");
    let o = vrprox(&[
        "probes",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let p = read_json(&out.join("probes.json"));
    assert_eq!(p["runs"][0]["lines"][0], "lemma1: 50/50 pass");
    // Only probe runs execute under `probes`.
    let s = read_json(&out.join("summary.json"));
    assert_eq!(s["runs"].as_array().unwrap().len(), 1);
}

#[test]
fn failing_check_exits_1_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let body = MODEL.replace("kind = \"euclidean\"", "kind = \"shifted\"\noffset = 1.5");
    let cfg = write_config(
        dir.path(),
        &format!("{body}\n[[runs]]\nname = \"p\"\nmode = \"probes\"\nchecks = [\"axioms\"]\n"),
    );
    let out = dir.path().join("out");
    let o = vrprox(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let p = read_json(&out.join("probes.json"));
    assert_eq!(p["all_passed"], false);
    let detail = &p["runs"][0]["checks"][0]["detail"];
    assert_eq!(detail["separation"]["passed"], false);
    assert!(detail["separation"]["witness"].is_array());
}

#[test]
fn shipped_configs_validate_and_round_trip() {
    for path in shipped_configs() {
        let cfg = ExperimentConfig::load(&path).unwrap();
        cfg.validate()
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again, "{}", path.display());
        let o = vrprox(&["validate", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
}

#[test]
fn outputs_do_not_depend_on_job_count() {
    let path = configs_dir().join("habit_quadratic.toml");
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let p = path.to_str().unwrap();
    assert_eq!(
        vrprox(&["run", p, "--out", a.to_str().unwrap(), "--jobs", "1"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        vrprox(&["run", p, "--out", b.to_str().unwrap(), "--jobs", "4"])
            .status
            .code(),
        Some(0)
    );
    let mut names: Vec<_> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 9);
    for n in names {
        assert_eq!(
            std::fs::read(a.join(&n)).unwrap(),
            std::fs::read(b.join(&n)).unwrap(),
            "{n:?}"
        );
    }
}

#[test]
fn seed_override_changes_recorded_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{MODEL}\n[[runs]]\nname = \"g\"\nmode = \"global\"\n"),
    );
    let out = dir.path().join("out");
    let o = vrprox(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "41",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_json(&out.join("summary.json"))["seed"], 41);
}

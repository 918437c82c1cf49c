use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[system]
m = 2
n_u = 2
n_d = 2
k_u = 2
k_d = 2
snr_dl_db = 5.0
snr_ul_db = 0.0
tau2_dl = 0.1
tau2_i = 0.1

[experiment]
kind = "validate_de_dl"
trials = 50
seed = 9
sweep = "snr_dl_db=0:5:10"
"#;

fn nafd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nafd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, workers) in [(&a, "1"), (&b, "3")] {
        let o = nafd(&[
            "run",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--workers",
            workers,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let first = fs::read(&a).unwrap();
    assert_eq!(first, fs::read(&b).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("experiment,point,sweep,scenario,metric,value,stderr"));
    // 3 points x (rzf, zf) x (mc, de)
    assert_eq!(text.lines().count(), 1 + 3 * 4);
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn failed_point_exits_one_and_keeps_other_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    // k = 4 fills M * N_D, where ZF has no equivalent.
    let o = nafd(&[
        "run", "--config", &cfg, "--sweep", "k=1,4", "--trials", "20",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = stdout.lines().skip(1).collect();
    assert_eq!(rows.len(), 2 * 4);
    let failed: Vec<&&str> = rows.iter().filter(|r| !r.contains(",ok,")).collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0].contains("R_dl_zf_de") && failed[0].contains(",k=4,"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1 sweep point(s) failed"));
}

#[test]
fn config_error_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("tau2_dl = 0.1", "tau2_dl = 1.5"));
    let o = nafd(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("system.tau2_dl"));

    let o = nafd(&["validate-de-dl", "--sweep", "snr_dl_db=10:5:0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = nafd(&["run"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_mirrors_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let csv = nafd(&["run", "--config", &cfg, "--trials", "10"]);
    let json = nafd(&["run", "--config", &cfg, "--trials", "10", "--emit", "json"]);
    assert!(csv.status.success() && json.status.success());
    let text = String::from_utf8(json.stdout).unwrap();
    assert!(text.trim_start().starts_with('['));
    let records = text.matches("\"metric\"").count();
    assert_eq!(
        records,
        String::from_utf8(csv.stdout).unwrap().lines().count() - 1
    );
}

#[test]
fn presets_print_and_load_back() {
    let dir = tempfile::tempdir().unwrap();
    for kind in [
        "validate-de-dl",
        "validate-de-ul",
        "compare-duplex",
        "compare-precoders",
        "schedule-compare",
    ] {
        let o = nafd(&["preset", kind]);
        assert!(o.status.success());
        let text = String::from_utf8(o.stdout).unwrap();
        assert!(text.contains("[experiment]"));
        let path = write_config(dir.path(), &text);
        // A one-point, one-trial run proves the printed preset parses.
        let sweep = if kind == "compare-duplex" {
            "m=2"
        } else {
            "snr_ul_db=0"
        };
        let o = nafd(&["run", "--config", &path, "--trials", "1", "--sweep", sweep]);
        assert!(
            matches!(o.status.code(), Some(0 | 1)),
            "{kind}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

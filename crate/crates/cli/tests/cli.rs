use std::path::Path;
use std::process::{Command, Output};

use hioco::BaselineKind;
use hioco_cli::config::{AutoOr, SweepConfig};
use hioco_cli::presets::preset;
use hioco_cli::ExperimentConfig;

fn hioco(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hioco"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, cfg.to_toml()).unwrap();
    path.to_str().unwrap().to_string()
}

fn body(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    let (first, rest) = text.split_once('\n').unwrap();
    assert!(first.starts_with("# generated_unix="), "{first}");
    rest.to_string()
}

fn read_rows(path: &Path) -> Vec<csv::StringRecord> {
    let text = body(path);
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap())
        .collect()
}

#[test]
fn static_preset_runs_and_settles() {
    let dir = tempfile::tempdir().unwrap();
    let out = hioco(&["run", "--preset", "static-sanity"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = dir.path().join("trace_000.csv");
    let text = body(&trace);
    assert!(text.starts_with("t,cost,opt_cost,regret_cum,path_cum,path2_cum,delta_cum,delta2_cum,track_err\n"));
    let rows = read_rows(&trace);
    assert_eq!(rows.len(), 300);
    let regret = |i: usize| rows[i][3].parse::<f64>().unwrap();
    assert!(regret(299) - regret(199) < 1e-8);
    assert!(dir.path().join("report_000.json").exists());
    assert!(!dir.path().join("sweep.csv").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("regret") && stdout.contains("hioco"), "{stdout}");
}

#[test]
fn reruns_are_byte_identical_apart_from_the_timestamp() {
    let mut cfg = preset("thm1").unwrap();
    cfg.scenario.horizon = 60;
    cfg.algorithm.compression = hioco::Compression::Quantize { bits: 6, lo: -3.0, hi: 3.0 };
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &cfg);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = hioco(&["run", &config], out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(body(&a.join("trace_000.csv")), body(&b.join("trace_000.csv")));
    assert_eq!(
        std::fs::read(a.join("report_000.json")).unwrap(),
        std::fs::read(b.join("report_000.json")).unwrap()
    );
    let emitted = ExperimentConfig::load(&a.join("config.toml")).unwrap();
    assert_eq!(emitted, cfg);
}

#[test]
fn seed_flag_changes_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let base = ["run", "--preset", "static-sanity"];
    assert!(hioco(&base, &a).status.success());
    let o = hioco(&["run", "--preset", "static-sanity", "--seed", "8"], &b);
    assert!(o.status.success());
    assert_ne!(body(&a.join("trace_000.csv")), body(&b.join("trace_000.csv")));
}

#[test]
fn sweep_table_has_every_row_and_constant() {
    let mut cfg = preset("thm1").unwrap();
    cfg.scenario.horizon = 80;
    cfg.sweep = SweepConfig {
        steps: vec![[1, 0], [1, 1], [2, 2]],
        baselines: BaselineKind::ALL.to_vec(),
        ..Default::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &cfg);
    let out = hioco(&["sweep", &config], &dir.path().join("out"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sweep = dir.path().join("out/sweep.csv");
    let text = body(&sweep);
    let header = text.lines().next().unwrap();
    for col in ["variant", "mu", "l", "d", "r", "alpha", "gamma", "eta", "beta", "eta_j", "regret", "bound_i"] {
        assert!(header.split(',').any(|h| h == col), "missing {col} in {header}");
    }
    let rows = read_rows(&sweep);
    assert_eq!(rows.len(), 3 + BaselineKind::ALL.len());
    let variants: Vec<&str> = rows.iter().map(|r| r.get(1).unwrap()).collect();
    for kind in BaselineKind::ALL {
        assert!(variants.contains(&kind.name()), "{variants:?}");
    }
    let eta_col = header.split(',').position(|h| h == "eta_j").unwrap();
    let eta_j: Vec<f64> = rows[..3].iter().map(|r| r[eta_col].parse().unwrap()).collect();
    assert!(eta_j[0] > eta_j[1] && eta_j[1] > eta_j[2], "{eta_j:?}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[scenario]\nC = \"three\"\n").unwrap();
    let o = hioco(&["run", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let mut cfg = preset("static-sanity").unwrap();
    cfg.algorithm.alpha = AutoOr::Value(1e-3);
    let config = write_config(dir.path(), &cfg);
    let o = hioco(&["run", &config], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("smoothness"));

    let o = hioco(&["run"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

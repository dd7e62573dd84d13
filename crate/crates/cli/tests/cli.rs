use std::path::Path;
use std::process::{Command, Output};

use knudsen_core::operator::{build_matrix, SamplingMode};
use knudsen_core::{FamilySpec, TransitionMatrix};

fn knudsen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_knudsen"))
        .args(args)
        .env_remove("KNUDSEN_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

/// CSV body with the timing column dropped.
fn without_timings(csv: &str) -> Vec<String> {
    csv.lines().map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string()).collect()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_reader(csv.as_bytes());
    let idx = r.headers().unwrap().iter().position(|h| h == name).expect("column exists");
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

#[test]
fn h_closed_forms() {
    for (args, want) in [
        (vec!["h", "--family", "bumps", "--K", "0.6"], 0.03),
        (vec!["h", "--family", "mixture", "--alpha", "0.9"], 0.3),
        (vec!["h", "--family", "flat"], 0.0),
    ] {
        let o = knudsen(&args);
        assert_eq!(code(&o), 0, "{args:?}");
        let h: f64 = stdout(&o).trim().parse().unwrap();
        assert!((h - want).abs() < 1e-12, "{args:?}: {h}");
    }
    assert_eq!(stdout(&knudsen(&["h", "--family", "bumps", "--K", "0.6"])).trim(), "0.03");
}

#[test]
fn profile_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.toml");
    std::fs::write(&path, FamilySpec::TwoBumps { d: -0.2, k_big: 2.0, k_small: 1.0 }.to_toml()).unwrap();
    let from_file = knudsen(&["h", "--profile", path.to_str().unwrap()]);
    let from_flags = knudsen(&["h", "--family", "two-bumps", "--d", "-0.2"]);
    assert_eq!(code(&from_file), 0);
    assert_eq!(stdout(&from_file), stdout(&from_flags));
}

#[test]
fn exit_codes() {
    assert_eq!(code(&knudsen(&["h", "--family", "bumps"])), 1);
    assert_eq!(code(&knudsen(&["h", "--family", "spiky", "--K", "1"])), 1);
    assert_eq!(code(&knudsen(&["h", "--family", "bumps", "--K", "0.5", "--alpha", "0.2"])), 1);
    assert_eq!(code(&knudsen(&["h", "--no-such-flag"])), 1);
    assert_eq!(code(&knudsen(&["h", "--family", "bumps", "--K", "3"])), 2);
    assert_eq!(code(&knudsen(&["h", "--family", "mixture", "--alpha", "1.5"])), 2);
    assert_eq!(code(&knudsen(&["h", "--profile", "/nonexistent/profile.toml"])), 4);
    let o = knudsen(&["diffusivity", "--family", "flat", "--M", "40", "--N", "50", "--estimator", "lser,direct"]);
    assert_eq!(code(&o), 3);
    assert!(column(&stdout(&o), "status").iter().all(|s| s.starts_with("unreliable")));
    let o = knudsen(&["matrix", "--family", "flat", "--M", "10", "--N", "10", "--out", "/nonexistent/dir/p.bin"]);
    assert_eq!(code(&o), 4);
    assert_eq!(code(&knudsen(&["--help"])), 0);
}

#[test]
fn flat_matrix_file_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.bin");
    let o = knudsen(&["matrix", "--family", "flat", "--M", "50", "--N", "200", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let p = TransitionMatrix::read_binary(&path).unwrap();
    assert_eq!(p.m(), 50);
    for i in 0..50 {
        for j in 0..50 {
            assert_eq!(p.get(i, j), if i == j { 1.0 } else { 0.0 });
        }
    }
    assert_eq!(p.metadata().family, Some(FamilySpec::Flat));
    assert_eq!(p.metadata().n, 200);
}

#[test]
fn grid_mode_matrix_reloads_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bumps.bin");
    let o = knudsen(&["matrix", "--family", "bumps", "--K", "0.5", "--M", "1000", "--N", "10000", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let loaded = TransitionMatrix::read_binary(&path).unwrap();
    let profile = FamilySpec::Bumps { k: 0.5 }.build::<f64>().unwrap();
    let built = build_matrix(&profile, 1000, 10000, SamplingMode::Grid).unwrap();
    assert!(loaded == built);
}

#[test]
fn csv_matrix_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let o = knudsen(&["matrix", "--family", "bumps", "--K", "0.8", "--M", "20", "--N", "100", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# {"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 20);
    for row in rows {
        assert_eq!(row.len(), 20);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn random_mode_rebuilds_agree_within_sampling_noise() {
    let dir = tempfile::tempdir().unwrap();
    let n = 2000;
    let load = |seed: &str| {
        let path = dir.path().join(format!("s{seed}.bin"));
        let o = knudsen(&[
            "matrix", "--family", "bumps", "--K", "0.5", "--M", "200", "--N", &n.to_string(), "--seed", seed, "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        TransitionMatrix::read_binary(&path).unwrap()
    };
    let (a, b) = (load("1"), load("2"));
    assert!(a != b);
    let worst = (0..200)
        .flat_map(|i| (0..200).map(move |j| (i, j)))
        .map(|(i, j)| (a.get(i, j) - b.get(i, j)).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 3.0 / (n as f64).sqrt(), "{worst}");
}

#[test]
fn gap_from_stored_matrix_matches_fresh_build() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.bin");
    let spec = ["--family", "bumps", "--K", "0.7", "--M", "150", "--N", "1500"];
    assert_eq!(code(&knudsen(&[&["matrix"], &spec[..], &["--out", path.to_str().unwrap()]].concat())), 0);
    let fresh = stdout(&knudsen(&[&["gap"], &spec[..]].concat()));
    let stored = stdout(&knudsen(&["gap", "--matrix", path.to_str().unwrap()]));
    assert_eq!(fresh, stored);
    let get = |key: &str| -> f64 {
        fresh.lines().find_map(|l| l.strip_prefix(&format!("{key}="))).unwrap().parse().unwrap()
    };
    assert!(get("gap") > 0.0 && get("gap") < 1.0);
    assert!((get("h") - 0.49 / 12.0).abs() < 1e-10);
    assert!((get("gap_asymptotic") - 4.0 * 0.49 / 12.0).abs() < 1e-10);
}

#[test]
fn diffusivity_rows_are_consistent() {
    let o = knudsen(&[
        "diffusivity", "--family", "bumps", "--K", "0.5", "--M", "200", "--N", "2000", "--estimator",
        "lser,galerkin,direct,spectral",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let header = out.lines().next().unwrap();
    assert_eq!(
        header,
        "family,params,h,gap,sigma2,eta,theta_equiv,estimator,n,M,N,error_bound,status,elapsed_ms"
    );
    assert_eq!(column(&out, "estimator"), ["lser", "galerkin", "direct", "spectral"]);
    let eta: Vec<f64> = column(&out, "eta").iter().map(|v| v.parse().unwrap()).collect();
    let theta: Vec<f64> = column(&out, "theta_equiv").iter().map(|v| v.parse().unwrap()).collect();
    for (e, t) in eta.iter().zip(&theta) {
        assert!((t - 2.0 / (e + 1.0)).abs() < 1e-12);
    }
    // The three operator-based estimators agree closely.
    for e in &eta[2..] {
        assert!((e - eta[1]).abs() < 0.01 * eta[1], "{eta:?}");
    }
    assert!(column(&out, "error_bound")[0].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn trace_dump_writes_events() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let o = knudsen(&["trace-dump", "--family", "bumps", "--K", "1", "--r", "0.3", "--x", "-0.2", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "event,x,y,dx,dy");
    assert!(lines.len() >= 3);
    // The exit direction points up, back into the channel.
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!(last[4] > 0.0);
    assert_eq!(code(&knudsen(&["trace-dump", "--family", "bumps", "--K", "1", "--r", "0.3", "--x", "1.5"])), 1);
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("sweep.toml");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SWEEP: &str = r#"
family = "bumps"
range = [0.1, 1.0, 10]
estimators = ["lser", "galerkin"]
M = 200
N = 1000
"#;

#[test]
fn sweep_is_deterministic_and_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SWEEP);
    let a = knudsen(&["sweep", "--config", &cfg, "--jobs", "1"]);
    let b = knudsen(&["sweep", "--config", &cfg, "--jobs", "4"]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(code(&b), 0);
    let (a, b) = (stdout(&a), stdout(&b));
    assert_eq!(without_timings(&a), without_timings(&b));
    assert_eq!(a.lines().count(), 1 + 20);

    let params = column(&a, "params");
    let want: Vec<String> = (1..=10)
        .flat_map(|k| {
            let p = format!("K={}", if k == 10 { "1".to_string() } else { format!("0.{k}") });
            [p.clone(), p]
        })
        .collect();
    assert_eq!(params, want);

    // Gap grows and eta falls with K.
    let gap: Vec<f64> = column(&a, "gap").iter().step_by(2).map(|v| v.parse().unwrap()).collect();
    assert!(gap.windows(2).all(|w| w[1] > w[0]), "{gap:?}");
    let eta: Vec<f64> = column(&a, "eta").iter().map(|v| v.parse().unwrap()).collect();
    for start in 0..2 {
        let series: Vec<f64> = eta.iter().skip(start).step_by(2).copied().collect();
        assert!(series.windows(2).all(|w| w[1] < w[0]), "{series:?}");
    }
}

#[test]
fn sweep_writes_output_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
family = "mixture"
values = [0.25, 0.5, 1.0]
estimators = ["direct", "spectral"]
M = 60
N = 300
"#,
    );
    let csv_path = dir.path().join("out.csv");
    let svg_path = dir.path().join("out.svg");
    let o = knudsen(&[
        "sweep", "--config", &cfg, "--output", csv_path.to_str().unwrap(), "--svg", svg_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).is_empty());
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(column(&csv, "status").iter().all(|s| s == "ok"));
    let h: Vec<f64> = column(&csv, "h").iter().map(|v| v.parse().unwrap()).collect();
    for (got, alpha) in h.iter().step_by(2).zip([0.25, 0.5, 1.0]) {
        assert!((got - alpha / 3.0).abs() < 1e-10);
    }
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline").count(), 3);
}

#[test]
fn sweep_records_point_failures_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
family = "bumps"
values = [0.6, 2.5, 0.9]
estimators = ["galerkin"]
M = 60
N = 300
"#,
    );
    let o = knudsen(&["sweep", "--config", &cfg]);
    assert_eq!(code(&o), 0);
    let status = column(&stdout(&o), "status");
    assert_eq!(status[0], "ok");
    assert!(status[1].starts_with("geometry error"));
    assert_eq!(status[2], "ok");
    assert_eq!(column(&stdout(&o), "eta")[1], "");
}

#[test]
fn sweep_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "family = \"bumps\"\nvalues = []\n",
        "family = \"bumps\"\nrange = [0.1, 1.0, 0]\n",
        "family = \"bumps\"\n",
        "family = \"bumps\"\nvalues = [0.5]\nrange = [0.1, 1.0, 3]\n",
        "family = \"bumps\"\nvalues = [0.5]\nbogus_key = 1\n",
        "family = \"bumps\"\nvalues = [0.5]\nK = 0.4\n",
        "family = \"bumps\"\nvalues = [0.5]\nparameter = \"alpha\"\n",
        "family = \"bumps\"\nvalues = [0.5]\nestimators = [\"magic\"]\n",
        "family = \"bumps\"\nvalues = [0.5]\nestimators = []\n",
        "family = \"bumps\"\nvalues = [0.5]\nM = 1\n",
        "family = \"two-bumps\"\nvalues = [0.5]\nparameter = \"K_big\"\n",
        "family = \"flat\"\nvalues = [0.5]\n",
    ];
    for body in cases {
        let cfg = write_config(dir.path(), body);
        let o = knudsen(&["sweep", "--config", &cfg]);
        assert_eq!(code(&o), 1, "{body}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).is_empty());
    }
    assert_eq!(code(&knudsen(&["sweep", "--config", "/nonexistent/sweep.toml"])), 4);
}

#[test]
fn cache_hit_changes_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cfg = write_config(
        dir.path(),
        r#"
family = "two-bumps"
range = [-0.2, 0.2, 3]
estimators = ["galerkin", "direct"]
M = 80
N = 400
"#,
    );
    let run = |env_cache: bool| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_knudsen"));
        cmd.args(["sweep", "--config", &cfg]);
        if env_cache {
            cmd.env("KNUDSEN_CACHE_DIR", &cache);
        } else {
            cmd.env_remove("KNUDSEN_CACHE_DIR");
        }
        let o = cmd.output().unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        without_timings(&stdout(&o))
    };
    let uncached = run(false);
    let cold = run(true);
    let files: Vec<_> = std::fs::read_dir(&cache).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 3);
    let stamps: Vec<_> = files.iter().map(|f| std::fs::metadata(f).unwrap().modified().unwrap()).collect();
    let warm = run(true);
    assert_eq!(uncached, cold);
    assert_eq!(cold, warm);
    let again: Vec<_> = files.iter().map(|f| std::fs::metadata(f).unwrap().modified().unwrap()).collect();
    assert_eq!(stamps, again, "cache files were rewritten");

    // A damaged entry is rebuilt rather than trusted.
    std::fs::write(&files[0], b"garbage").unwrap();
    assert_eq!(run(true), cold);
    assert!(TransitionMatrix::read_binary(&files[0]).is_ok());
}

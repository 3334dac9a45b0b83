use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn pspec(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pspec"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}\nstderr: {}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn jordan() -> Vec<String> {
    vec![
        "--A".into(),
        data("jordan_A.mtx").display().to_string(),
        "--E".into(),
        data("jordan_E.mtx").display().to_string(),
    ]
}

fn run(sub: &str, extra: &[&str]) -> Output {
    let mut args: Vec<String> = vec![sub.into()];
    args.extend(jordan());
    args.extend(extra.iter().map(|s| s.to_string()));
    pspec(&args.iter().map(String::as_str).collect::<Vec<_>>(), &[])
}

#[test]
fn decompose_reports_the_double_eigenvalue() {
    let out = run("decompose", &[]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["pencil"]["d"], 1);
    assert_eq!(v["pencil"]["index"], 1);
    let ev = v["pencil"]["finite_eigenvalues"].as_array().unwrap();
    assert_eq!(ev.len(), 2);
    for z in ev {
        assert!((z[0].as_f64().unwrap() + 1.0).abs() < 1e-10 && z[1].as_f64().unwrap().abs() < 1e-10);
    }
}

#[test]
fn kreiss_constant_is_nearly_three() {
    let v = json(&run("kreiss", &[]));
    let k = v["kreiss"].as_f64().unwrap();
    assert!((2.5..=3.5).contains(&k), "{k}");
}

#[test]
fn compare_keeps_dae_fields_and_moves_gen1_fields() {
    let t1 = data("row_transform_1.mtx").display().to_string();
    let t2 = data("row_transform_2.mtx").display().to_string();
    let out = run("compare", &["--T", &t1, "--T", &t2, "--grid", "-3,1,-2,2,41,41"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    for row in v["transforms"].as_array().unwrap() {
        assert!(row["dae_max_relative_difference"].as_f64().unwrap() < 1e-8);
        assert!(row["gen1_max_ratio"].as_f64().unwrap() > 2.0);
    }
    // E is singular, so the classical E^{-1}A field is undefined
    assert!(v["dae_vs_ruhe_max_relative_difference"].is_null());
}

#[test]
fn input_errors_exit_with_two() {
    let out = pspec(&["decompose", "--A", "/nonexistent/A.mtx", "--E", "/nonexistent/E.mtx"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["error"]["kind"], "io");
    assert_eq!(v["error"]["exit_code"], 2);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mtx");
    std::fs::write(&bad, "%%MatrixMarket matrix coordinate real general\n3 3 1\n1 1 oops\n").unwrap();
    let out = pspec(&["decompose", "--A", bad.to_str().unwrap(), "--E", bad.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["error"]["kind"], "parse");
    assert!(v["error"]["message"].as_str().unwrap().contains("line 3"));

    let out = run("grid", &["--grid", "1,0,0,1,5,5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = pspec(&["decompose"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let mut args = vec!["decompose".to_string()];
    args.extend(jordan());
    let out = pspec(&args.iter().map(String::as_str).collect::<Vec<_>>(), &[("PSPEC_THREADS", "0")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_three() {
    // A - mu E is singular at the requested shift (mu = -1 is an eigenvalue)
    let out = run("decompose", &["--mu", "-1,0"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out)["error"]["kind"], "singular_shift");

    // a singular pencil: A and E share a null vector
    let dir = tempfile::tempdir().unwrap();
    let z = dir.path().join("Z.mtx");
    std::fs::write(&z, "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1\n").unwrap();
    let zs = z.to_str().unwrap();
    let out = pspec(&["decompose", "--A", zs, "--E", zs], &[]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["error"]["exit_code"], 3);
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut args = vec!["grid".to_string()];
    args.extend(jordan());
    args.extend(["--eps", "0.1,0.5", "--grid", "-3,1,-2,2,41,41", "--format", "csv,json,svg", "--out"].map(String::from));
    let run_in = |dir: &Path, threads: &str| {
        let mut a = args.clone();
        a.push(dir.display().to_string());
        let out = pspec(&a.iter().map(String::as_str).collect::<Vec<_>>(), &[("PSPEC_THREADS", threads)]);
        assert_eq!(out.status.code(), Some(0));
        out.stdout
    };
    let sa = run_in(a.path(), "1");
    let sb = run_in(b.path(), "4");
    // config.toml records the output directory, so it legitimately differs
    for f in ["field.csv", "summary.json", "plot.svg"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
    assert_eq!(sa, sb);
    assert_eq!(read(a.path(), "summary.json"), sa);
}

#[test]
fn csv_dump_reproduces_the_json_abscissa() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("grid", &["--eps", "0.1,0.5,1", "--grid", "-3,4,-3,3,71,61", "--format", "csv,json", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&read(dir.path(), "summary.json")).unwrap();
    let rows = dae_pspec::io::parse_field_csv(&String::from_utf8(read(dir.path(), "field.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 71 * 61);
    let cell = v["cell_width"].as_f64().unwrap();
    for row in v["alpha_eps"].as_array().unwrap() {
        let e = row["epsilon"].as_f64().unwrap();
        let alpha = row["alpha_eps"].as_f64().unwrap();
        let from_csv = rows.iter().filter(|r| r.2 < e).map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(row["alpha_eps_grid"].as_f64().unwrap(), from_csv);
        assert!(from_csv <= alpha + 1e-12 && alpha - from_csv <= cell, "eps {e}: {alpha} vs {from_csv}");
    }
}

#[test]
fn config_file_round_trips_and_reproduces_the_run() {
    let first = tempfile::tempdir().unwrap();
    let out = run("abscissa", &["--eps", "0.01,0.1", "--mu", "0.25,0", "--out", first.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let cfg_path = first.path().join("config.toml");
    let canon = std::fs::read_to_string(&cfg_path).unwrap();
    assert_eq!(dae_pspec::io::RunConfig::parse(&canon).unwrap().canonical(), canon);

    let second = tempfile::tempdir().unwrap();
    let again = pspec(&["abscissa", "--config", cfg_path.to_str().unwrap(), "--out", second.path().to_str().unwrap()], &[]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(out.stdout, again.stdout);
    assert_eq!(read(first.path(), "summary.json"), read(second.path(), "summary.json"));
}

#[test]
fn weighted_identity_matches_the_plain_field() {
    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("I.mtx");
    std::fs::write(&h, "%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n1 1 1\n2 2 1\n3 3 1\n").unwrap();
    let plain = json(&run("abscissa", &["--eps", "0.1"]));
    let weighted = json(&run("abscissa", &["--eps", "0.1", "--H", h.to_str().unwrap()]));
    let a = plain["alpha_eps"][0]["alpha_eps"].as_f64().unwrap();
    let b = weighted["alpha_eps"][0]["alpha_eps"].as_f64().unwrap();
    assert!((a - b).abs() < 1e-10);
    assert_eq!(run("bounds", &["--H", h.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn saddle_generation_feeds_projection() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = pspec(&["gen-saddle", "--nv", "40", "--np", "15", "--seed", "7", "--out", d], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["expected_d"], 30);
    let a = dir.path().join("A.mtx");
    let e = dir.path().join("E.mtx");
    let (a, e) = (a.to_str().unwrap(), e.to_str().unwrap());
    let dec = json(&pspec(&["decompose", "--A", a, "--E", e], &[]));
    assert_eq!((dec["pencil"]["d"].as_u64(), dec["pencil"]["index"].as_u64()), (Some(30), Some(2)));
    let pdir = tempfile::tempdir().unwrap();
    let pd = pdir.path().to_str().unwrap();
    let pr = pspec(&["project", "--A", a, "--E", e, "--k", "5", "--eps", "0.01", "--grid", "-3,0.5,-2,2,21,21", "--format", "csv", "--out", pd], &[]);
    assert_eq!(pr.status.code(), Some(0));
    let v = json(&pr);
    assert_eq!(v["projection"]["converged"], true);
    assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 5);
    assert!(v["eigenvalues"].as_array().unwrap().iter().all(|z| z[0].as_f64().unwrap() < 0.0));
    assert!(pdir.path().join("field.csv").exists());
    assert!(!pdir.path().join("summary.json").exists(), "json not requested");
}

#[test]
fn svg_plots_are_written_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("contours", &["--eps", "0.1,0.5", "--format", "svg", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let svg = String::from_utf8(read(dir.path(), "plot.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("stroke-dasharray"));
    assert!(!dir.path().join("field.csv").exists());
}

#[test]
fn discrete_and_transient_run_on_the_oscillatory_example() {
    let a = data("oscillatory_A.mtx").display().to_string();
    let e = data("oscillatory_E.mtx").display().to_string();
    let out = pspec(&["discrete", "--A", &a, "--E", &e, "--eps", "0.1", "--steps", "10"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["spectral_radius"].as_f64().unwrap() - 26f64.sqrt()).abs() < 1e-10);
    let out = pspec(&["transient", "--A", &a, "--E", &e, "--tmax", "5", "--nt", "51"], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["peak_norm"].as_f64().unwrap() >= 1.0);
}

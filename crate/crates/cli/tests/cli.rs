use std::path::Path;
use std::process::{Command, Output};

fn qcavity(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcavity")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Header row of a CSV with a leading comment block.
fn header(csv: &str) -> &str {
    csv.lines().find(|l| !l.starts_with('#')).expect("header row")
}

fn result_value(csv: &str, key: &str) -> f64 {
    let prefix = format!("#   {key} = ");
    let line = csv.lines().find(|l| l.starts_with(&prefix)).unwrap_or_else(|| panic!("no {key} in metadata"));
    line[prefix.len()..].parse().unwrap()
}

#[test]
fn list_presets_names_figures_and_parameters() {
    let o = qcavity(&["list-presets"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(!rows.is_empty());
    let row = |name: &str| *rows.iter().find(|l| l.split_whitespace().next() == Some(name)).unwrap();
    assert!(row("fig5").contains("z₀ = −0.05i"));
    assert!(row("appendixA").contains("Ω = 0.225ω"));
    assert!(row("fig3a").contains("Fig. 3(a)"));
}

#[test]
fn preset_output_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = qcavity(&["preset", "fig3a", "--out", dir.path().to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let (x, y) = (read(&a.path().join("fig3a.csv")), read(&b.path().join("fig3a.csv")));
    assert_eq!(x, y);
    assert_eq!(header(&x), "t,naive_concurrence_numeric,naive_concurrence_analytic");
}

#[test]
fn threaded_runs_match_single_threaded() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&a, "1"), (&b, "4")] {
        let o = Command::new(env!("CARGO_BIN_EXE_qcavity"))
            .args(["preset", "compare-low", "--out", dir.path().to_str().unwrap()])
            .env("QCAVITY_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for file in ["compare-low.csv", "compare-low_summary.csv"] {
        assert_eq!(read(&a.path().join(file)), read(&b.path().join(file)));
    }
}

#[test]
fn fig1_maxima_are_inverse_photon_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let o = qcavity(&["preset", "fig1", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = read(&dir.path().join("fig1.csv"));
    assert_eq!(header(&csv), "g_t,C_1,C_2,C_3");
    for n in 1..=3 {
        let max = result_value(&csv, &format!("max_C_{n}"));
        assert!((max - 1.0 / n as f64).abs() < 1e-6, "n = {n}: {max}");
    }
    // the sampled columns never exceed the bound
    let rows = csv.lines().filter(|l| !l.starts_with('#')).skip(1);
    for row in rows {
        let v: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
        for n in 1..=3 {
            assert!(v[n] <= 1.0 / n as f64 + 1e-12);
        }
    }
}

#[test]
fn shown_preset_runs_like_the_preset() {
    let dir = tempfile::tempdir().unwrap();
    let shown = qcavity(&["show-preset", "fig4a"]);
    assert!(shown.status.success());
    let config = dir.path().join("fig4a.toml");
    std::fs::write(&config, stdout(&shown)).unwrap();
    let via_config = dir.path().join("config.csv");
    let o = qcavity(&["run", config.to_str().unwrap(), "--out", via_config.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = qcavity(&["preset", "fig4a", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read(&via_config), read(&dir.path().join("fig4a.csv")));
    assert!((result_value(&read(&via_config), "theta_T") - 0.857).abs() < 1e-3);
}

#[test]
fn malformed_config_exits_with_code_two_and_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "kind = \"subcycle\"\n\n[system]\ng_over_omega = 0.05\nn_max = 12\ncolour = \"blue\"\n").unwrap();
    let o = qcavity(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 6") && err.contains("colour"), "{err}");

    std::fs::write(&path, "kind = \"subcycle\"\n\n[system]\ng_over_omega = 0.05\nn_max = 12\n").unwrap();
    let o = qcavity(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`pulse`"), "{}", stderr(&o));
}

#[test]
fn cutoff_overflow_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("strong.toml");
    let text = "kind = \"subcycle\"\n[system]\ng_over_omega = 0.05\nn_max = 10\n[pulse]\nomega_tau_d = 3.141592653589793\narea = 8.0\n";
    std::fs::write(&path, text).unwrap();
    let o = qcavity(&["run", path.to_str().unwrap(), "--out", dir.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("cutoff overflow"), "{}", stderr(&o));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_qcavity")).arg("list-presets").env("QCAVITY_THREADS", "many").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn quasistatic_subcommand_writes_series_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.csv");
    let o = qcavity(&["quasistatic", "--r", "0.899", "--points", "400", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(header(&read(&out)), "t,naive_concurrence");
    let summary = read(&dir.path().join("q_summary.csv"));
    let row: Vec<f64> = summary.lines().filter(|l| !l.starts_with('#')).nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    // columns r, rotation, theta_r, omega_drive_over_g, n_gamma, n_q, n_total
    assert_eq!(row[0], 0.899);
    assert!((row[4] - 1.05).abs() < 0.01 && (row[5] - 0.83).abs() < 0.01 && (row[6] - 1.89).abs() < 0.01);
}

#[test]
fn fidelity_sweep_reports_slope() {
    let o = qcavity(&["fidelity-sweep", "--envelope", "mixed", "--points", "6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert_eq!(header(&csv), "g_tau_d,fidelity,one_minus_F");
    assert!((result_value(&csv, "slope") - 2.0).abs() < 0.3);
}

#[test]
fn concurrence_of_bell_state_is_one() {
    let h = std::f64::consts::FRAC_1_SQRT_2.to_string();
    let o = qcavity(&["concurrence", &h, "0", "0", "0", "0", "0", &h, "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o).lines().find(|l| l.starts_with("concurrence = ")).unwrap().to_string();
    let c: f64 = line["concurrence = ".len()..].parse().unwrap();
    assert!((c - 1.0).abs() < 1e-12);
    assert_eq!(qcavity(&["concurrence", "1", "0"]).status.code(), Some(2));
}

#[test]
fn selftest_passes() {
    let o = qcavity(&["selftest", "--seed", "7"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    for check in ["unitarity", "local-unitary-invariance", "block-dense-equivalence", "integrator-convergence"] {
        assert!(text.lines().any(|l| l.starts_with("PASS") && l.contains(check)), "{check} missing:\n{text}");
    }
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bofem_cli::experiment::{table_rows, TableRow};
use bofem_cli::spec::{IcKind, WeightKind};
use bofem_cli::RunSpec;
use proptest::prelude::*;

fn bofem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bofem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn significant_digits(s: &str) -> usize {
    let mantissa = s.split(['e', 'E']).next().unwrap();
    mantissa.chars().filter(char::is_ascii_digit).count()
}

#[test]
fn zero_initial_condition_stays_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("zero");
    let o = bofem(&[
        "--ic", "zero", "--elements", "32", "--t-final", "2", "--snapshots", "0,1,2",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let traj = csv_rows(&out.join("trajectory.csv"));
    assert_eq!(traj.len(), 3 * 33);
    assert!(traj.iter().all(|r| r[2].parse::<f64>().unwrap() == 0.0));
    let diag = csv_rows(&out.join("diagnostics.csv"));
    assert_eq!(diag.len(), 3);
    assert!(diag.iter().all(|r| r[7].is_empty()), "no E without a reference");
    assert!(out.join("plot.gp").exists());
}

#[test]
fn outputs_have_headers_rows_and_precision() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = bofem(&[
        "--elements", "64", "--t-final", "4", "--snapshots", "2,4", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,Q1,Q2,Q3,I1,I2,I3,E,mean_iterations");
    let rows = csv_rows(&out.join("diagnostics.csv"));
    // the t = 0 row plus the two snapshots
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 0.0);
    for cell in &rows[0][4..7] {
        assert_eq!(cell.parse::<f64>().unwrap(), 0.0, "I_n(0) = 0");
    }
    for row in &rows {
        for cell in row {
            assert!(significant_digits(cell) >= 10, "{cell}");
        }
    }
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next().unwrap(), "t,x,u");
    let plot = fs::read_to_string(out.join("plot.gp")).unwrap();
    assert!(plot.contains("trajectory.csv") && plot.contains("exact(x"));
    let leftovers: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().contains(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn reruns_are_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = bofem(&[
            "--ic", "single-soliton", "--elements", "64", "--t-final", "3", "--snapshots", "3",
            "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["trajectory.csv", "diagnostics.csv", "plot.gp"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "elements = 48\nic = zero\nt-final = 1\nsnapshots = 1\n").unwrap();
    let o = bofem(&["--config", cfg.to_str().unwrap(), "--elements", "40", "--print-config"]);
    assert!(o.status.success());
    let spec = RunSpec::from_text(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(spec.elements, 40);
    assert_eq!(spec.ic, IcKind::Zero);
    assert_eq!(spec.t_final, 1.0);
}

#[test]
fn usage_errors_exit_with_2() {
    for args in [
        vec!["--elements", "255"],
        vec!["--weight-offset", "50"],
        vec!["--ic", "three-soliton"],
        vec!["--c1", "0.6"],
        vec!["--snapshots", "0,500"],
        vec!["--no-such-flag"],
    ] {
        let o = bofem(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "colour = blue\n").unwrap();
    let o = bofem(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn io_errors_exit_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = bofem(&["--config", dir.path().join("missing.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = blocker.join("sub");
    let o = bofem(&[
        "--ic", "zero", "--elements", "8", "--t-final", "1", "--snapshots", "1",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn nonconvergence_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = bofem(&[
        "--elements", "32", "--dt", "40", "--max-iterations", "3", "--t-final", "80",
        "--snapshots", "80", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

fn small_table_spec() -> RunSpec {
    RunSpec {
        t_final: 5.0,
        snapshots: vec![5.0],
        ..RunSpec::default()
    }
}

#[test]
fn table_with_two_counts_has_one_rate() {
    let rows = table_rows(&small_table_spec(), &[32, 64], |_, _| {}).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].rate.is_none());
    let (e1, e2) = (rows[0].result.clone().unwrap().0, rows[1].result.clone().unwrap().0);
    let rate = rows[1].rate.unwrap();
    assert!((rate - (e1.ln() - e2.ln()) / (64f64.ln() - 32f64.ln())).abs() < 1e-12);
}

#[test]
fn table_with_one_count_has_no_rate() {
    let rows = table_rows(&small_table_spec(), &[32], |_, _| {}).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].rate.is_none());
}

#[test]
fn table_failures_become_error_rows() {
    let spec = RunSpec {
        dt: Some(40.0),
        max_iterations: 3,
        t_final: 80.0,
        snapshots: vec![80.0],
        ..RunSpec::default()
    };
    let rows: Vec<TableRow> = table_rows(&spec, &[16, 32], |_, _| {}).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.result.is_err() && r.rate.is_none()));

    let dir = tempfile::tempdir().unwrap();
    let o = bofem(&[
        "--table", "16,32", "--dt", "40", "--max-iterations", "3", "--t-final", "80",
        "--snapshots", "80", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let text = fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,N,E,rate,I1,I2,I3");
    assert_eq!(text.lines().filter(|l| l.contains(",error,")).count(), 2);
}

#[test]
fn default_run_reaches_t90_with_sane_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bofem(&["--t-final", "90", "--snapshots", "0,90", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("diagnostics.csv"));
    let e: f64 = rows[1][7].parse().unwrap();
    let iters: f64 = rows[1][8].parse().unwrap();
    assert!(e > 0.0 && e < 0.2, "E = {e}");
    assert!((2.0..=10.0).contains(&iters), "{iters}");
}

fn arb_spec() -> impl Strategy<Value = RunSpec> {
    (
        ((2usize..500).prop_map(|k| 2 * k),
        1.0f64..1e3),
        prop_oneof![Just(WeightKind::Affine), Just(WeightKind::Unit)],
        0.0f64..1e4,
        1e-3f64..2.0,
        proptest::option::of(1e-4f64..1.0),
        1e-2f64..1e3,
        proptest::collection::vec(0.0f64..1.0, 0..5),
        prop_oneof![Just(IcKind::TwoSoliton), Just(IcKind::SingleSoliton), Just(IcKind::Zero)],
        (1e-2f64..2.0, 1e-2f64..2.0, -1e2f64..1e2, -1e2f64..1e2),
        "[a-z][a-z0-9_/.-]{0,20}",
        (1usize..10_000, any::<u64>(), 1usize..100, 1usize..=16, 1e-5f64..1.0),
        proptest::collection::vec((2usize..2000).prop_map(|k| 2 * k), 0..4),
    )
        .prop_map(
            |((elements, half_width), weight, extra, dt_factor, dt, t_final, fracs, ic, sol, out, misc, table)| {
                let (c1, c2, d1, d2) = sol;
                RunSpec {
                    half_width,
                    elements,
                    weight,
                    weight_offset: half_width + 1.0 + extra,
                    dt_factor,
                    dt,
                    t_final,
                    snapshots: fracs.iter().map(|f| f * t_final).collect(),
                    ic,
                    soliton: bofem::reference::TwoSolitonParams {
                        c1,
                        c2: if c2 == c1 { c1 + 0.5 } else { c2 },
                        d1,
                        d2,
                    },
                    speed: c1,
                    out: out.into(),
                    finest_intervals: misc.0,
                    seed: misc.1,
                    max_iterations: misc.2,
                    pv_points: misc.3,
                    stop_factor: misc.4,
                    table,
                }
            },
        )
}

proptest! {
    #[test]
    fn emit_then_parse_round_trips(spec in arb_spec()) {
        prop_assert!(spec.validate().is_ok());
        let back = RunSpec::from_text(&spec.emit()).unwrap();
        prop_assert_eq!(back, spec);
    }
}

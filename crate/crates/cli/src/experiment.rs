//! Experiment drivers and their output files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use bofem::assembly::{AssemblyConfig, WeightFn};
use bofem::mesh::{eval_fem, FemCoeffs, UniformMesh};
use bofem::reference::{
    conserved, conv_rate, relative_error, single_soliton, two_soliton_exact, DiagnosticsRow,
};
use bofem::stepper::{run_observed, DtRule, SchemeConfig, StepDiagnostics, Trajectory};

use crate::error::CliError;
use crate::spec::{IcKind, RunSpec, WeightKind};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const PLOT_FILE: &str = "plot.gp";
pub const TABLE_FILE: &str = "table.csv";

/// Decimal format used for every float in the outputs (13 significant digits).
pub fn fmt_float(v: f64) -> String {
    format!("{v:.12e}")
}

/// The profile and diagnostics at one output time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub coeffs: FemCoeffs,
    pub row: DiagnosticsRow,
}

/// Result of one simulated run.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub mesh: UniformMesh,
    pub dt: f64,
    pub steps: usize,
    /// `t = 0` first, then the spec's output times.
    pub snapshots: Vec<Snapshot>,
}

pub fn weight_fn(spec: &RunSpec) -> WeightFn {
    match spec.weight {
        WeightKind::Affine => WeightFn::affine(spec.weight_offset),
        WeightKind::Unit => WeightFn::unit(),
    }
}

pub fn scheme_config(spec: &RunSpec) -> SchemeConfig {
    SchemeConfig {
        dt_rule: match spec.dt {
            Some(dt) => DtRule::Explicit(dt),
            None => DtRule::MaxNormScaled {
                factor: spec.dt_factor,
            },
        },
        stop_factor: spec.stop_factor,
        max_iterations: spec.max_iterations,
        assembly: AssemblyConfig {
            pv_points: spec.pv_points,
            ..AssemblyConfig::default()
        },
        ..SchemeConfig::default()
    }
}

/// The exact solution `u(x, t)` for the selected initial data, if it is
/// non-trivial.
pub fn exact_solution(spec: &RunSpec) -> Option<Box<dyn Fn(f64, f64) -> f64 + Sync>> {
    match spec.ic {
        IcKind::TwoSoliton => {
            let p = spec.soliton;
            Some(Box::new(move |x, t| two_soliton_exact(x, t, &p)))
        }
        IcKind::SingleSoliton => {
            let c = spec.speed;
            Some(Box::new(move |x, t| single_soliton(x, t, c)))
        }
        IcKind::Zero => None,
    }
}

fn mean_iterations(traj: &Trajectory, t: f64) -> f64 {
    // steps that start before t
    let k = ((t / traj.dt).ceil() as usize).min(traj.diagnostics.len());
    if k == 0 {
        return 0.0;
    }
    traj.diagnostics[..k].iter().map(|d| d.iterations as f64).sum::<f64>() / k as f64
}

/// Runs the solver for `spec` and evaluates the diagnostics at `t = 0` and at
/// every output time.
pub fn simulate<O>(spec: &RunSpec, observer: O) -> Result<Simulation, CliError>
where
    O: FnMut(usize, f64, &StepDiagnostics),
{
    spec.validate()?;
    let mesh = UniformMesh::new(spec.half_width, spec.elements)?;
    let exact = exact_solution(spec);
    let u0 = |x: f64| exact.as_ref().map_or(0.0, |u| u(x, 0.0));
    let t_end = spec.output_times().into_iter().fold(spec.t_final, f64::max);
    let traj = run_observed(&mesh, weight_fn(spec), scheme_config(spec), u0, t_end, observer)?;

    let q0 = conserved(&mesh, &traj.states[0]);
    let mut snapshots = Vec::new();
    for t in std::iter::once(0.0).chain(spec.output_times()) {
        let coeffs = traj.interpolant_at(t)?;
        let q = conserved(&mesh, &coeffs);
        let e = match &exact {
            Some(u) => Some(relative_error(&mesh, &coeffs, |x| u(x, t), spec.finest_dx())?),
            None => None,
        };
        let row = DiagnosticsRow::new(t, q, &q0, e, mean_iterations(&traj, t));
        snapshots.push(Snapshot { t, coeffs, row });
    }
    Ok(Simulation {
        mesh,
        dt: traj.dt,
        steps: traj.num_steps(),
        snapshots,
    })
}

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}

pub fn trajectory_csv(sim: &Simulation) -> String {
    let mut s = String::from("t,x,u\n");
    for snap in &sim.snapshots {
        for j in 0..=sim.mesh.num_elements() {
            let x = sim.mesh.node(j);
            let u = eval_fem(&sim.mesh, &snap.coeffs, x);
            let _ = writeln!(s, "{},{},{}", fmt_float(snap.t), fmt_float(x), fmt_float(u));
        }
    }
    s
}

pub fn diagnostics_csv(sim: &Simulation) -> String {
    let mut s = String::from("t,Q1,Q2,Q3,I1,I2,I3,E,mean_iterations\n");
    for snap in &sim.snapshots {
        let r = &snap.row;
        let cols = [
            fmt_float(r.t),
            fmt_float(r.q.q1),
            fmt_float(r.q.q2),
            fmt_float(r.q.q3),
            fmt_float(r.i[0]),
            fmt_float(r.i[1]),
            fmt_float(r.i[2]),
            r.e.map_or(String::new(), fmt_float),
            fmt_float(r.mean_iterations),
        ];
        let _ = writeln!(s, "{}", cols.join(","));
    }
    s
}

fn gnuplot_exact(spec: &RunSpec) -> String {
    match spec.ic {
        IcKind::TwoSoliton => {
            let p = spec.soliton;
            format!(
                "c1 = {}\nc2 = {}\nd1 = {}\nd2 = {}\n\
                 l1(x, t) = x - c1*t - d1\n\
                 l2(x, t) = x - c2*t - d2\n\
                 g = (c1 - c2)**2\n\
                 num(x, t) = 4*c1*c2*(c1*l1(x,t)**2 + c2*l2(x,t)**2 + (c1 + c2)**3/(c1*c2*g))\n\
                 den(x, t) = (c1*c2*l1(x,t)*l2(x,t) - (c1 + c2)**2/g)**2 + (c1*l1(x,t) + c2*l2(x,t))**2\n\
                 exact(x, t) = num(x, t)/den(x, t)\n",
                fmt_float(p.c1),
                fmt_float(p.c2),
                fmt_float(p.d1),
                fmt_float(p.d2)
            )
        }
        IcKind::SingleSoliton => format!(
            "c = {}\nexact(x, t) = 4*c/(1 + (c*(x - c*t))**2)\n",
            fmt_float(spec.speed)
        ),
        IcKind::Zero => "exact(x, t) = 0\n".to_string(),
    }
}

/// A gnuplot script overlaying the numerical and exact profiles.
pub fn plot_script(spec: &RunSpec, sim: &Simulation) -> String {
    let mut s = String::new();
    s.push_str("# Numerical (solid) and exact (dashed) profiles at the snapshot times.\n");
    s.push_str("# Usage: gnuplot -e \"outfile='profiles.png'\" plot.gp\n");
    s.push_str("if (!exists(\"outfile\")) outfile = 'profiles.png'\n");
    s.push_str("set terminal pngcairo size 1000,600\nset output outfile\n");
    s.push_str("set datafile separator ','\nset key top left\nset xlabel 'x'\nset ylabel 'u'\n");
    let _ = writeln!(
        s,
        "set xrange [{}:{}]\nset samples 4000",
        fmt_float(-sim.mesh.half_width()),
        fmt_float(sim.mesh.half_width())
    );
    s.push_str(&gnuplot_exact(spec));
    s.push_str("at(t, v) = (abs($1 - t) <= 1e-9*(1 + abs(t))) ? v : 1/0\n");
    let clauses: Vec<String> = sim
        .snapshots
        .iter()
        .enumerate()
        .flat_map(|(k, snap)| {
            let t = fmt_float(snap.t);
            let lt = k + 1;
            [
                format!(
                    "'{TRAJECTORY_FILE}' using 2:(at({t}, $3)) with lines lt {lt} lw 2 title sprintf('numerical t = %g', {t})"
                ),
                format!("exact(x, {t}) with lines lt {lt} dt 2 title sprintf('exact t = %g', {t})"),
            ]
        })
        .collect();
    let _ = writeln!(s, "plot {}", clauses.join(", \\\n     "));
    s
}

/// Runs one experiment and writes the trajectory, diagnostics and plot files
/// into `spec.out`.
pub fn run_experiment<O>(spec: &RunSpec, observer: O) -> Result<(Simulation, Vec<PathBuf>), CliError>
where
    O: FnMut(usize, f64, &StepDiagnostics),
{
    let sim = simulate(spec, observer)?;
    fs::create_dir_all(&spec.out).map_err(|e| CliError::io(&spec.out, e))?;
    let files = [
        (TRAJECTORY_FILE, trajectory_csv(&sim)),
        (DIAGNOSTICS_FILE, diagnostics_csv(&sim)),
        (PLOT_FILE, plot_script(spec, &sim)),
    ];
    let mut paths = Vec::new();
    for (name, contents) in files {
        let path = spec.out.join(name);
        write_atomic(&path, &contents)?;
        paths.push(path);
    }
    Ok((sim, paths))
}

/// One line of `table.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub t: f64,
    pub elements: usize,
    /// `E`, `I1`, `I2`, `I3`, or the error that stopped the run.
    pub result: Result<(f64, [f64; 3]), String>,
    pub rate: Option<f64>,
}

/// Runs the experiment for each element count and collects `E` and the
/// relative changes at every output time (`t_final` if there are none).
/// Failed runs become error rows; the others still run.
pub fn table_rows<P>(spec: &RunSpec, counts: &[usize], mut progress: P) -> Result<Vec<TableRow>, CliError>
where
    P: FnMut(usize, &Result<Simulation, CliError>),
{
    spec.validate()?;
    if counts.is_empty() {
        return Err(CliError::invalid("table", "needs at least one element count"));
    }
    let mut times = spec.output_times();
    if times.is_empty() {
        times.push(spec.t_final);
    }
    let runs: Vec<(usize, Result<Simulation, String>)> = counts
        .iter()
        .map(|&n| {
            let mut s = spec.clone();
            s.elements = n;
            s.snapshots = times.clone();
            s.table = Vec::new();
            let result = simulate(&s, |_, _, _| {});
            progress(n, &result);
            (n, result.map_err(|e| e.to_string()))
        })
        .collect();

    let mut rows = Vec::new();
    for &t in &times {
        let mut prev: Option<(usize, f64)> = None;
        for (n, run) in &runs {
            let result = match run {
                Ok(sim) => {
                    let snap = sim
                        .snapshots
                        .iter()
                        .find(|s| s.t == t)
                        .expect("every output time has a snapshot");
                    match snap.row.e {
                        Some(e) => Ok((e, snap.row.i)),
                        None => Err("no exact solution for this initial condition".to_string()),
                    }
                }
                Err(msg) => Err(msg.clone()),
            };
            let rate = match (&result, prev) {
                (Ok((e, _)), Some((pn, pe))) => conv_rate(pe, pn as f64, *e, *n as f64).ok(),
                _ => None,
            };
            prev = result.as_ref().ok().map(|(e, _)| (*n, *e));
            rows.push(TableRow {
                t,
                elements: *n,
                result,
                rate,
            });
        }
    }
    Ok(rows)
}

pub fn table_csv(rows: &[TableRow]) -> String {
    let mut s = String::from("t,N,E,rate,I1,I2,I3\n");
    for r in rows {
        let rate = r.rate.map_or(String::new(), fmt_float);
        let _ = match &r.result {
            Ok((e, i)) => writeln!(
                s,
                "{},{},{},{},{},{},{}",
                fmt_float(r.t),
                r.elements,
                fmt_float(*e),
                rate,
                fmt_float(i[0]),
                fmt_float(i[1]),
                fmt_float(i[2])
            ),
            Err(_) => writeln!(s, "{},{},error,,,,", fmt_float(r.t), r.elements),
        };
    }
    s
}

/// Runs the table and writes `table.csv` into `spec.out`.
pub fn table_driver<P>(spec: &RunSpec, counts: &[usize], progress: P) -> Result<(Vec<TableRow>, PathBuf), CliError>
where
    P: FnMut(usize, &Result<Simulation, CliError>),
{
    let rows = table_rows(spec, counts, progress)?;
    fs::create_dir_all(&spec.out).map_err(|e| CliError::io(&spec.out, e))?;
    let path = spec.out.join(TABLE_FILE);
    write_atomic(&path, &table_csv(&rows))?;
    Ok((rows, path))
}

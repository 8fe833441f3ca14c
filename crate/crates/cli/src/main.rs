use std::process::ExitCode;

use clap::Parser;

use bofem_cli::args::Args;
use bofem_cli::error::{CliError, EXIT_SOLVER};
use bofem_cli::experiment::{fmt_float, run_experiment, table_driver};
use bofem_cli::RunSpec;

fn run(spec: &RunSpec) -> Result<i32, CliError> {
    if !spec.table.is_empty() {
        let (rows, path) = table_driver(spec, &spec.table, |n, result| match result {
            Ok(sim) => eprintln!("N = {n}: {} steps, dt = {}", sim.steps, fmt_float(sim.dt)),
            Err(e) => eprintln!("N = {n}: failed: {e}"),
        })?;
        println!("wrote {}", path.display());
        let failed = rows.iter().filter(|r| r.result.is_err()).count();
        return Ok(if failed > 0 { EXIT_SOLVER } else { 0 });
    }

    let report_every = 100;
    let (sim, paths) = run_experiment(spec, |n, t, diag| {
        if (n + 1) % report_every == 0 {
            eprintln!("step {:>6}  t = {t:.4}  iterations = {}", n + 1, diag.iterations);
        }
    })?;
    println!(
        "N = {}, dt = {}, {} steps",
        sim.mesh.num_elements(),
        fmt_float(sim.dt),
        sim.steps
    );
    for snap in &sim.snapshots {
        let r = &snap.row;
        let e = r.e.map_or("-".to_string(), |e| format!("{e:.5}"));
        println!(
            "t = {:>8.3}  E = {e}  I1 = {:+.3e}  I2 = {:+.3e}  I3 = {:+.3e}  mean iterations = {:.2}",
            r.t, r.i[0], r.i[1], r.i[2], r.mean_iterations
        );
    }
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(0)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = args.resolve().and_then(|spec| {
        if args.print_config {
            print!("{}", spec.emit());
            Ok(0)
        } else {
            run(&spec)
        }
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

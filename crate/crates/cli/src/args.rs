//! Command-line flags. Every value flag is routed through [`RunSpec::apply`]
//! so flags and config files share parsing and error messages.

use std::path::PathBuf;

use clap::Parser;

use crate::error::CliError;
use crate::spec::RunSpec;

#[derive(Debug, Parser, Default)]
#[command(
    name = "bofem",
    version,
    about = "Crank-Nicolson Galerkin solver for the Benjamin-Ono equation",
    after_help = "Exit codes: 0 success, 2 usage error, 3 solver failure, 4 I/O error."
)]
pub struct Args {
    /// Read `key = value` settings from this file; flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Number of elements N (even).
    #[arg(long, value_name = "N")]
    pub elements: Option<String>,
    /// Half-width X of the domain [-X, X].
    #[arg(long, value_name = "X")]
    pub half_width: Option<String>,
    #[arg(long, value_name = "T")]
    pub t_final: Option<String>,
    /// Comma-separated output times in [0, t-final].
    #[arg(long, value_name = "T,..", allow_hyphen_values = true)]
    pub snapshots: Option<String>,
    /// dt = factor * dx / max|u0|.
    #[arg(long, value_name = "F")]
    pub dt_factor: Option<String>,
    /// Fixed time step; overrides --dt-factor.
    #[arg(long, value_name = "DT")]
    pub dt: Option<String>,
    /// affine (offset + x) or unit.
    #[arg(long, value_name = "KIND")]
    pub weight: Option<String>,
    #[arg(long, value_name = "A", allow_hyphen_values = true)]
    pub weight_offset: Option<String>,
    /// two-soliton, single-soliton or zero.
    #[arg(long, value_name = "KIND")]
    pub ic: Option<String>,
    #[arg(long, value_name = "C")]
    pub c1: Option<String>,
    #[arg(long, value_name = "C")]
    pub c2: Option<String>,
    #[arg(long, value_name = "D", allow_hyphen_values = true)]
    pub d1: Option<String>,
    #[arg(long, value_name = "D", allow_hyphen_values = true)]
    pub d2: Option<String>,
    /// Speed of the single soliton.
    #[arg(long, value_name = "C")]
    pub speed: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<String>,
    /// Intervals of the grid on which E is measured.
    #[arg(long, value_name = "M")]
    pub finest_intervals: Option<String>,
    #[arg(long, value_name = "S")]
    pub seed: Option<String>,
    #[arg(long, value_name = "K")]
    pub max_iterations: Option<String>,
    /// Gauss points per panel in the principal-value integral.
    #[arg(long, value_name = "P")]
    pub pv_points: Option<String>,
    #[arg(long, value_name = "F")]
    pub stop_factor: Option<String>,
    /// Run the two-soliton table for these element counts (comma-separated).
    #[arg(long, value_name = "N,..")]
    pub table: Option<String>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    pub print_config: bool,
}

impl Args {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let pairs = [
            ("elements", &self.elements),
            ("half-width", &self.half_width),
            ("t-final", &self.t_final),
            ("snapshots", &self.snapshots),
            ("dt-factor", &self.dt_factor),
            ("dt", &self.dt),
            ("weight", &self.weight),
            ("weight-offset", &self.weight_offset),
            ("ic", &self.ic),
            ("c1", &self.c1),
            ("c2", &self.c2),
            ("d1", &self.d1),
            ("d2", &self.d2),
            ("speed", &self.speed),
            ("out", &self.out),
            ("finest-intervals", &self.finest_intervals),
            ("seed", &self.seed),
            ("max-iterations", &self.max_iterations),
            ("pv-points", &self.pv_points),
            ("stop-factor", &self.stop_factor),
            ("table", &self.table),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }

    /// Defaults, then the config file, then flags; validated.
    pub fn resolve(&self) -> Result<RunSpec, CliError> {
        let mut spec = RunSpec::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            spec.apply_text(&text)?;
        }
        for (key, value) in self.overrides() {
            spec.apply(key, value)?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

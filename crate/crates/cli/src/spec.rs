//! Run configuration: defaults, `key = value` files, and flag overrides.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use bofem::reference::TwoSolitonParams;

use crate::error::CliError;

/// Initial data selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcKind {
    TwoSoliton,
    SingleSoliton,
    Zero,
}

impl IcKind {
    pub fn name(self) -> &'static str {
        match self {
            IcKind::TwoSoliton => "two-soliton",
            IcKind::SingleSoliton => "single-soliton",
            IcKind::Zero => "zero",
        }
    }
}

impl FromStr for IcKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "two-soliton" => Ok(IcKind::TwoSoliton),
            "single-soliton" => Ok(IcKind::SingleSoliton),
            "zero" => Ok(IcKind::Zero),
            other => Err(format!(
                "expected one of two-soliton, single-soliton, zero; got `{other}`"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// `phi(x) = offset + x`.
    Affine,
    Unit,
}

impl WeightKind {
    pub fn name(self) -> &'static str {
        match self {
            WeightKind::Affine => "affine",
            WeightKind::Unit => "unit",
        }
    }
}

impl FromStr for WeightKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "affine" => Ok(WeightKind::Affine),
            "unit" => Ok(WeightKind::Unit),
            other => Err(format!("expected affine or unit; got `{other}`")),
        }
    }
}

/// Everything needed to reproduce one run (or one table).
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub half_width: f64,
    pub elements: usize,
    pub weight: WeightKind,
    pub weight_offset: f64,
    /// `dt = dt_factor * dx / max |u0|` unless `dt` is set.
    pub dt_factor: f64,
    pub dt: Option<f64>,
    pub t_final: f64,
    pub snapshots: Vec<f64>,
    pub ic: IcKind,
    pub soliton: TwoSolitonParams,
    /// Speed of the single soliton.
    pub speed: f64,
    pub out: PathBuf,
    /// The error grid splits `[-X, X]` into this many intervals.
    pub finest_intervals: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub pv_points: usize,
    pub stop_factor: f64,
    /// Element counts for a table run; empty for a single run.
    pub table: Vec<usize>,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            half_width: 100.0,
            elements: 256,
            weight: WeightKind::Affine,
            weight_offset: 120.0,
            dt_factor: 0.5,
            dt: None,
            t_final: 180.0,
            snapshots: vec![0.0, 90.0, 180.0],
            ic: IcKind::TwoSoliton,
            soliton: TwoSolitonParams::TABLE,
            speed: 0.5,
            out: PathBuf::from("bofem-out"),
            finest_intervals: 4096,
            seed: 0,
            max_iterations: 50,
            pv_points: 7,
            stop_factor: 0.002,
            table: Vec::new(),
        }
    }
}

/// Keys accepted in config files; each is also a `--flag`.
pub const KEYS: &[&str] = &[
    "elements",
    "half-width",
    "t-final",
    "snapshots",
    "dt-factor",
    "dt",
    "weight",
    "weight-offset",
    "ic",
    "c1",
    "c2",
    "d1",
    "d2",
    "speed",
    "out",
    "finest-intervals",
    "seed",
    "max-iterations",
    "pv-points",
    "stop-factor",
    "table",
];

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| CliError::invalid(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl RunSpec {
    /// Sets one key from its textual value.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        match key {
            "elements" => self.elements = parse_num(key, v)?,
            "half-width" => self.half_width = parse_num(key, v)?,
            "t-final" => self.t_final = parse_num(key, v)?,
            "snapshots" => self.snapshots = parse_list(key, v)?,
            "dt-factor" => self.dt_factor = parse_num(key, v)?,
            "dt" => self.dt = if v.is_empty() { None } else { Some(parse_num(key, v)?) },
            "weight" => self.weight = v.parse().map_err(|e| CliError::invalid(key, e))?,
            "weight-offset" => self.weight_offset = parse_num(key, v)?,
            "ic" => self.ic = v.parse().map_err(|e| CliError::invalid(key, e))?,
            "c1" => self.soliton.c1 = parse_num(key, v)?,
            "c2" => self.soliton.c2 = parse_num(key, v)?,
            "d1" => self.soliton.d1 = parse_num(key, v)?,
            "d2" => self.soliton.d2 = parse_num(key, v)?,
            "speed" => self.speed = parse_num(key, v)?,
            "out" => {
                if v.is_empty() {
                    return Err(CliError::invalid(key, "output directory must not be empty"));
                }
                self.out = PathBuf::from(v)
            }
            "finest-intervals" => self.finest_intervals = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "max-iterations" => self.max_iterations = parse_num(key, v)?,
            "pv-points" => self.pv_points = parse_num(key, v)?,
            "stop-factor" => self.stop_factor = parse_num(key, v)?,
            "table" => self.table = parse_list(key, v)?,
            other => return Err(CliError::Usage(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a line-oriented `key = value` text. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("line {}: expected `key = value`, got `{raw}`", lineno + 1))
            })?;
            self.apply(key.trim(), value)?;
        }
        Ok(())
    }

    /// Parses a config text on top of the defaults and validates the result.
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut spec = Self::default();
        spec.apply_text(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// The config text that reproduces this spec.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("elements", self.elements.to_string());
        line("half-width", self.half_width.to_string());
        line("t-final", self.t_final.to_string());
        line("snapshots", join(&self.snapshots));
        line("dt-factor", self.dt_factor.to_string());
        line("dt", self.dt.map_or(String::new(), |d| d.to_string()));
        line("weight", self.weight.name().to_string());
        line("weight-offset", self.weight_offset.to_string());
        line("ic", self.ic.name().to_string());
        line("c1", self.soliton.c1.to_string());
        line("c2", self.soliton.c2.to_string());
        line("d1", self.soliton.d1.to_string());
        line("d2", self.soliton.d2.to_string());
        line("speed", self.speed.to_string());
        line("out", self.out.display().to_string());
        line("finest-intervals", self.finest_intervals.to_string());
        line("seed", self.seed.to_string());
        line("max-iterations", self.max_iterations.to_string());
        line("pv-points", self.pv_points.to_string());
        line("stop-factor", self.stop_factor.to_string());
        line("table", join(&self.table));
        s
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.elements as f64
    }

    pub fn finest_dx(&self) -> f64 {
        2.0 * self.half_width / self.finest_intervals as f64
    }

    /// Non-zero snapshot times in the given order, duplicates removed.
    pub fn output_times(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &t in &self.snapshots {
            if t != 0.0 && !out.contains(&t) {
                out.push(t);
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::invalid(key, format!("must be positive and finite, got {v}")))
            }
        };
        let even = |key: &str, n: usize| {
            if n >= 4 && n.is_multiple_of(2) {
                Ok(())
            } else {
                Err(CliError::invalid(key, format!("element count must be even and >= 4, got {n}")))
            }
        };
        positive("half-width", self.half_width)?;
        even("elements", self.elements)?;
        for &n in &self.table {
            even("table", n)?;
        }
        positive("dt-factor", self.dt_factor)?;
        if let Some(dt) = self.dt {
            positive("dt", dt)?;
        }
        positive("t-final", self.t_final)?;
        for &t in &self.snapshots {
            if !(t >= 0.0 && t <= self.t_final) {
                return Err(CliError::invalid(
                    "snapshots",
                    format!("time {t} outside [0, {}]", self.t_final),
                ));
            }
        }
        if !self.weight_offset.is_finite() {
            return Err(CliError::invalid("weight-offset", "must be finite"));
        }
        if self.weight == WeightKind::Affine && self.weight_offset - self.half_width < 1.0 {
            return Err(CliError::invalid(
                "weight-offset",
                format!(
                    "weight offset + x must be >= 1 on the domain; offset {} on half-width {} gives {}",
                    self.weight_offset,
                    self.half_width,
                    self.weight_offset - self.half_width
                ),
            ));
        }
        match self.ic {
            IcKind::TwoSoliton => {
                let p = self.soliton;
                let key = if p.c1 == p.c2 || !(p.c1 > 0.0) { "c1" } else { "c2" };
                p.validate().map_err(|e| CliError::invalid(key, e.to_string()))?;
            }
            IcKind::SingleSoliton => positive("speed", self.speed)?,
            IcKind::Zero => {}
        }
        if self.finest_intervals == 0 {
            return Err(CliError::invalid("finest-intervals", "must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(CliError::invalid("max-iterations", "must be at least 1"));
        }
        if !(1..=bofem::quadrature::MAX_POINTS).contains(&self.pv_points) {
            return Err(CliError::invalid(
                "pv-points",
                format!("must lie in 1..={}, got {}", bofem::quadrature::MAX_POINTS, self.pv_points),
            ));
        }
        positive("stop-factor", self.stop_factor)?;
        let out = self.out.to_string_lossy();
        if out.trim().is_empty() || out.trim() != out || out.contains(['#', '\n', '\r']) {
            return Err(CliError::invalid(
                "out",
                "path must be non-empty, without surrounding spaces, `#` or line breaks",
            ));
        }
        Ok(())
    }
}

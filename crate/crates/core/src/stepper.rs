//! Crank-Nicolson time stepping.
//!
//! Each step solves
//!
//! ```text
//! <u^{n+1}, phi v> - dt <(u^{n+1/2})^2 / 2, (phi v)_x> + dt <H (u^{n+1/2})_x, (phi v)_x> = <u^n, phi v>
//! ```
//!
//! by the fixed-point iteration `A w^{l+1} = (M - dt/2 B) u^n + dt n((w^l + u^n)/2)`
//! with `A = M + dt/2 B`, starting from `w^0 = u^n`. `A` does not change between
//! iterations or steps, so it is factorized once.

use crate::assembly::{AssemblyConfig, Assembler, WeightFn};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, LuSolver};
use crate::mesh::{eval_fem, FemCoeffs, UniformMesh};

/// Sampling density used to estimate `max |u^0|` for the time-step rule.
pub const MAX_NORM_SAMPLES_PER_ELEMENT: usize = 16;

/// How the time step is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    /// A fixed time step.
    Explicit(f64),
    /// `dt = factor * dx / max |u^0|`.
    MaxNormScaled { factor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub dt_rule: DtRule,
    /// Iteration stops once `||w^{l+1} - w^l||_{L2} <= stop_factor * dx * ||u^n||_{L2}`.
    pub stop_factor: f64,
    pub max_iterations: usize,
    /// Contraction constant `L` in (0, 1).
    pub contraction_l: f64,
    /// Inverse-inequality constant `C_2`.
    pub inverse_const_c2: f64,
    pub assembly: AssemblyConfig,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            dt_rule: DtRule::MaxNormScaled { factor: 0.5 },
            stop_factor: 0.002,
            max_iterations: 50,
            contraction_l: 0.5,
            inverse_const_c2: 1.0,
            assembly: AssemblyConfig::default(),
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        match self.dt_rule {
            DtRule::Explicit(dt) if !(dt >= 0.0 && dt.is_finite()) => {
                return Err(Error::Config(format!("time step must be non-negative, got {dt}")))
            }
            DtRule::MaxNormScaled { factor } if !(factor > 0.0 && factor.is_finite()) => {
                return Err(Error::Config(format!("time-step factor must be positive, got {factor}")))
            }
            _ => {}
        }
        if !(self.contraction_l > 0.0 && self.contraction_l < 1.0) {
            return Err(Error::Config(format!(
                "contraction constant must lie in (0, 1), got {}",
                self.contraction_l
            )));
        }
        if !(self.stop_factor > 0.0) {
            return Err(Error::Config(format!(
                "stop factor must be positive, got {}",
                self.stop_factor
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max iterations must be at least 1".into()));
        }
        if !(self.inverse_const_c2 > 0.0) {
            return Err(Error::Config(format!(
                "inverse-inequality constant must be positive, got {}",
                self.inverse_const_c2
            )));
        }
        Ok(())
    }

    /// Per-step growth bound `K = (7 - L) / (1 - L)`.
    pub fn growth_bound(&self) -> f64 {
        (7.0 - self.contraction_l) / (1.0 - self.contraction_l)
    }

    /// Resolves the time step for initial coefficients `u0`.
    pub fn resolve_dt(&self, mesh: &UniformMesh, u0: &FemCoeffs) -> Result<f64> {
        match self.dt_rule {
            DtRule::Explicit(dt) => Ok(dt),
            DtRule::MaxNormScaled { factor } => {
                let m = sampled_max_abs(mesh, u0, MAX_NORM_SAMPLES_PER_ELEMENT);
                if m > 0.0 {
                    Ok(factor * mesh.dx() / m)
                } else {
                    // Zero data: any step works; fall back to the factor times dx.
                    Ok(factor * mesh.dx())
                }
            }
        }
    }
}

/// `max |u|` over `per_element` equispaced samples in each element.
pub fn sampled_max_abs(mesh: &UniformMesh, u: &FemCoeffs, per_element: usize) -> f64 {
    let h = mesh.dx() / per_element as f64;
    (0..mesh.num_elements() * per_element)
        .map(|k| eval_fem(mesh, u, mesh.node(0) + k as f64 * h).abs())
        .fold(0.0, f64::max)
}

/// Largest time step allowed by the contraction condition
/// `dt / dx^{3/2} <= L / (2 sqrt(2) sqrt(C_2) K ||u||_{2,phi})`.
pub fn cfl_max_dt(mesh: &UniformMesh, norm_u_weighted: f64, config: &SchemeConfig) -> Result<f64> {
    if !(norm_u_weighted > 0.0) {
        return Err(Error::Domain(format!(
            "weighted norm must be positive, got {norm_u_weighted}"
        )));
    }
    let l = config.contraction_l;
    let k = config.growth_bound();
    let lambda = l / (2.0 * 2f64.sqrt() * config.inverse_const_c2.sqrt() * k * norm_u_weighted);
    Ok(lambda * mesh.dx().powf(1.5))
}

/// What happened inside one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    /// Number of linear solves.
    pub iterations: usize,
    /// `||w^{l+1} - w^l||_{L2}` at termination.
    pub final_increment: f64,
    /// Ratios of successive increments in the weighted norm.
    pub contraction_ratios: Vec<f64>,
    /// `||w^1||_{2,phi} / ||u^n||_{2,phi}` (zero when `u^n = 0`).
    pub first_iterate_growth: f64,
    /// `||u^{n+1}||_{2,phi} / ||u^n||_{2,phi}` (zero when `u^n = 0`).
    pub growth: f64,
}

/// A factorized Crank-Nicolson operator for one mesh, weight and time step.
#[derive(Debug)]
pub struct Stepper {
    assembler: Assembler,
    config: SchemeConfig,
    dt: f64,
    mass: DenseMatrix,
    dispersion: DenseMatrix,
    explicit_op: DenseMatrix,
    lu: LuSolver,
}

impl Stepper {
    /// Assembles the matrices and factorizes `M + dt/2 B`.
    pub fn new(mesh: &UniformMesh, weight: WeightFn, config: SchemeConfig, dt: f64) -> Result<Self> {
        config.validate()?;
        let assembler = Assembler::with_config(mesh, weight, config.assembly)?;
        let mass = assembler.weighted_mass();
        let dispersion = assembler.dispersion_matrix();
        Self::from_parts(assembler, mass, dispersion, config, dt)
    }

    /// Builds a stepper from already assembled matrices.
    pub fn from_parts(
        assembler: Assembler,
        mass: DenseMatrix,
        dispersion: DenseMatrix,
        config: SchemeConfig,
        dt: f64,
    ) -> Result<Self> {
        config.validate()?;
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time step must be non-negative, got {dt}")));
        }
        let lhs = mass.add_scaled(&dispersion, 0.5 * dt);
        let lu = LuSolver::new(&lhs)?;
        let explicit_op = mass.add_scaled(&dispersion, -0.5 * dt);
        Ok(Self {
            assembler,
            config,
            dt,
            mass,
            dispersion,
            explicit_op,
            lu,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn mesh(&self) -> &UniformMesh {
        self.assembler.mesh()
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn assembler(&self) -> &Assembler {
        &self.assembler
    }

    pub fn mass(&self) -> &DenseMatrix {
        &self.mass
    }

    pub fn dispersion(&self) -> &DenseMatrix {
        &self.dispersion
    }

    /// Solves `(M + dt/2 B) x = rhs` with the stored factorization.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.lu.solve(rhs)
    }

    /// The left-hand operator `M + dt/2 B`.
    pub fn lhs(&self) -> DenseMatrix {
        self.mass.add_scaled(&self.dispersion, 0.5 * self.dt)
    }

    /// Defect of the Crank-Nicolson equations, tested against every basis
    /// function: `M (u1 - u0) - dt n((u0 + u1)/2) + dt B (u0 + u1)/2`.
    pub fn residual(&self, u0: &FemCoeffs, u1: &FemCoeffs) -> Vec<f64> {
        let half = u0.midpoint(u1);
        let m = self.mass.matvec(u1.sub(u0).as_slice());
        let b = self.dispersion.matvec(half.as_slice());
        let n = self.assembler.nonlinear_vector(&half);
        m.iter()
            .zip(&b)
            .zip(&n)
            .map(|((m, b), n)| m - self.dt * n + self.dt * b)
            .collect()
    }

    /// Advances one time step.
    pub fn step(&self, u: &FemCoeffs) -> Result<(FemCoeffs, StepDiagnostics)> {
        let asm = &self.assembler;
        let mesh = asm.mesh();
        let base = self.explicit_op.matvec(u.as_slice());
        let tol = self.config.stop_factor * mesh.dx() * asm.l2_norm(u);
        let norm_u = asm.weighted_norm(u);
        let ratio = |v: f64| if norm_u > 0.0 { v / norm_u } else { 0.0 };

        let mut w = u.clone();
        let mut ratios = Vec::new();
        let mut prev_weighted_inc: Option<f64> = None;
        let mut first_iterate_growth = 0.0;
        let mut last_increment = f64::INFINITY;
        for iteration in 1..=self.config.max_iterations {
            let half = w.midpoint(u);
            let n = asm.nonlinear_vector(&half);
            let rhs: Vec<f64> = base.iter().zip(&n).map(|(b, n)| b + self.dt * n).collect();
            let next = FemCoeffs::from_vec(mesh, self.lu.solve(&rhs))?;
            let diff = next.sub(&w);
            let increment = asm.l2_norm(&diff);
            let weighted_inc = asm.weighted_norm(&diff);
            if iteration == 1 {
                first_iterate_growth = ratio(asm.weighted_norm(&next));
            }
            if let Some(prev) = prev_weighted_inc {
                if prev > 0.0 {
                    ratios.push(weighted_inc / prev);
                }
            }
            prev_weighted_inc = Some(weighted_inc);
            last_increment = increment;
            w = next;
            if increment <= tol {
                let growth = ratio(asm.weighted_norm(&w));
                return Ok((
                    w,
                    StepDiagnostics {
                        iterations: iteration,
                        final_increment: increment,
                        contraction_ratios: ratios,
                        first_iterate_growth,
                        growth,
                    },
                ));
            }
        }
        Err(Error::NonConvergence {
            step: 0,
            iterations: self.config.max_iterations,
            last_increment,
        })
    }
}

/// Time levels, half-step states and per-step diagnostics of a run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub mesh: UniformMesh,
    pub dt: f64,
    /// `t_n = n dt`, one per state.
    pub times: Vec<f64>,
    /// `u^n`, starting with the projected initial data.
    pub states: Vec<FemCoeffs>,
    /// `u^{n+1/2} = (u^n + u^{n+1}) / 2`.
    pub half_states: Vec<FemCoeffs>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn num_steps(&self) -> usize {
        self.half_states.len()
    }

    /// `t_{n+1/2}`.
    pub fn half_time(&self, n: usize) -> f64 {
        (n as f64 + 0.5) * self.dt
    }

    /// Largest time covered by the interpolant (the last half-step time).
    pub fn last_time(&self) -> f64 {
        match self.num_steps() {
            0 => 0.0,
            k => self.half_time(k - 1),
        }
    }

    /// Coefficients of the time interpolant: linear in `t` through the
    /// half-step states, blending `u^0` and `u^{1/2}` on `[0, t_{1/2})`.
    pub fn interpolant_at(&self, t: f64) -> Result<FemCoeffs> {
        let last = self.last_time();
        if !(t >= 0.0 && t <= last) {
            return Err(Error::Domain(format!(
                "time {t} outside the interpolant range [0, {last}]"
            )));
        }
        if self.num_steps() == 0 {
            return Ok(self.states[0].clone());
        }
        let half_dt = 0.5 * self.dt;
        if t < half_dt {
            return Ok(self.states[0].lerp(&self.half_states[0], t / half_dt));
        }
        // t in [t_{n-1/2}, t_{n+1/2}) with n >= 1
        let n = (((t - half_dt) / self.dt).floor() as usize + 1).min(self.num_steps());
        if n >= self.num_steps() {
            return Ok(self.half_states[self.num_steps() - 1].clone());
        }
        let start = self.half_time(n - 1);
        let theta = (t - start) / self.dt;
        Ok(self.half_states[n - 1].lerp(&self.half_states[n], theta))
    }

    /// Mean fixed-point iteration count over all steps.
    pub fn mean_iterations(&self) -> f64 {
        if self.diagnostics.is_empty() {
            return 0.0;
        }
        self.diagnostics.iter().map(|d| d.iterations as f64).sum::<f64>() / self.diagnostics.len() as f64
    }
}

/// Evaluates the time interpolant at `(x, t)`.
pub fn eval_interpolant(traj: &Trajectory, x: f64, t: f64) -> Result<f64> {
    Ok(eval_fem(&traj.mesh, &traj.interpolant_at(t)?, x))
}

/// Projects `u0`, resolves the time step and advances until the last
/// half-step time reaches `t_final`.
pub fn run<F: Fn(f64) -> f64>(
    mesh: &UniformMesh,
    weight: WeightFn,
    config: SchemeConfig,
    u0: F,
    t_final: f64,
) -> Result<Trajectory> {
    run_observed(mesh, weight, config, u0, t_final, |_, _, _| {})
}

/// [`run`] with a callback after every accepted step (`step index`, `t_{n+1}`, diagnostics).
pub fn run_observed<F, O>(
    mesh: &UniformMesh,
    weight: WeightFn,
    config: SchemeConfig,
    u0: F,
    t_final: f64,
    mut observer: O,
) -> Result<Trajectory>
where
    F: Fn(f64) -> f64,
    O: FnMut(usize, f64, &StepDiagnostics),
{
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::Config(format!("final time must be positive, got {t_final}")));
    }
    config.validate()?;
    let assembler = Assembler::with_config(mesh, weight, config.assembly)?;
    let initial = assembler.l2_project(&u0)?;
    let dt = config.resolve_dt(mesh, &initial)?;
    if !(dt > 0.0) {
        return Err(Error::Config(format!("time step must be positive for a run, got {dt}")));
    }
    let mass = assembler.weighted_mass();
    let dispersion = assembler.dispersion_matrix();
    let stepper = Stepper::from_parts(assembler, mass, dispersion, config, dt)?;
    run_with(&stepper, initial, t_final, &mut observer)
}

/// Advances `initial` with an existing stepper until the last half-step time
/// reaches `t_final`.
pub fn run_with<O>(stepper: &Stepper, initial: FemCoeffs, t_final: f64, mut observer: O) -> Result<Trajectory>
where
    O: FnMut(usize, f64, &StepDiagnostics),
{
    let dt = stepper.dt();
    let mut traj = Trajectory {
        mesh: *stepper.mesh(),
        dt,
        times: vec![0.0],
        states: vec![initial],
        half_states: Vec::new(),
        diagnostics: Vec::new(),
    };
    let mut n = 0;
    while traj.last_time() < t_final || traj.num_steps() == 0 {
        let current = traj.states.last().expect("at least the initial state");
        let (next, diag) = stepper.step(current).map_err(|e| match e {
            Error::NonConvergence { iterations, last_increment, .. } => Error::NonConvergence {
                step: n,
                iterations,
                last_increment,
            },
            other => other,
        })?;
        let t = (n + 1) as f64 * dt;
        observer(n, t, &diag);
        traj.half_states.push(current.midpoint(&next));
        traj.states.push(next);
        traj.times.push(t);
        traj.diagnostics.push(diag);
        n += 1;
    }
    Ok(traj)
}

//! Exact solutions, conserved quantities and error measures.

use crate::error::{Error, Result};
use crate::assembly::WeightFn;
use crate::hilbert::{fft_hilbert, frac_deriv, spectral_deriv, SpectralGrid};
use crate::mesh::{eval_fem, eval_fem_deriv, local_coeffs, local_shapes, FemCoeffs, UniformMesh};
use crate::quadrature::gauss_legendre;
use crate::stepper::Trajectory;

/// Gauss points per element for `Q1`, `Q2` and weighted norms.
pub const CONSERVED_POINTS: usize = 8;
/// The spectral grid for `Q3` has at least this many points per element.
pub const DEFAULT_OVERSAMPLE: usize = 8;

/// Parameters of the two-soliton solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSolitonParams {
    pub c1: f64,
    pub c2: f64,
    pub d1: f64,
    pub d2: f64,
}

impl TwoSolitonParams {
    /// The interaction experiment: speeds 0.3 and 0.6, offsets -30 and -55.
    pub const TABLE: Self = Self {
        c1: 0.3,
        c2: 0.6,
        d1: -30.0,
        d2: -55.0,
    };

    pub fn new(c1: f64, c2: f64, d1: f64, d2: f64) -> Result<Self> {
        let p = Self { c1, c2, d1, d2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c2 > 0.0 && self.c1.is_finite() && self.c2.is_finite()) {
            return Err(Error::Domain(format!(
                "soliton speeds must be positive, got {} and {}",
                self.c1, self.c2
            )));
        }
        if self.c1 == self.c2 {
            return Err(Error::Domain(format!("soliton speeds must differ, both are {}", self.c1)));
        }
        if !(self.d1.is_finite() && self.d2.is_finite()) {
            return Err(Error::Domain("soliton offsets must be finite".into()));
        }
        Ok(())
    }

    fn lambdas(&self, x: f64, t: f64) -> (f64, f64) {
        (x - self.c1 * t - self.d1, x - self.c2 * t - self.d2)
    }

    fn eval(&self, x: f64, t: f64, sum_power: i32) -> f64 {
        let TwoSolitonParams { c1, c2, .. } = *self;
        let (l1, l2) = self.lambdas(x, t);
        let gap2 = (c1 - c2).powi(2);
        let num = 4.0
            * c1
            * c2
            * (c1 * l1 * l1 + c2 * l2 * l2 + (c1 + c2).powi(sum_power) / (c1 * c2 * gap2));
        let a = c1 * c2 * l1 * l2 - (c1 + c2).powi(2) / gap2;
        let b = c1 * l1 + c2 * l2;
        num / (a * a + b * b)
    }
}

impl Default for TwoSolitonParams {
    fn default() -> Self {
        Self::TABLE
    }
}

/// The two-soliton formula used as the reference for the interaction
/// experiment, with `(c1 + c2)^2` in the numerator's constant term.
pub fn two_soliton(x: f64, t: f64, params: &TwoSolitonParams) -> f64 {
    params.eval(x, t, 2)
}

/// The exact two-soliton solution; its numerator carries `(c1 + c2)^3`.
pub fn two_soliton_exact(x: f64, t: f64, params: &TwoSolitonParams) -> f64 {
    params.eval(x, t, 3)
}

/// `4c / (1 + c^2 (x - ct)^2)`.
pub fn single_soliton(x: f64, t: f64, c: f64) -> f64 {
    let s = c * (x - c * t);
    4.0 * c / (1.0 + s * s)
}

/// `d/dx` of [`single_soliton`].
pub fn single_soliton_x(x: f64, t: f64, c: f64) -> f64 {
    let s = c * (x - c * t);
    -8.0 * c * c * s / (1.0 + s * s).powi(2)
}

/// Pointwise BO residual `u_t + u u_x - (H u_x)_x` on a periodic grid of
/// `num_points` samples over `[x0, x0 + period)`, with spectral derivatives.
pub fn bo_residual<U, T>(num_points: usize, period: f64, x0: f64, u: U, u_t: T) -> Result<Vec<f64>>
where
    U: Fn(f64) -> f64,
    T: Fn(f64) -> f64,
{
    let grid = SpectralGrid::from_fn(num_points, period, x0, &u)?;
    let ux = spectral_deriv(&grid);
    let dispersive = spectral_deriv(&grid.with_samples(frac_deriv(&grid, 1.0)?)?);
    let h = grid.spacing();
    Ok((0..num_points)
        .map(|k| {
            let x = x0 + k as f64 * h;
            u_t(x) + grid.samples()[k] * ux[k] - dispersive[k]
        })
        .collect())
}

/// `Q1 = int u`, `Q2 = int u^2 / 2`, `Q3 = int (u^3 / 3 - u H u_x)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Conserved {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

impl Conserved {
    pub fn as_array(&self) -> [f64; 3] {
        [self.q1, self.q2, self.q3]
    }

    /// `I_n = (Q_n - Q_n(0)) / Q_n(0)` relative to `initial`.
    pub fn relative_change(&self, initial: &Conserved) -> [f64; 3] {
        let a = self.as_array();
        let b = initial.as_array();
        std::array::from_fn(|i| relative_change(a[i], b[i]))
    }
}

/// `(q - q0) / q0`; zero when both vanish.
pub fn relative_change(q: f64, q0: f64) -> f64 {
    if q0 == 0.0 {
        if q == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(q)
        }
    } else {
        (q - q0) / q0
    }
}

/// Conserved quantities of a FEM function with the default oversampling.
pub fn conserved(mesh: &UniformMesh, coeffs: &FemCoeffs) -> Conserved {
    conserved_with(mesh, coeffs, DEFAULT_OVERSAMPLE)
}

/// `Q1`, `Q2` by element-wise Gauss-Legendre; `Q3` on a periodic grid with at
/// least `oversample` points per element, `H u_x` from the FFT.
pub fn conserved_with(mesh: &UniformMesh, coeffs: &FemCoeffs, oversample: usize) -> Conserved {
    let rule = gauss_legendre(CONSERVED_POINTS).expect("fixed rule size");
    let dx = mesh.dx();
    let (mut q1, mut q2) = (0.0, 0.0);
    for e in 0..mesh.num_elements() {
        let c = local_coeffs(mesh, coeffs, e);
        for (&s, &w) in rule.nodes().iter().zip(rule.weights()) {
            let phi = local_shapes(0.5 * (s + 1.0));
            let u: f64 = c.iter().zip(&phi).map(|(a, b)| a * b).sum();
            let jw = 0.5 * dx * w;
            q1 += jw * u;
            q2 += jw * 0.5 * u * u;
        }
    }

    let n = (mesh.num_elements() * oversample.max(1)).next_power_of_two();
    let period = 2.0 * mesh.half_width();
    let x0 = -mesh.half_width();
    let u = SpectralGrid::from_fn(n, period, x0, |x| eval_fem(mesh, coeffs, x)).expect("power of two");
    let ux = SpectralGrid::from_fn(n, period, x0, |x| eval_fem_deriv(mesh, coeffs, x)).expect("power of two");
    let hux = fft_hilbert(&ux);
    let h = u.spacing();
    let q3 = h * u
        .samples()
        .iter()
        .zip(&hux)
        .map(|(&v, &hv)| v * v * v / 3.0 - v * hv)
        .sum::<f64>();
    Conserved { q1, q2, q3 }
}

/// Points `-X + j * finest_dx`, `j = 0..=M`, of the error grid.
fn finest_grid(mesh: &UniformMesh, finest_dx: f64) -> Result<usize> {
    let width = 2.0 * mesh.half_width();
    if !(finest_dx > 0.0 && finest_dx.is_finite()) {
        return Err(Error::Domain(format!("grid spacing must be positive, got {finest_dx}")));
    }
    let m = (width / finest_dx).round();
    if m < 1.0 || (m * finest_dx - width).abs() > 1e-9 * width {
        return Err(Error::Domain(format!(
            "grid spacing {finest_dx} does not divide the domain width {width}"
        )));
    }
    Ok(m as usize)
}

/// Relative L2 error `||u_h - u|| / ||u||`, both norms by the trapezoidal rule
/// on the points `-X + j * finest_dx`.
pub fn relative_error<F: Fn(f64) -> f64>(
    mesh: &UniformMesh,
    coeffs: &FemCoeffs,
    exact: F,
    finest_dx: f64,
) -> Result<f64> {
    let m = finest_grid(mesh, finest_dx)?;
    let x0 = -mesh.half_width();
    let (mut err, mut norm) = (0.0, 0.0);
    for j in 0..=m {
        let x = x0 + j as f64 * finest_dx;
        let w = if j == 0 || j == m { 0.5 } else { 1.0 };
        let u = exact(x);
        let d = eval_fem(mesh, coeffs, x) - u;
        err += w * d * d;
        norm += w * u * u;
    }
    if norm == 0.0 {
        return Err(Error::Domain("reference solution has zero norm".into()));
    }
    Ok((err / norm).sqrt())
}

/// Observed convergence rate `(ln E1 - ln E2) / (ln N2 - ln N1)`.
pub fn conv_rate(e1: f64, n1: f64, e2: f64, n2: f64) -> Result<f64> {
    if !(e1 > 0.0 && e2 > 0.0 && n1 > 0.0 && n2 > 0.0) {
        return Err(Error::Domain(format!(
            "rate inputs must be positive, got E = ({e1}, {e2}), N = ({n1}, {n2})"
        )));
    }
    if n1 == n2 {
        return Err(Error::Domain(format!("rate needs two different element counts, both are {n1}")));
    }
    Ok((e1.ln() - e2.ln()) / (n2.ln() - n1.ln()))
}

/// `sqrt(int phi u^2)` by element-wise Gauss-Legendre.
pub fn weighted_norm(mesh: &UniformMesh, weight: WeightFn, coeffs: &FemCoeffs) -> f64 {
    let rule = gauss_legendre(CONSERVED_POINTS).expect("fixed rule size");
    let dx = mesh.dx();
    let mut sum = 0.0;
    for e in 0..mesh.num_elements() {
        let c = local_coeffs(mesh, coeffs, e);
        let a = mesh.node(e);
        for (&s, &w) in rule.nodes().iter().zip(rule.weights()) {
            let y = 0.5 * (s + 1.0);
            let phi = local_shapes(y);
            let u: f64 = c.iter().zip(&phi).map(|(a, b)| a * b).sum();
            sum += 0.5 * dx * w * weight.phi(a + y * dx) * u * u;
        }
    }
    sum.sqrt()
}

/// `dt * sum_n ||D^{1/2} u^{n+1/2}||^2` over `[-r, r]`, each half state sampled
/// with at least `oversample` points per element.
pub fn local_smoothing_sum(traj: &Trajectory, r: f64, oversample: usize) -> Result<f64> {
    let mesh = &traj.mesh;
    let x_max = mesh.half_width();
    if !(r >= 0.0 && r < x_max) {
        return Err(Error::Domain(format!("window half-width {r} must lie in [0, {x_max})")));
    }
    let n = (mesh.num_elements() * oversample.max(1)).next_power_of_two();
    let period = 2.0 * x_max;
    let h = period / n as f64;
    let mut total = 0.0;
    for half in &traj.half_states {
        let grid = SpectralGrid::from_fn(n, period, -x_max, |x| eval_fem(mesh, half, x))?;
        let d = frac_deriv(&grid, 0.5)?;
        let mut local = 0.0;
        for (k, v) in d.iter().enumerate() {
            let x = -x_max + k as f64 * h;
            if x.abs() <= r {
                let w = if (x.abs() - r).abs() < 0.5 * h { 0.5 } else { 1.0 };
                local += w * v * v;
            }
        }
        total += traj.dt * h * local;
    }
    Ok(total)
}

/// One line of the diagnostics output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub q: Conserved,
    /// Relative changes `I_1, I_2, I_3`.
    pub i: [f64; 3],
    pub e: Option<f64>,
    pub mean_iterations: f64,
}

impl DiagnosticsRow {
    pub fn new(t: f64, q: Conserved, initial: &Conserved, e: Option<f64>, mean_iterations: f64) -> Self {
        Self {
            t,
            q,
            i: q.relative_change(initial),
            e,
            mean_iterations,
        }
    }
}

//! Hilbert transform and fractional derivatives.
//!
//! Two realizations live here. [`PvHilbert`] evaluates the full-line
//! principal-value transform of a basis-function derivative pointwise, with
//! everything outside `[-X, X]` dropped. The FFT routines act on periodic
//! samples through the Fourier multipliers `-i sgn(k)` and `|k|^beta`; they
//! serve as an independent oracle and as diagnostics.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::mesh::UniformMesh;
use crate::quadrature::{gauss_legendre, QuadratureRule};

/// Points per panel used for the principal-value integral.
pub const DEFAULT_PV_POINTS: usize = 7;

/// Panels shorter than this fraction of `dx` are dropped from the pv sum.
const MIN_PANEL: f64 = 1e-9;

/// Which constant is subtracted from the integrand on each piece of the
/// support before applying Gauss-Legendre.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Subtraction {
    /// Each piece subtracts its own polynomial continued to `x`. The remaining
    /// integrand is a polynomial, so the transform is exact up to rounding.
    #[default]
    PerPiece,
    /// Every piece subtracts the single value `(v_j)_x(x)`. Pieces not holding `x` keep a near-singular
    /// integrand when `x` is close to them.
    PointValue,
}

/// Pointwise evaluation of `H[(v_j)_x](x) = (1/pi) p.v. int (v_j)_x(t) / (x - t) dt`.
///
/// The integrand `p(t)/(x - t)` on a piece is regularized as
/// `(p(t) - c)/(x - t)` and `c * p.v. int dt/(x - t)` is added back in closed
/// form. The piece containing `x` is split there.
#[derive(Debug, Clone)]
pub struct PvHilbert {
    rule: QuadratureRule,
    subtraction: Subtraction,
}

impl Default for PvHilbert {
    fn default() -> Self {
        Self::new(DEFAULT_PV_POINTS).expect("default rule size is valid")
    }
}

impl PvHilbert {
    pub fn new(points_per_panel: usize) -> Result<Self> {
        Self::with_subtraction(points_per_panel, Subtraction::default())
    }

    pub fn with_subtraction(points_per_panel: usize, subtraction: Subtraction) -> Result<Self> {
        Ok(Self {
            rule: gauss_legendre(points_per_panel)?,
            subtraction,
        })
    }

    pub fn points_per_panel(&self) -> usize {
        self.rule.len()
    }

    pub fn subtraction(&self) -> Subtraction {
        self.subtraction
    }

    pub fn dbasis(&self, mesh: &UniformMesh, dof: usize, x: f64) -> f64 {
        let dx = mesh.dx();
        let pieces = mesh.basis_pieces(dof);
        let point_value = pieces
            .iter()
            .find(|p| p.contains(x))
            .map_or(0.0, |p| p.poly_deriv(x, dx));

        let mut total = 0.0;
        let mut ends: [(f64, f64); 4] = [(0.0, 0.0); 4];
        let mut n_ends = 0;
        let mut push_end = |e: f64, coef: f64| {
            if let Some(slot) = ends[..n_ends].iter_mut().find(|(p, _)| *p == e) {
                slot.1 += coef;
            } else {
                ends[n_ends] = (e, coef);
                n_ends += 1;
            }
        };

        for p in &pieces {
            let c = match self.subtraction {
                Subtraction::PerPiece => p.poly_deriv(x, dx),
                Subtraction::PointValue => point_value,
            };
            let regular = |t: f64| (p.poly_deriv(t, dx) - c) / (x - t);
            // a sliver next to x has a bounded integrand and would put nodes on x
            let part = |a: f64, b: f64| {
                if b - a > MIN_PANEL * dx {
                    self.rule.integrate(a, b, regular)
                } else {
                    0.0
                }
            };
            total += if p.a < x && x < p.b { part(p.a, x) + part(x, p.b) } else { part(p.a, p.b) };
            if c != 0.0 {
                push_end(p.a, c);
                push_end(p.b, -c);
            }
        }
        for &(e, coef) in &ends[..n_ends] {
            // x == e with a surviving coefficient only happens at the domain
            // ends for the boundary slope basis; keep the finite part there.
            if coef != 0.0 && e != x {
                total += coef * (x - e).abs().ln();
            }
        }
        total / PI
    }
}

/// [`PvHilbert::dbasis`] with the default seven-point rule.
pub fn pv_hilbert_dbasis(mesh: &UniformMesh, dof: usize, x: f64) -> f64 {
    PvHilbert::default().dbasis(mesh, dof, x)
}

/// Equispaced periodic samples `f(x0 + k * period / n)`, `n` a power of two.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    period: f64,
    samples: Vec<f64>,
}

impl SpectralGrid {
    pub fn new(period: f64, samples: Vec<f64>) -> Result<Self> {
        if !samples.len().is_power_of_two() {
            return Err(Error::Config(format!(
                "spectral grid length must be a power of two, got {}",
                samples.len()
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Config(format!("period must be positive, got {period}")));
        }
        Ok(Self { period, samples })
    }

    /// Samples `f` at `x0 + k * period / num_points`.
    pub fn from_fn<F: FnMut(f64) -> f64>(
        num_points: usize,
        period: f64,
        x0: f64,
        mut f: F,
    ) -> Result<Self> {
        let h = period / num_points as f64;
        let samples = (0..num_points).map(|k| f(x0 + k as f64 * h)).collect();
        Self::new(period, samples)
    }

    pub fn num_points(&self) -> usize {
        self.samples.len()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.samples.len() as f64
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Same grid with new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(self.period, samples)
    }

    /// Applies a Fourier multiplier `m(k, xi)` where `k` is the signed integer
    /// mode and `xi = 2 pi k / period`. The Nyquist mode is passed with `k > 0`.
    fn apply_multiplier<M: Fn(i64, f64) -> Complex64>(&self, multiplier: M) -> Vec<f64> {
        let n = self.samples.len();
        let mut buf: Vec<Complex64> = self.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut buf);
        for (idx, c) in buf.iter_mut().enumerate() {
            let k = if idx <= n / 2 { idx as i64 } else { idx as i64 - n as i64 };
            let xi = 2.0 * PI * k as f64 / self.period;
            *c *= multiplier(k, xi);
        }
        planner.plan_fft_inverse(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.into_iter().map(|c| c.re * scale).collect()
    }
}

/// Periodic Hilbert transform via the multiplier `-i sgn(k)`. The mean mode
/// and, for even lengths, the Nyquist mode map to zero.
pub fn fft_hilbert(grid: &SpectralGrid) -> Vec<f64> {
    let n = grid.num_points() as i64;
    grid.apply_multiplier(|k, _| {
        if k == 0 || (n > 1 && 2 * k == n) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -(k.signum() as f64))
        }
    })
}

/// Homogeneous fractional derivative `D^beta` via the multiplier `|xi|^beta`.
pub fn frac_deriv(grid: &SpectralGrid, beta: f64) -> Result<Vec<f64>> {
    if !(beta >= 0.0) {
        return Err(Error::Config(format!(
            "fractional order must be non-negative, got {beta}"
        )));
    }
    if beta == 0.0 {
        return Ok(grid.apply_multiplier(|_, _| Complex64::new(1.0, 0.0)));
    }
    Ok(grid.apply_multiplier(|_, xi| Complex64::new(xi.abs().powf(beta), 0.0)))
}

/// Spectral first derivative via the multiplier `i xi` (Nyquist mode zeroed).
pub fn spectral_deriv(grid: &SpectralGrid) -> Vec<f64> {
    let n = grid.num_points() as i64;
    grid.apply_multiplier(|k, xi| {
        if 2 * k == n {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, xi)
        }
    })
}

//! Weighted mass matrix, nonlocal dispersion matrix, nonlinear load vector and
//! the L2 projection onto the Hermite space.
//!
//! All element integrals use one Gauss-Legendre rule per element (eight points
//! by default). With `phi` affine every integrand except the Hilbert term is a
//! polynomial of degree at most nine per element, so they are exact. The
//! dispersion integral switches to geometrically graded panels in the two end
//! elements.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{PvHilbert, Subtraction, DEFAULT_PV_POINTS};
use crate::linalg::{DenseMatrix, LuSolver};
use crate::mesh::{local_coeffs, local_shape_derivs, local_shapes, FemCoeffs, UniformMesh};
use crate::quadrature::{gauss_legendre, QuadratureRule};

/// Default number of Gauss-Legendre points per element for inner products.
pub const DEFAULT_OUTER_POINTS: usize = 8;

/// Geometric panels toward `-X` and `X` in the two end elements of the
/// dispersion integral, where `H (v)_x` of the wrapped slope basis has a
/// logarithmic singularity.
pub const BOUNDARY_GRADING_LEVELS: usize = 12;
const BOUNDARY_GRADING_RATIO: f64 = 0.15;

/// The weight `phi` of the weighted inner product `<u, v phi>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightFn {
    /// `phi(x) = offset + x`.
    Affine { offset: f64 },
    /// `phi = 1`.
    Unit,
}

impl WeightFn {
    pub fn affine(offset: f64) -> Self {
        WeightFn::Affine { offset }
    }

    pub fn unit() -> Self {
        WeightFn::Unit
    }

    pub fn phi(&self, x: f64) -> f64 {
        match *self {
            WeightFn::Affine { offset } => offset + x,
            WeightFn::Unit => 1.0,
        }
    }

    pub fn phi_x(&self, _x: f64) -> f64 {
        match self {
            WeightFn::Affine { .. } => 1.0,
            WeightFn::Unit => 0.0,
        }
    }

    /// Smallest value of `phi` on `[-X, X]`.
    pub fn min_on(&self, mesh: &UniformMesh) -> f64 {
        match *self {
            WeightFn::Affine { offset } => offset - mesh.half_width(),
            WeightFn::Unit => 1.0,
        }
    }

    /// Requires `phi >= 1` on the mesh domain.
    pub fn validate(&self, mesh: &UniformMesh) -> Result<()> {
        let m = self.min_on(mesh);
        if m >= 1.0 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "weight must satisfy phi >= 1 on the domain, minimum is {m}"
            )))
        }
    }
}

/// Quadrature sizes used during assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssemblyConfig {
    /// Points per element for the outer inner products.
    pub outer_points: usize,
    /// Points per panel for the principal-value integral.
    pub pv_points: usize,
    pub subtraction: Subtraction,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        Self {
            outer_points: DEFAULT_OUTER_POINTS,
            pv_points: DEFAULT_PV_POINTS,
            subtraction: Subtraction::default(),
        }
    }
}

/// Precomputed element tables for one mesh and weight.
#[derive(Debug, Clone)]
pub struct Assembler {
    mesh: UniformMesh,
    weight: WeightFn,
    rule: QuadratureRule,
    hilbert: PvHilbert,
    /// Element-independent shape values at the rule nodes.
    shapes: Vec<[f64; 4]>,
    /// `(dx/2) w_q` for each node.
    jac_weights: Vec<f64>,
    /// Physical node positions, element-major.
    points: Vec<f64>,
    /// `(dx/2) w_q (phi v_a)_x` at each (element, node).
    test_dx: Vec<[f64; 4]>,
    /// Outer nodes of the dispersion integral: the element rule inside,
    /// graded panels in the two end elements.
    disp_points: Vec<f64>,
    disp_elements: Vec<usize>,
    /// `w (phi v_a)_x` at each dispersion node.
    disp_test: Vec<[f64; 4]>,
}

impl Assembler {
    pub fn new(mesh: &UniformMesh, weight: WeightFn) -> Result<Self> {
        Self::with_config(mesh, weight, AssemblyConfig::default())
    }

    pub fn with_config(mesh: &UniformMesh, weight: WeightFn, config: AssemblyConfig) -> Result<Self> {
        weight.validate(mesh)?;
        let rule = gauss_legendre(config.outer_points)?;
        let hilbert = PvHilbert::with_subtraction(config.pv_points, config.subtraction)?;
        let dx = mesh.dx();
        let local: Vec<f64> = rule.nodes().iter().map(|y| 0.5 * (1.0 + y)).collect();
        let shapes: Vec<[f64; 4]> = local.iter().map(|&s| local_shapes(s)).collect();
        let dshapes: Vec<[f64; 4]> = local
            .iter()
            .map(|&s| local_shape_derivs(s).map(|d| d / dx))
            .collect();
        let jac_weights: Vec<f64> = rule.weights().iter().map(|w| 0.5 * dx * w).collect();

        let q = rule.len();
        let mut points = Vec::with_capacity(mesh.num_elements() * q);
        let mut test_dx = Vec::with_capacity(mesh.num_elements() * q);
        for e in 0..mesh.num_elements() {
            let x0 = mesh.node(e);
            for k in 0..q {
                let x = x0 + dx * local[k];
                let (phi, phi_x) = (weight.phi(x), weight.phi_x(x));
                points.push(x);
                test_dx.push(std::array::from_fn(|a| {
                    jac_weights[k] * (phi_x * shapes[k][a] + phi * dshapes[k][a])
                }));
            }
        }

        let last = mesh.num_elements() - 1;
        let (mut disp_points, mut disp_elements, mut disp_test) = (Vec::new(), Vec::new(), Vec::new());
        for e in 0..mesh.num_elements() {
            let x0 = mesh.node(e);
            // local (s, w) pairs on [0, 1]
            let nodes: Vec<(f64, f64)> = if e == 0 || e == last {
                let graded = graded_panels(&rule);
                if e == 0 {
                    graded
                } else {
                    graded.into_iter().map(|(s, w)| (1.0 - s, w)).collect()
                }
            } else {
                local.iter().zip(rule.weights()).map(|(&s, &w)| (s, 0.5 * w)).collect()
            };
            for (s, w) in nodes {
                let x = x0 + dx * s;
                let (phi, phi_x) = (weight.phi(x), weight.phi_x(x));
                let (sh, dsh) = (local_shapes(s), local_shape_derivs(s));
                disp_points.push(x);
                disp_elements.push(e);
                disp_test.push(std::array::from_fn(|a| dx * w * (phi_x * sh[a] + phi * dsh[a] / dx)));
            }
        }
        Ok(Self {
            mesh: *mesh,
            weight,
            rule,
            hilbert,
            shapes,
            jac_weights,
            points,
            test_dx,
            disp_points,
            disp_elements,
            disp_test,
        })
    }

    pub fn mesh(&self) -> &UniformMesh {
        &self.mesh
    }

    pub fn weight(&self) -> WeightFn {
        self.weight
    }

    pub fn hilbert(&self) -> &PvHilbert {
        &self.hilbert
    }

    /// Outer quadrature nodes, element-major (`e * points_per_element + q`).
    pub fn quadrature_points(&self) -> &[f64] {
        &self.points
    }

    pub fn points_per_element(&self) -> usize {
        self.rule.len()
    }

    /// Values of the FEM function at every quadrature point.
    fn values_at_points(&self, u: &FemCoeffs, e: usize) -> impl Iterator<Item = f64> + '_ {
        let c = local_coeffs(&self.mesh, u, e);
        self.shapes
            .iter()
            .map(move |s| s.iter().zip(c).map(|(p, c)| p * c).sum())
    }

    /// `M_ij = <v_j, phi v_i>`.
    pub fn weighted_mass(&self) -> DenseMatrix {
        self.mass_with(|x| self.weight.phi(x))
    }

    /// `M_ij = <v_j, v_i>`.
    pub fn unit_mass(&self) -> DenseMatrix {
        self.mass_with(|_| 1.0)
    }

    fn mass_with<W: Fn(f64) -> f64>(&self, w: W) -> DenseMatrix {
        let q = self.rule.len();
        let mut m = DenseMatrix::zeros(self.mesh.num_dofs());
        for e in 0..self.mesh.num_elements() {
            let dofs = self.mesh.element_dofs(e);
            let mut local = [[0.0; 4]; 4];
            for k in 0..q {
                let jw = self.jac_weights[k] * w(self.points[e * q + k]);
                let s = &self.shapes[k];
                for a in 0..4 {
                    for b in 0..4 {
                        local[a][b] += jw * s[a] * s[b];
                    }
                }
            }
            for a in 0..4 {
                for b in 0..4 {
                    m.add_to(dofs[a], dofs[b], local[a][b]);
                }
            }
        }
        m
    }

    /// `B_ij = <H (v_j)_x, (phi v_i)_x>` with the principal-value quadrature.
    pub fn dispersion_matrix(&self) -> DenseMatrix {
        self.dispersion_matrix_with(|dof, points| {
            points
                .iter()
                .map(|&x| self.hilbert.dbasis(&self.mesh, dof, x))
                .collect()
        })
    }

    /// Outer nodes of the dispersion integral.
    pub fn dispersion_points(&self) -> &[f64] {
        &self.disp_points
    }

    /// Assembles `B` from any evaluator returning `H (v_dof)_x` at the given
    /// points (those of [`Self::dispersion_points`]).
    pub fn dispersion_matrix_with<F>(&self, hilbert_dbasis: F) -> DenseMatrix
    where
        F: Fn(usize, &[f64]) -> Vec<f64> + Sync,
    {
        let n = self.mesh.num_dofs();
        let cols: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let h = hilbert_dbasis(j, &self.disp_points);
                let mut col = vec![0.0; n];
                for ((hv, &e), t) in h.iter().zip(&self.disp_elements).zip(&self.disp_test) {
                    let dofs = self.mesh.element_dofs(e);
                    for a in 0..4 {
                        col[dofs[a]] += hv * t[a];
                    }
                }
                col
            })
            .collect();
        let mut b = DenseMatrix::zeros(n);
        for (j, col) in cols.iter().enumerate() {
            b.set_col(j, col);
        }
        b
    }

    /// `n_i(a) = <a^2/2, (phi v_i)_x>`.
    pub fn nonlinear_vector(&self, a: &FemCoeffs) -> Vec<f64> {
        let q = self.rule.len();
        let mut out = vec![0.0; self.mesh.num_dofs()];
        for e in 0..self.mesh.num_elements() {
            let dofs = self.mesh.element_dofs(e);
            let mut local = [0.0; 4];
            for (k, v) in self.values_at_points(a, e).enumerate() {
                let half_sq = 0.5 * v * v;
                let t = &self.test_dx[e * q + k];
                for i in 0..4 {
                    local[i] += half_sq * t[i];
                }
            }
            for i in 0..4 {
                out[dofs[i]] += local[i];
            }
        }
        out
    }

    /// `||u||_{L2}` by element quadrature.
    pub fn l2_norm(&self, u: &FemCoeffs) -> f64 {
        self.norm_with(u, |_| 1.0)
    }

    /// `||u||_{2,phi} = sqrt(<u, u phi>)` by element quadrature.
    pub fn weighted_norm(&self, u: &FemCoeffs) -> f64 {
        self.norm_with(u, |x| self.weight.phi(x))
    }

    fn norm_with<W: Fn(f64) -> f64>(&self, u: &FemCoeffs, w: W) -> f64 {
        let q = self.rule.len();
        let mut sum = 0.0;
        for e in 0..self.mesh.num_elements() {
            for (k, v) in self.values_at_points(u, e).enumerate() {
                sum += self.jac_weights[k] * w(self.points[e * q + k]) * v * v;
            }
        }
        sum.sqrt()
    }

    /// `b_i = <f, v_i>`.
    pub fn load_vector<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        let q = self.rule.len();
        let mut b = vec![0.0; self.mesh.num_dofs()];
        for e in 0..self.mesh.num_elements() {
            let dofs = self.mesh.element_dofs(e);
            for k in 0..q {
                let fv = f(self.points[e * q + k]) * self.jac_weights[k];
                for a in 0..4 {
                    b[dofs[a]] += fv * self.shapes[k][a];
                }
            }
        }
        b
    }

    /// L2-orthogonal projection of `f` onto the Hermite space.
    pub fn l2_project<F: Fn(f64) -> f64>(&self, f: F) -> Result<FemCoeffs> {
        let lu = LuSolver::new(&self.unit_mass())
            .map_err(|e| Error::Singular(format!("mass matrix: {e}")))?;
        let b = self.load_vector(f);
        FemCoeffs::from_vec(&self.mesh, lu.solve(&b))
    }
}

/// `(s, w)` on `[0, 1]`, panels `[r^(k+1), r^k]` plus `[0, r^L]`, refined toward `s = 0`.
fn graded_panels(rule: &QuadratureRule) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity((BOUNDARY_GRADING_LEVELS + 1) * rule.len());
    let mut hi = 1.0;
    for k in 0..=BOUNDARY_GRADING_LEVELS {
        let lo = if k == BOUNDARY_GRADING_LEVELS { 0.0 } else { hi * BOUNDARY_GRADING_RATIO };
        out.extend(rule.mapped(lo, hi));
        hi = lo;
    }
    out
}

/// Weighted mass matrix with the default quadrature.
pub fn weighted_mass(mesh: &UniformMesh, weight: WeightFn) -> Result<DenseMatrix> {
    Ok(Assembler::new(mesh, weight)?.weighted_mass())
}

/// Dispersion matrix with the default quadrature.
pub fn dispersion_matrix(mesh: &UniformMesh, weight: WeightFn) -> Result<DenseMatrix> {
    Ok(Assembler::new(mesh, weight)?.dispersion_matrix())
}

/// Nonlinear load vector with the default quadrature.
pub fn nonlinear_vector(mesh: &UniformMesh, weight: WeightFn, a: &FemCoeffs) -> Result<Vec<f64>> {
    Ok(Assembler::new(mesh, weight)?.nonlinear_vector(a))
}

/// L2 projection with the default quadrature.
pub fn l2_project<F: Fn(f64) -> f64>(mesh: &UniformMesh, f: F) -> Result<FemCoeffs> {
    Assembler::new(mesh, WeightFn::Unit)?.l2_project(f)
}

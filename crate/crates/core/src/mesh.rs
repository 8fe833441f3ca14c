//! Uniform periodic mesh and the cubic Hermite finite element space.
//!
//! Degrees of freedom are laid out node by node: index `2j` is the value
//! coefficient at node `x_j` (basis `f((x - x_j)/dx)`) and index `2j + 1` the
//! slope coefficient (basis `g((x - x_j)/dx)`). Nodes `x_0 = -X` and `x_N = X`
//! are identified, so a mesh with `N` elements carries `2N` coefficients.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Hermite value shape `f`.
pub fn eval_f(y: f64) -> f64 {
    let a = y.abs();
    if a > 1.0 {
        0.0
    } else {
        1.0 + y * y * (2.0 * a - 3.0)
    }
}

/// Hermite slope shape `g`.
pub fn eval_g(y: f64) -> f64 {
    let a = y.abs();
    if a > 1.0 {
        0.0
    } else {
        y * (1.0 - a) * (1.0 - a)
    }
}

/// Derivative of [`eval_f`].
pub fn eval_f_deriv(y: f64) -> f64 {
    let a = y.abs();
    if a > 1.0 {
        0.0
    } else {
        6.0 * y * (a - 1.0)
    }
}

/// Derivative of [`eval_g`].
pub fn eval_g_deriv(y: f64) -> f64 {
    let a = y.abs();
    if a > 1.0 {
        0.0
    } else {
        (1.0 - a) * (1.0 - 3.0 * a)
    }
}

/// Which of the two Hermite shapes a degree of freedom uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    Value,
    Slope,
}

impl DofKind {
    pub fn of(dof: usize) -> Self {
        if dof.is_multiple_of(2) {
            DofKind::Value
        } else {
            DofKind::Slope
        }
    }

    pub fn shape(self, y: f64) -> f64 {
        match self {
            DofKind::Value => eval_f(y),
            DofKind::Slope => eval_g(y),
        }
    }

    pub fn shape_deriv(self, y: f64) -> f64 {
        match self {
            DofKind::Value => eval_f_deriv(y),
            DofKind::Slope => eval_g_deriv(y),
        }
    }
}

/// One element-sized piece of a basis function: on `[a, b]` it equals
/// `kind.shape((x - center)/dx)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisPiece {
    pub a: f64,
    pub b: f64,
    pub center: f64,
    pub kind: DofKind,
}

impl BasisPiece {
    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }

    /// `d/dx` of the piece's polynomial at `x`, continued past `[a, b]`.
    pub fn poly_deriv(&self, x: f64, dx: f64) -> f64 {
        let y = (x - self.center) / dx;
        let a = if self.a < self.center { -y } else { y };
        let d = match self.kind {
            DofKind::Value => 6.0 * y * (a - 1.0),
            DofKind::Slope => (1.0 - a) * (1.0 - 3.0 * a),
        };
        d / dx
    }
}

/// Uniform partition of `[-X, X]` into an even number of elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformMesh {
    half_width: f64,
    num_elements: usize,
    dx: f64,
}

impl UniformMesh {
    pub fn new(half_width: f64, num_elements: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Config(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        if num_elements < 4 || !num_elements.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "element count must be even and at least 4, got {num_elements}"
            )));
        }
        Ok(Self {
            half_width,
            num_elements,
            dx: 2.0 * half_width / num_elements as f64,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn num_dofs(&self) -> usize {
        2 * self.num_elements
    }

    /// Position of node `j`, `0 <= j <= N`.
    pub fn node(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.num_elements).map(|j| self.node(j)).collect()
    }

    /// Maps `x` into `[-X, X)` by periodicity.
    pub fn wrap(&self, x: f64) -> f64 {
        let period = 2.0 * self.half_width;
        let w = (x + self.half_width).rem_euclid(period);
        -self.half_width + w
    }

    /// Element index and local coordinate `s` in `[0, 1]` of a wrapped position.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let x = self.wrap(x);
        let e = (((x + self.half_width) / self.dx).floor() as usize).min(self.num_elements - 1);
        (e, (x - self.node(e)) / self.dx)
    }

    /// Global DOF indices of element `e` in local order
    /// `[value left, slope left, value right, slope right]`.
    pub fn element_dofs(&self, e: usize) -> [usize; 4] {
        let right = (e + 1) % self.num_elements;
        [2 * e, 2 * e + 1, 2 * right, 2 * right + 1]
    }

    /// The two elements on which DOF `dof` is supported.
    pub fn dof_elements(&self, dof: usize) -> [usize; 2] {
        let node = dof / 2;
        let left = (node + self.num_elements - 1) % self.num_elements;
        [left, node]
    }

    /// Pieces of basis function `dof` on the real line restricted to `[-X, X]`.
    /// The basis at the identified boundary node splits into a piece at each end.
    pub fn basis_pieces(&self, dof: usize) -> [BasisPiece; 2] {
        let node = dof / 2;
        let kind = DofKind::of(dof);
        let dx = self.dx;
        if node == 0 {
            let (lo, hi) = (-self.half_width, self.half_width);
            [
                BasisPiece { a: lo, b: lo + dx, center: lo, kind },
                BasisPiece { a: hi - dx, b: hi, center: hi, kind },
            ]
        } else {
            let c = self.node(node);
            [
                BasisPiece { a: c - dx, b: c, center: c, kind },
                BasisPiece { a: c, b: c + dx, center: c, kind },
            ]
        }
    }
}

/// Shape values of the four local basis functions at local coordinate `s`.
pub fn local_shapes(s: f64) -> [f64; 4] {
    [eval_f(s), eval_g(s), eval_f(s - 1.0), eval_g(s - 1.0)]
}

/// `d/ds` of the four local basis functions; divide by `dx` for `d/dx`.
pub fn local_shape_derivs(s: f64) -> [f64; 4] {
    [
        eval_f_deriv(s),
        eval_g_deriv(s),
        eval_f_deriv(s - 1.0),
        eval_g_deriv(s - 1.0),
    ]
}

/// Coefficient vector of a function in the Hermite space.
#[derive(Debug, Clone, PartialEq)]
pub struct FemCoeffs(Vec<f64>);

impl FemCoeffs {
    pub fn zeros(mesh: &UniformMesh) -> Self {
        Self(vec![0.0; mesh.num_dofs()])
    }

    pub fn from_vec(mesh: &UniformMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_dofs() {
            return Err(Error::Config(format!(
                "coefficient vector has length {}, mesh needs {}",
                values.len(),
                mesh.num_dofs()
            )));
        }
        Ok(Self(values))
    }

    /// Unit vector selecting basis function `dof`.
    pub fn unit(mesh: &UniformMesh, dof: usize) -> Self {
        let mut c = Self::zeros(mesh);
        c.0[dof] = 1.0;
        c
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// `(self + other) / 2`.
    pub fn midpoint(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| 0.5 * (a + b)).collect())
    }

    /// `self + t * (other - self)`.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + t * (b - a)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|a| factor * a).collect())
    }

    fn local(&self, mesh: &UniformMesh, e: usize) -> [f64; 4] {
        mesh.element_dofs(e).map(|d| self.0[d])
    }
}

impl Index<usize> for FemCoeffs {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for FemCoeffs {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Local coefficients of element `e`, in the order of [`local_shapes`].
pub fn local_coeffs(mesh: &UniformMesh, coeffs: &FemCoeffs, e: usize) -> [f64; 4] {
    coeffs.local(mesh, e)
}

/// Evaluates the finite element function at `x` (wrapped periodically).
pub fn eval_fem(mesh: &UniformMesh, coeffs: &FemCoeffs, x: f64) -> f64 {
    let (e, s) = mesh.locate(x);
    let c = coeffs.local(mesh, e);
    local_shapes(s).iter().zip(c).map(|(p, c)| p * c).sum()
}

/// Evaluates the derivative of the finite element function at `x`.
pub fn eval_fem_deriv(mesh: &UniformMesh, coeffs: &FemCoeffs, x: f64) -> f64 {
    let (e, s) = mesh.locate(x);
    let c = coeffs.local(mesh, e);
    local_shape_derivs(s).iter().zip(c).map(|(p, c)| p * c).sum::<f64>() / mesh.dx()
}

//! Shared fixtures for the benchmarks: the two-soliton setup at a given
//! element count.

use bofem::assembly::{Assembler, WeightFn};
use bofem::mesh::{FemCoeffs, UniformMesh};
use bofem::reference::{two_soliton_exact, TwoSolitonParams};
use bofem::stepper::{SchemeConfig, Stepper};

pub const HALF_WIDTH: f64 = 100.0;
pub const WEIGHT_OFFSET: f64 = 120.0;

pub fn mesh(elements: usize) -> UniformMesh {
    UniformMesh::new(HALF_WIDTH, elements).expect("valid mesh")
}

pub fn assembler(elements: usize) -> Assembler {
    Assembler::new(&mesh(elements), WeightFn::affine(WEIGHT_OFFSET)).expect("valid weight")
}

pub fn initial_state(asm: &Assembler) -> FemCoeffs {
    let p = TwoSolitonParams::TABLE;
    asm.l2_project(|x| two_soliton_exact(x, 0.0, &p)).expect("projection")
}

/// A factorized stepper with the paper's time-step rule, and `u0`.
pub fn stepper(elements: usize) -> (Stepper, FemCoeffs) {
    let m = mesh(elements);
    let config = SchemeConfig::default();
    let asm = assembler(elements);
    let u0 = initial_state(&asm);
    let dt = config.resolve_dt(&m, &u0).expect("time step");
    let s = Stepper::new(&m, WeightFn::affine(WEIGHT_OFFSET), config, dt).expect("stepper");
    (s, u0)
}

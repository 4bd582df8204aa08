#![allow(dead_code)]

use chainent::observables::TwoQubitDensityMatrix;
use chainent::spin_model::{Boundary, Frame, ModelParams};
use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Chain parameters with generic couplings; the pin lifts ground-state
/// degeneracies.
pub fn random_params<R: Rng>(rng: &mut R, max_sites: usize) -> ModelParams {
    let n = rng.gen_range(4..=max_sites);
    let boundary = if rng.gen_bool(0.5) { Boundary::Open } else { Boundary::Periodic };
    let frame = if rng.gen_bool(0.5) { Frame::Lab } else { Frame::Ordered };
    ModelParams::new(rng.gen_range(0.0..1.5), rng.gen_range(0.0..1.5), rng.gen_range(0.1..2.0), n)
        .with_pin(rng.gen_range(0.01..0.05))
        .with_boundary(boundary)
        .with_frame(frame)
}

/// Hilbert-Schmidt random state `G G† / tr` with a 4×rank Gaussian `G`.
pub fn random_state<R: Rng>(rng: &mut R, rank: usize, real: bool) -> TwoQubitDensityMatrix {
    let g = DMatrix::<Complex64>::from_fn(4, rank, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = if real { 0.0 } else { rng.sample(StandardNormal) };
        Complex64::new(re, im)
    });
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let rho = Matrix4::from_fn(|i, j| m[(i, j)] / tr);
    TwoQubitDensityMatrix::from_matrix(rho, (0, 1))
}

pub fn max_diff(a: &Matrix4<Complex64>, b: &Matrix4<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

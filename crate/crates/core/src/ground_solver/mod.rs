//! Ground-state backends: Lanczos on the full chain and a textbook
//! infinite-system DMRG.

pub mod idmrg;
pub mod lanczos;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin_model::SparseOperator;

pub use idmrg::{idmrg_ground_state, DmrgConfig, IdmrgResult};
pub use lanczos::LanczosConfig;

/// Two lowest levels closer than this are reported as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

/// Real ground-state wavefunction on the 2^N computational basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateVector {
    pub amplitudes: Vec<f64>,
    pub energy: f64,
    pub n_sites: usize,
}

impl StateVector {
    pub fn new(amplitudes: Vec<f64>, energy: f64) -> Result<Self> {
        let dim = amplitudes.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::InvalidParams(format!("state dimension {dim} is not 2^N with N >= 1")));
        }
        let n_sites = dim.trailing_zeros() as usize;
        Ok(Self { amplitudes, energy, n_sites })
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `<ψ|H|ψ> / <ψ|ψ>`.
    pub fn rayleigh_quotient(&self, h: &SparseOperator) -> f64 {
        let mut hx = vec![0.0; self.dimension()];
        h.apply(&self.amplitudes, &mut hx);
        let num: f64 = self.amplitudes.iter().zip(&hx).map(|(a, b)| a * b).sum();
        num / self.norm().powi(2)
    }

    /// `‖Hψ − Eψ‖`.
    pub fn residual(&self, h: &SparseOperator) -> f64 {
        let mut hx = vec![0.0; self.dimension()];
        h.apply(&self.amplitudes, &mut hx);
        hx.iter()
            .zip(&self.amplitudes)
            .map(|(a, b)| (a - self.energy * b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

fn check_operator(h: &SparseOperator) -> Result<()> {
    if h.dimension() < 2 {
        return Err(Error::InvalidParams("operator dimension must be at least 2".into()));
    }
    Ok(())
}

/// Lowest eigenvector of `h` by Lanczos; deterministic for a fixed seed.
pub fn lanczos_ground_state(h: &SparseOperator, tol: f64, seed: u64) -> Result<StateVector> {
    check_operator(h)?;
    let cfg = LanczosConfig { tol, ..Default::default() };
    let dim = h.dimension();
    let pair = lanczos::lowest_eigenpair(
        dim,
        |x, y| h.apply(x, y),
        lanczos::random_start(dim, seed, &[]),
        &[],
        &cfg,
    )?;
    let mut amplitudes = pair.vector;
    fix_sign(&mut amplitudes);
    StateVector::new(amplitudes, pair.value)
}

/// Ground state and the first excited level (found by deflation).
pub fn lanczos_lowest_two(h: &SparseOperator, tol: f64, seed: u64) -> Result<(StateVector, f64)> {
    let ground = lanczos_ground_state(h, tol, seed)?;
    let dim = h.dimension();
    let cfg = LanczosConfig { tol, ..Default::default() };
    let deflate = vec![ground.amplitudes.clone()];
    let first = lanczos::lowest_eigenpair(
        dim,
        |x, y| h.apply(x, y),
        lanczos::random_start(dim, seed.wrapping_add(1), &deflate),
        &deflate,
        &cfg,
    )?;
    Ok((ground, first.value))
}

/// Global sign convention: the largest-magnitude amplitude is positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let pivot = v
        .iter()
        .copied()
        .fold(0.0f64, |best, x| if x.abs() > best.abs() + 1e-12 { x } else { best });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

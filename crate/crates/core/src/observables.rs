//! Two-site reduced density matrices and magnetizations of a chain state.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground_solver::StateVector;
use crate::spin_model::{site_mask, staggered_sign, sz_value};

pub type C4 = Matrix4<Complex64>;

/// Tolerance on the density-matrix invariants.
pub const RDM_TOL: f64 = 1e-12;

/// 4×4 density matrix of a site pair in the basis {↑↑, ↑↓, ↓↑, ↓↓}.
///
/// Site numbering in `site_pair` is 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitDensityMatrix {
    pub elements: C4,
    pub site_pair: (usize, usize),
}

impl TwoQubitDensityMatrix {
    pub fn from_matrix(elements: C4, site_pair: (usize, usize)) -> Self {
        Self { elements, site_pair }
    }

    /// Real matrix lifted to complex storage, with no site information.
    pub fn from_real(m: &Matrix4<f64>) -> Self {
        Self::from_matrix(m.map(|x| Complex64::new(x, 0.0)), (0, 1))
    }

    /// `|ψ><ψ|` for a normalized 4-component state.
    pub fn pure(psi: &[Complex64; 4]) -> Self {
        let mut m = C4::zeros();
        for a in 0..4 {
            for b in 0..4 {
                m[(a, b)] = psi[a] * psi[b].conj();
            }
        }
        Self::from_matrix(m, (0, 1))
    }

    pub fn maximally_mixed() -> Self {
        Self::from_matrix(C4::identity() * Complex64::new(0.25, 0.0), (0, 1))
    }

    pub fn separation(&self) -> usize {
        self.site_pair.1 - self.site_pair.0
    }

    pub fn trace(&self) -> f64 {
        self.elements.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.elements - self.elements.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        hermitian_eigenvalues(&self.elements)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_imaginary(&self) -> f64 {
        self.elements.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Checks hermiticity, unit trace and positivity at [`RDM_TOL`].
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > RDM_TOL {
            return Err(Error::Numerical(format!("density matrix not Hermitian ({herm:e})")));
        }
        let tr = (self.trace() - 1.0).abs();
        if tr > RDM_TOL {
            return Err(Error::Numerical(format!("density matrix trace off by {tr:e}")));
        }
        let min = self.min_eigenvalue();
        if min < -RDM_TOL {
            return Err(Error::Numerical(format!("density matrix not PSD (min eigenvalue {min:e})")));
        }
        Ok(())
    }

    /// Clips negative eigenvalues and renormalizes the trace.
    pub fn project_to_physical(&self) -> Self {
        let herm = (self.elements + self.elements.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(herm);
        let vals = eig.eigenvalues.map(|x| x.max(0.0));
        let total: f64 = vals.iter().sum();
        let d = C4::from_diagonal(&vals.map(|x| Complex64::new(x / total, 0.0)));
        let m = eig.eigenvectors * d * eig.eigenvectors.adjoint();
        Self::from_matrix(m, self.site_pair)
    }

    /// Expectation value of `a ⊗ b`.
    pub fn expect(&self, a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> Complex64 {
        let op = a.kronecker(b);
        (self.elements * op).trace()
    }

    /// Swaps the two qubits.
    pub fn swapped(&self) -> Self {
        let perm = [0usize, 2, 1, 3];
        let m = C4::from_fn(|a, b| self.elements[(perm[a], perm[b])]);
        Self::from_matrix(m, self.site_pair)
    }
}

/// Largest element modulus.
pub fn max_abs(m: &C4) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Ascending eigenvalues of a Hermitian 4×4 matrix.
pub fn hermitian_eigenvalues(m: &C4) -> [f64; 4] {
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut v: [f64; 4] = SymmetricEigen::new(herm).eigenvalues.into();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Partial trace of `|ψ><ψ|` over all sites except `i < j` (0-based).
pub fn reduced_density_matrix(state: &StateVector, i: usize, j: usize) -> Result<TwoQubitDensityMatrix> {
    let n = state.n_sites;
    if i >= j || j >= n {
        return Err(Error::SiteIndex { i, j, n_sites: n });
    }
    let (mi, mj) = (site_mask(n, i), site_mask(n, j));
    let amps = &state.amplitudes;
    let mut rho = [[0.0f64; 4]; 4];
    for rest in 0..state.dimension() {
        if rest & (mi | mj) != 0 {
            continue;
        }
        let c = [amps[rest], amps[rest | mj], amps[rest | mi], amps[rest | mi | mj]];
        for a in 0..4 {
            for b in a..4 {
                rho[a][b] += c[a] * c[b];
            }
        }
    }
    let m = C4::from_fn(|a, b| {
        let v = if a <= b { rho[a][b] } else { rho[b][a] };
        Complex64::new(v, 0.0)
    });
    Ok(TwoQubitDensityMatrix::from_matrix(m, (i, j)))
}

/// Site-resolved `<Sx_k>` and `<Sz_k>`.
pub fn local_moments(state: &StateVector) -> (Vec<f64>, Vec<f64>) {
    let n = state.n_sites;
    let amps = &state.amplitudes;
    let norm2: f64 = amps.iter().map(|c| c * c).sum();
    let mut sx = vec![0.0; n];
    let mut sz = vec![0.0; n];
    for (k, (x, z)) in sx.iter_mut().zip(sz.iter_mut()).enumerate() {
        let m = site_mask(n, k);
        let mut ax = 0.0;
        let mut az = 0.0;
        for (s, &c) in amps.iter().enumerate() {
            ax += c * amps[s ^ m];
            az += c * c * sz_value(s, m);
        }
        *x = 0.5 * ax / norm2;
        *z = az / norm2;
    }
    (sx, sz)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnetizationRecord {
    /// Site-averaged `<Sx>`.
    pub sx_uniform: f64,
    /// `|(1/N) Σ (-1)^i <Sz_i>|`.
    pub sz_staggered: f64,
}

impl MagnetizationRecord {
    pub fn total_moment(&self) -> f64 {
        self.sx_uniform.hypot(self.sz_staggered)
    }

    /// Magnetizations of the two sites of a density matrix.
    pub fn from_rdm(rho: &TwoQubitDensityMatrix) -> Self {
        let (sx, sz, id) = (spin_op(pauli_x()), spin_op(pauli_z()), Matrix2::identity());
        let x = 0.5 * (rho.expect(&sx, &id) + rho.expect(&id, &sx)).re;
        let left = rho.expect(&sz, &id).re * staggered_sign(rho.site_pair.0);
        let right = rho.expect(&id, &sz).re * staggered_sign(rho.site_pair.1);
        Self { sx_uniform: x, sz_staggered: (0.5 * (left + right)).abs() }
    }
}

pub fn magnetizations(state: &StateVector) -> MagnetizationRecord {
    let (sx, sz) = local_moments(state);
    let n = state.n_sites as f64;
    let sx_uniform = sx.iter().sum::<f64>() / n;
    let stag: f64 = sz.iter().enumerate().map(|(k, z)| staggered_sign(k) * z).sum::<f64>() / n;
    MagnetizationRecord { sx_uniform, sz_staggered: stag.abs() }
}

/// `S = σ/2`.
pub fn spin_op(pauli: Matrix2<Complex64>) -> Matrix2<Complex64> {
    pauli * Complex64::new(0.5, 0.0)
}

pub fn pauli_x() -> Matrix2<Complex64> {
    Matrix2::new(
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
    )
}

pub fn pauli_y() -> Matrix2<Complex64> {
    Matrix2::new(
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(0.0, 0.0),
    )
}

pub fn pauli_z() -> Matrix2<Complex64> {
    Matrix2::new(
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(-1.0, 0.0),
    )
}

//! Two-qubit entanglement: concurrence, the PPT test, the Bell-basis change
//! and the optimal Lewenstein-Sanpera decomposition.

mod decompose;
pub mod nelder_mead;

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::observables::{TwoQubitDensityMatrix, C4};

pub use decompose::{ls_decompose, ls_decompose_with};

/// Eigenvalue tolerance for positivity of a residual.
pub const TOL_PSD: f64 = 1e-9;
/// Eigenvalue tolerance for positivity of a partial transpose.
pub const TOL_PPT: f64 = 1e-9;
/// States with a smaller concurrence are declared separable.
pub const SEPARABLE_CONCURRENCE: f64 = 1e-8;
/// Negative eigenvalues down to this are clamped as roundoff.
pub const CLAMP_TOL: f64 = 1e-12;
/// A separable part whose smallest eigenvalue is below this is rank-deficient.
pub const RESIDUAL_RANK_TOL: f64 = 1e-8;

const S2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Columns are |ψ−⟩, |ψ+⟩, |φ−⟩, |φ+⟩ in the basis {↑↑, ↑↓, ↓↑, ↓↓}.
pub fn bell_basis() -> Matrix4<f64> {
    Matrix4::new(
        0.0, 0.0, S2, S2, //
        S2, S2, 0.0, 0.0, //
        -S2, S2, 0.0, 0.0, //
        0.0, 0.0, -S2, S2,
    )
}

/// `B† ρ B`: matrix elements between Bell states, ordered ψ−, ψ+, φ−, φ+.
pub fn bell_transform(rho: &TwoQubitDensityMatrix) -> C4 {
    let b = bell_basis().map(|x| Complex64::new(x, 0.0));
    b.adjoint() * rho.elements * b
}

/// Inverse of [`bell_transform`].
pub fn bell_inverse_transform(m: &C4) -> C4 {
    let b = bell_basis().map(|x| Complex64::new(x, 0.0));
    b * m * b.adjoint()
}

/// Amplitudes of the pure part on |ψ−⟩, |ψ+⟩, |φ−⟩, |φ+⟩.
///
/// The global phase is fixed so that the first nonzero amplitude is real
/// and positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellCoefficients {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl BellCoefficients {
    /// Normalizes `amps` and fixes the global phase.
    pub fn new(amps: [Complex64; 4]) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Numerical("Bell amplitudes have zero norm".into()));
        }
        let mut amps = amps.map(|z| z / norm);
        if let Some(pivot) = amps.iter().copied().find(|z| z.norm() > 1e-12) {
            let phase = pivot.conj() / pivot.norm();
            amps = amps.map(|z| z * phase);
        }
        let [a, b, c, d] = amps;
        Ok(Self { a, b, c, d })
    }

    pub fn from_real(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::new([a, b, c, d].map(|x| Complex64::new(x, 0.0)))
    }

    /// Bell amplitudes of a computational-basis state.
    pub fn from_state(psi: &[Complex64; 4]) -> Result<Self> {
        let v = bell_basis().transpose().map(|x| Complex64::new(x, 0.0)) * Vector4::from_column_slice(psi);
        Self::new([v[0], v[1], v[2], v[3]])
    }

    /// The pure state in the computational basis.
    pub fn to_state(&self) -> [Complex64; 4] {
        let v = bell_basis().map(|x| Complex64::new(x, 0.0)) * Vector4::new(self.a, self.b, self.c, self.d);
        [v[0], v[1], v[2], v[3]]
    }

    pub fn amplitudes(&self) -> [Complex64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// `[|a|², |b|², |c|², |d|²]`.
    pub fn weights(&self) -> [f64; 4] {
        self.amplitudes().map(|z| z.norm_sqr())
    }

    pub fn normalization_error(&self) -> f64 {
        (self.weights().iter().sum::<f64>() - 1.0).abs()
    }

    /// Concurrence of the pure state, `|a² − b² − c² + d²|`.
    pub fn concurrence(&self) -> f64 {
        (self.a * self.a - self.b * self.b - self.c * self.c + self.d * self.d).norm()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.amplitudes().iter().all(|z| z.im.abs() <= tol)
    }
}

/// `ρ = Λ ρ_s + (1 − Λ)|Ψ_e⟩⟨Ψ_e|` with `Λ` maximal and `ρ_s` separable.
#[derive(Debug, Clone)]
pub struct LsDecomposition {
    pub lambda: f64,
    /// `None` when `ρ` is separable.
    pub bell: Option<BellCoefficients>,
    /// `None` when `Λ = 0`.
    pub rho_s: Option<TwoQubitDensityMatrix>,
    pub c_rho: f64,
    /// `None` when `ρ` is separable.
    pub c_rho_e: Option<f64>,
    pub separable: bool,
}

impl LsDecomposition {
    pub fn one_minus_lambda(&self) -> f64 {
        1.0 - self.lambda
    }

    /// `|C(ρ) − (1 − Λ) C(ρ_e)|`; zero for a separable state.
    pub fn certificate_gap(&self) -> f64 {
        match self.c_rho_e {
            Some(ce) => (self.c_rho - (1.0 - self.lambda) * ce).abs(),
            None => self.c_rho,
        }
    }

    /// Whether `C(ρ) = (1 − Λ) C(ρ_e)` is implied by optimality.
    ///
    /// It is when the separable part has full rank (or is absent). On a
    /// rank-deficient separable part the positivity constraint is active and
    /// the optimum need not satisfy it.
    pub fn certificate_applies(&self) -> bool {
        self.bell.is_some()
            && self.rho_s.as_ref().map_or(true, |rs| rs.min_eigenvalue() > RESIDUAL_RANK_TOL)
    }

    /// `Λ ρ_s + (1 − Λ)|Ψ_e⟩⟨Ψ_e|`.
    pub fn reconstruct(&self) -> Option<C4> {
        let mut m = C4::zeros();
        if let Some(rs) = &self.rho_s {
            m += rs.elements * Complex64::new(self.lambda, 0.0);
        }
        if let Some(bell) = &self.bell {
            m += TwoQubitDensityMatrix::pure(&bell.to_state()).elements * Complex64::new(1.0 - self.lambda, 0.0);
        }
        if self.rho_s.is_none() && self.bell.is_none() {
            return None;
        }
        Some(m)
    }
}

/// Which Bell amplitudes the optimizer may use.
///
/// `Real` applies to real `ρ`; a `ρ` with imaginary parts is always
/// decomposed with complex amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BellMode {
    #[default]
    Real,
    Complex,
}

#[derive(Debug, Clone, Copy)]
pub struct LsOptions {
    pub mode: BellMode,
    /// Number of local searches in the multi-start stage.
    pub starts: usize,
    pub seed: u64,
    /// Bound on `|C(ρ) − (1 − Λ) C(ρ_e)|`.
    pub cert_tol: f64,
}

impl Default for LsOptions {
    fn default() -> Self {
        Self { mode: BellMode::Real, starts: 64, seed: 0, cert_tol: 1e-5 }
    }
}

/// Partial transpose over the second qubit.
pub fn partial_transpose(m: &C4) -> C4 {
    pt_generic(m)
}

pub(crate) fn pt_generic<T: nalgebra::Scalar + Copy>(m: &Matrix4<T>) -> Matrix4<T> {
    Matrix4::from_fn(|r, c| {
        let (i, j) = (r / 2, r % 2);
        let (k, l) = (c / 2, c % 2);
        m[(2 * i + l, 2 * k + j)]
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PptResult {
    pub separable: bool,
    pub min_pt_eigenvalue: f64,
    pub min_eigenvalue: f64,
}

/// Peres-Horodecki test; exact for two qubits.
pub fn ppt_check(rho: &TwoQubitDensityMatrix) -> PptResult {
    let min_eigenvalue = rho.min_eigenvalue();
    let min_pt_eigenvalue = crate::observables::hermitian_eigenvalues(&partial_transpose(&rho.elements))[0];
    PptResult {
        separable: min_eigenvalue >= -TOL_PSD && min_pt_eigenvalue >= -TOL_PPT,
        min_pt_eigenvalue,
        min_eigenvalue,
    }
}

/// Hermitian square root with roundoff-negative eigenvalues clamped.
pub(crate) fn psd_sqrt(m: &C4) -> Result<C4> {
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let min = eig.eigenvalues.min();
    if min < -CLAMP_TOL {
        return Err(Error::Numerical(format!("matrix not positive semidefinite (min eigenvalue {min:e})")));
    }
    let d = C4::from_diagonal(&eig.eigenvalues.map(|x| Complex64::new(x.max(0.0).sqrt(), 0.0)));
    Ok(eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

/// `σy ⊗ σy`: real, ±1 on the anti-diagonal.
fn spin_flip_operator() -> C4 {
    Matrix4::new(
        0.0, 0.0, 0.0, -1.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        -1.0, 0.0, 0.0, 0.0,
    )
    .map(|x| Complex64::new(x, 0.0))
}

#[cfg(test)]
fn spin_flip(rho: &C4) -> C4 {
    let yy = spin_flip_operator();
    yy * rho.conjugate() * yy
}

/// Eigenvalues of `ρ` at or below this are indistinguishable from roundoff
/// and span no direction of the state.
const RANK_RESOLUTION: f64 = 64.0 * f64::EPSILON;

/// Wootters concurrence `max(0, λ₁ − λ₂ − λ₃ − λ₄)`.
///
/// With `ρ = W W†`, the `λ` are the singular values of `Wᵀ (σy ⊗ σy) W`;
/// no square root of a near-zero eigenvalue is taken.
pub fn concurrence(rho: &TwoQubitDensityMatrix) -> Result<f64> {
    let herm = (rho.elements + rho.elements.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let min = eig.eigenvalues.min();
    if min < -CLAMP_TOL {
        return Err(Error::Numerical(format!("matrix not positive semidefinite (min eigenvalue {min:e})")));
    }
    let mut w = eig.eigenvectors;
    for (k, &d) in eig.eigenvalues.iter().enumerate() {
        let scale = if d > RANK_RESOLUTION { d.sqrt() } else { 0.0 };
        w.column_mut(k).scale_mut(scale);
    }
    let tau = w.transpose() * spin_flip_operator() * w;
    let mut sv: Vec<f64> = tau.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok((sv[0] - sv[1] - sv[2] - sv[3]).max(0.0))
}

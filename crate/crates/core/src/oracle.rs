//! Brute-force reference implementations.
//!
//! Each routine takes the slow, direct route and shares no numerical code
//! with the production path beyond dense linear algebra, so agreement
//! between the two is meaningful. Performance is not a goal.

use std::fmt;

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::entanglement::{concurrence, BellCoefficients, LsDecomposition, TOL_PPT, TOL_PSD};
use crate::error::{Error, Result};
use crate::ground_solver::StateVector;
use crate::observables::{TwoQubitDensityMatrix, C4};
use crate::spin_model::{SparseOperator, MAX_DENSE_SITES};

/// Brute-force path behind a reference value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMethod {
    DenseEig,
    PartialTraceDirect,
    LsGrid,
    WernerAnalytic,
}

impl OracleMethod {
    pub fn label(self) -> &'static str {
        match self {
            OracleMethod::DenseEig => "dense-eig",
            OracleMethod::PartialTraceDirect => "partial-trace-direct",
            OracleMethod::LsGrid => "ls-grid",
            OracleMethod::WernerAnalytic => "werner-analytic",
        }
    }
}

impl fmt::Display for OracleMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quantity: String,
    pub reference_value: f64,
    pub method: OracleMethod,
}

impl OracleReport {
    pub fn new(quantity: impl Into<String>, reference_value: f64, method: OracleMethod) -> Self {
        Self { quantity: quantity.into(), reference_value, method }
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {:.12} [{}]", self.quantity, self.reference_value, self.method)
    }
}

/// Lowest eigenpair by full dense diagonalization (at most 12 sites).
pub fn dense_ground_state(h: &SparseOperator) -> Result<StateVector> {
    if h.n_sites() > MAX_DENSE_SITES {
        return Err(Error::Capacity { n_sites: h.n_sites(), max_sites: MAX_DENSE_SITES });
    }
    let eig = SymmetricEigen::new(h.to_dense()?);
    let k = eig.eigenvalues.imin();
    let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
    if let Some(pivot) = v.iter().copied().reduce(|a, b| if b.abs() > a.abs() + 1e-12 { b } else { a }) {
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    StateVector::new(v, eig.eigenvalues[k])
}

/// `ρ_ij` by explicit summation over every basis pair that differs only on
/// sites `i` and `j` (0-based, site 0 is the leading bit).
pub fn partial_trace_direct(state: &StateVector, i: usize, j: usize) -> Result<TwoQubitDensityMatrix> {
    let n = state.n_sites;
    if i >= j || j >= n {
        return Err(Error::SiteIndex { i, j, n_sites: n });
    }
    let bit = |x: usize, site: usize| (x >> (n - 1 - site)) & 1;
    let with_bits = |x: usize, bi: usize, bj: usize| {
        let cleared = x & !(1 << (n - 1 - i)) & !(1 << (n - 1 - j));
        cleared | (bi << (n - 1 - i)) | (bj << (n - 1 - j))
    };
    let psi = &state.amplitudes;
    let mut rho = C4::zeros();
    for x in 0..psi.len() {
        let row = 2 * bit(x, i) + bit(x, j);
        for col in 0..4 {
            let y = with_bits(x, col / 2, col % 2);
            rho[(row, col)] += Complex64::new(psi[x] * psi[y], 0.0);
        }
    }
    let norm: f64 = psi.iter().map(|a| a * a).sum();
    Ok(TwoQubitDensityMatrix::from_matrix(rho / Complex64::new(norm, 0.0), (i, j)))
}

/// `(C, 1 − Λ)` of `p|ψ−⟩⟨ψ−| + (1 − p) I/4`.
pub fn werner_values(p: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParams(format!("Werner weight {p} outside [0, 1]")));
    }
    let c = ((3.0 * p - 1.0) / 2.0).max(0.0);
    Ok((c, c))
}

pub fn werner_state(p: f64) -> TwoQubitDensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = Matrix4::<f64>::identity() * ((1.0 - p) / 4.0);
    m[(1, 1)] += p * 0.5;
    m[(2, 2)] += p * 0.5;
    m[(1, 2)] -= p * s * s;
    m[(2, 1)] -= p * s * s;
    TwoQubitDensityMatrix::from_real(&m)
}

fn lowest_eigenvalue(m: &Matrix4<f64>) -> f64 {
    SymmetricEigen::new(*m).eigenvalues.min()
}

/// Partial transpose over the second qubit, written out entry by entry.
fn transpose_second(m: &Matrix4<f64>) -> Matrix4<f64> {
    let mut out = Matrix4::zeros();
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for d in 0..2 {
                    out[(2 * a + b, 2 * c + d)] = m[(2 * a + d, 2 * c + b)];
                }
            }
        }
    }
    out
}

/// Smallest `t` with `ρ − tP` PSD and PPT, or `None`.
///
/// `λ_min((ρ − tP)^Γ)` is concave in `t`: its maximizer is located by golden
/// section, and the PPT boundary below it by bisection.
fn smallest_weight(rho: &Matrix4<f64>, p: &Matrix4<f64>) -> Option<f64> {
    let (rg, pg) = (transpose_second(rho), transpose_second(p));
    let f = |t: f64| lowest_eigenvalue(&(rg - pg * t));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-13 {
        let (x1, x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if f(x1) < f(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    let peak = 0.5 * (lo + hi);
    if f(peak) < -TOL_PPT {
        return None;
    }
    let t = if f(0.0) >= 0.0 {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0, peak);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    (lowest_eigenvalue(&(rho - p * t)) >= -TOL_PSD).then_some(t)
}

/// Point `k` of `d` on `[0, span]`, endpoints included.
fn grid_angle(k: usize, d: usize, span: f64) -> f64 {
    span * k as f64 / (d - 1) as f64
}

/// Exhaustive search over real Bell amplitudes on a hyperspherical grid
/// with `grid_density` points per angle (θ₁, θ₂ ∈ [0, π], θ₃ ∈ [0, 2π]).
///
/// For each pure part the smallest feasible entangled weight is found by a
/// line search in `t = 1 − Λ`. Requires a real `ρ`; grids whose spacing
/// divides evenly are nested, so a finer grid never does worse.
pub fn ls_grid_search(rho: &TwoQubitDensityMatrix, grid_density: usize) -> Result<LsDecomposition> {
    if grid_density < 9 {
        return Err(Error::InvalidParams(format!("grid density {grid_density} below 9")));
    }
    rho.validate()?;
    if rho.max_imaginary() > 1e-12 {
        return Err(Error::InvalidParams("grid search requires a real density matrix".into()));
    }
    let r = rho.elements.map(|z| z.re);
    let c_rho = concurrence(rho)?;
    if lowest_eigenvalue(&transpose_second(&r)) >= -TOL_PPT {
        return Ok(LsDecomposition {
            lambda: 1.0,
            bell: None,
            rho_s: Some(rho.clone()),
            c_rho,
            c_rho_e: None,
            separable: true,
        });
    }

    let s = std::f64::consts::FRAC_1_SQRT_2;
    // Columns |ψ−⟩, |ψ+⟩, |φ−⟩, |φ+⟩.
    let bell = Matrix4::new(0.0, 0.0, s, s, s, s, 0.0, 0.0, -s, s, 0.0, 0.0, 0.0, 0.0, -s, s);
    let pi = std::f64::consts::PI;
    let d = grid_density;
    let mut best: Option<(f64, Vector4<f64>)> = None;
    for k1 in 0..d {
        let t1 = grid_angle(k1, d, pi);
        for k2 in 0..d {
            let t2 = grid_angle(k2, d, pi);
            for k3 in 0..d {
                let t3 = grid_angle(k3, d, 2.0 * pi);
                let coef = Vector4::new(
                    t1.cos(),
                    t1.sin() * t2.cos(),
                    t1.sin() * t2.sin() * t3.cos(),
                    t1.sin() * t2.sin() * t3.sin(),
                );
                let psi = bell * coef;
                let p = psi * psi.transpose();
                if let Some(t) = smallest_weight(&r, &p) {
                    if best.as_ref().map_or(true, |(bt, _)| t < *bt) {
                        best = Some((t, coef));
                    }
                }
            }
        }
    }
    let Some((t, coef)) = best else {
        // No grid point is feasible: everything is entangled weight.
        return Ok(LsDecomposition {
            lambda: 0.0,
            bell: None,
            rho_s: None,
            c_rho,
            c_rho_e: None,
            separable: false,
        });
    };
    let bell_coefficients = BellCoefficients::from_real(coef[0], coef[1], coef[2], coef[3])?;
    let lambda = 1.0 - t;
    let rho_s = (lambda > 1e-12).then(|| {
        let psi = bell * coef;
        let m = (r - psi * psi.transpose() * t) / lambda;
        TwoQubitDensityMatrix::from_matrix(m.map(|x| Complex64::new(x, 0.0)), rho.site_pair)
    });
    Ok(LsDecomposition {
        lambda,
        bell: Some(bell_coefficients),
        rho_s,
        c_rho,
        c_rho_e: Some(bell_coefficients.concurrence()),
        separable: false,
    })
}

//! Optimal Lewenstein-Sanpera decomposition.
//!
//! For a candidate pure part `ψ` the largest admissible entangled weight is
//! not what we want; we want the smallest weight `t` that leaves a separable
//! residual `ρ − tψψ†`. Writing `ψ = √ρ û / ‖√ρ û‖`, the residual is PSD for
//! every `t ≤ t_psd = ‖√ρ û‖²`, so only the PPT condition remains:
//! `f(t) = λ_min(ρ^Γ − t (ψψ†)^Γ) ≥ 0`. `f` is concave in `t` and negative
//! at `t = 0` for entangled `ρ`, so its first root `t₁(ψ)` is found by Newton
//! iteration from the left. The decomposition minimizes `t₁` over `û`, with
//! a penalty above every feasible value where no root exists below `t_psd`.
//!
//! When `ρ` has rank two the feasible `ψ` form a set of measure zero. Any
//! separable part is then a mixture of the (at most two) product vectors in
//! the range of `ρ`, and the optimum is found in closed form.

use nalgebra::{ComplexField, Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::nelder_mead::{minimize, NelderMeadOptions};
use super::{
    concurrence, pt_generic, psd_sqrt, BellCoefficients, BellMode, LsDecomposition, LsOptions, CLAMP_TOL,
    SEPARABLE_CONCURRENCE,
};
use crate::error::{Error, Result};
use crate::observables::{TwoQubitDensityMatrix, C4};

/// Weight of the constraint violation in the infeasible penalty.
const PENALTY_SLOPE: f64 = 10.0;
/// `f(t) ≥ −ROOT_TOL` counts as a root.
const ROOT_TOL: f64 = 1e-15;
const MAX_NEWTON: usize = 100;
/// `ρ` is treated as rank two when its third eigenvalue is below this.
const RANK_TOL: f64 = 1e-10;

const COARSE_EVALS: usize = 400;
const POLISHED: usize = 4;
const POLISH_ROUNDS: usize = 6;
const POLISH_EVALS: usize = 2000;
/// Polishing restarts stop once a round gains less than this.
const POLISH_GAIN: f64 = 1e-14;
/// Perturbation sizes of the random starts around the dominant eigenvector;
/// `None` draws an unbiased direction.
const START_SCALES: [Option<f64>; 5] = [Some(0.1), Some(0.3), Some(1.0), Some(3.0), None];

/// Field of the search amplitudes: real or complex.
pub(crate) trait Amplitude: ComplexField<RealField = f64> + Copy {
    const PARAMS: usize;
    fn vector(x: &[f64]) -> Vector4<Self>;
    fn params(v: &Vector4<Self>) -> Vec<f64>;
    fn lift(m: &C4) -> Matrix4<Self>;
    fn to_complex(self) -> Complex64;
}

impl Amplitude for f64 {
    const PARAMS: usize = 4;
    fn vector(x: &[f64]) -> Vector4<f64> {
        Vector4::from_column_slice(x)
    }
    fn params(v: &Vector4<f64>) -> Vec<f64> {
        v.iter().copied().collect()
    }
    fn lift(m: &C4) -> Matrix4<f64> {
        m.map(|z| z.re)
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Amplitude for Complex64 {
    const PARAMS: usize = 8;
    fn vector(x: &[f64]) -> Vector4<Complex64> {
        Vector4::from_fn(|k, _| Complex64::new(x[k], x[k + 4]))
    }
    fn params(v: &Vector4<Complex64>) -> Vec<f64> {
        v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect()
    }
    fn lift(m: &C4) -> Matrix4<Complex64> {
        *m
    }
    fn to_complex(self) -> Complex64 {
        self
    }
}

enum Outcome<T: Amplitude> {
    Feasible { t: f64, psi: Vector4<T> },
    Infeasible { penalty: f64 },
}

impl<T: Amplitude> Outcome<T> {
    fn value(&self) -> f64 {
        match self {
            Outcome::Feasible { t, .. } => *t,
            Outcome::Infeasible { penalty } => *penalty,
        }
    }
}

fn lowest<T: Amplitude>(m: Matrix4<T>) -> (f64, Vector4<T>) {
    let eig = SymmetricEigen::new(m);
    let i = eig.eigenvalues.imin();
    (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned())
}

/// Maximum of a unimodal `f` on `[lo, hi]`.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-12 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

struct Kernel<T: Amplitude> {
    pt_rho: Matrix4<T>,
    sqrt_rho: Matrix4<T>,
}

impl<T: Amplitude> Kernel<T> {
    fn new(rho: &C4) -> Result<Self> {
        Ok(Self { pt_rho: T::lift(&super::partial_transpose(rho)), sqrt_rho: T::lift(&psd_sqrt(rho)?) })
    }

    fn f(&self, pt_p: &Matrix4<T>, t: f64) -> (f64, Vector4<T>) {
        lowest(self.pt_rho - pt_p * T::from_real(t))
    }

    fn evaluate(&self, x: &[f64]) -> Outcome<T> {
        let fallback = Outcome::Infeasible { penalty: 1.0 + PENALTY_SLOPE };
        let u = T::vector(x);
        let nu = u.norm();
        if !(nu > 0.0) || !nu.is_finite() {
            return fallback;
        }
        let w = self.sqrt_rho * u.unscale(nu);
        let t_psd = w.norm_squared();
        if t_psd < 1e-300 {
            return fallback;
        }
        let psi = w.unscale(t_psd.sqrt());
        let pt_p = pt_generic(&(psi * psi.adjoint()));

        let (mut t, mut t_prev) = (0.0, 0.0);
        for _ in 0..MAX_NEWTON {
            let (f, v) = self.f(&pt_p, t);
            if f >= -ROOT_TOL {
                return Outcome::Feasible { t, psi };
            }
            let slope = -v.dotc(&(pt_p * v)).real();
            if slope <= 0.0 {
                // Concavity: f < 0 on all of [t, ∞); the maximum lies behind.
                let (tm, fm) = golden_max(|s| self.f(&pt_p, s).0, t_prev, t);
                return Outcome::Infeasible { penalty: 1.0 + tm + PENALTY_SLOPE * (-fm) };
            }
            let next = t - f / slope;
            if next >= t_psd {
                let (fp, _) = self.f(&pt_p, t_psd);
                if fp < -ROOT_TOL {
                    return Outcome::Infeasible { penalty: 1.0 + t_psd + PENALTY_SLOPE * (-fp) };
                }
                let (mut lo, mut hi) = (t, t_psd);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.f(&pt_p, mid).0 >= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return Outcome::Feasible { t: hi, psi };
            }
            t_prev = t;
            t = next;
        }
        Outcome::Feasible { t, psi }
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.evaluate(x).value()
    }
}

/// Eigenvectors of `ρ` ordered by decreasing eigenvalue.
fn eigen_starts<T: Amplitude>(rho: &C4) -> Vec<Vec<f64>> {
    let eig = SymmetricEigen::new(T::lift(rho));
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order.into_iter().map(|k| T::params(&eig.eigenvectors.column(k).into_owned())).collect()
}

fn start_point(index: usize, eigvecs: &[Vec<f64>], seed: u64, dim: usize) -> Vec<f64> {
    if index < eigvecs.len() {
        return eigvecs[index].clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    match START_SCALES[index % START_SCALES.len()] {
        Some(scale) => eigvecs[0].iter().zip(&g).map(|(e, x)| e + scale * x).collect(),
        None => g,
    }
}

/// Deterministic multi-start search; returns the minimizing parameters.
fn search<T: Amplitude>(kernel: &Kernel<T>, rho: &C4, opts: &LsOptions) -> Vec<f64> {
    let eigvecs = eigen_starts::<T>(rho);
    let starts = opts.starts.max(1);
    let coarse = NelderMeadOptions { max_evals: COARSE_EVALS, xatol: 1e-6, fatol: 1e-9, ..Default::default() };
    let mut found: Vec<(f64, usize, Vec<f64>)> = (0..starts)
        .into_par_iter()
        .map(|s| {
            let x0 = start_point(s, &eigvecs, opts.seed, T::PARAMS);
            let m = minimize(|x| kernel.objective(x), &x0, &coarse);
            (m.value, s, m.x)
        })
        .collect();
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    found.truncate(POLISHED);

    let fine = NelderMeadOptions {
        max_evals: POLISH_EVALS,
        xatol: 1e-12,
        fatol: 1e-15,
        adaptive: true,
        ..Default::default()
    };
    let polished: Vec<(f64, usize, Vec<f64>)> = found
        .into_par_iter()
        .enumerate()
        .map(|(rank, (value, _, mut x))| {
            let mut best = value;
            for _ in 0..POLISH_ROUNDS {
                let m = minimize(|y| kernel.objective(y), &x, &fine);
                let gain = best - m.value;
                if m.value <= best {
                    best = m.value;
                    x = m.x;
                }
                if gain < POLISH_GAIN {
                    break;
                }
            }
            (best, rank, x)
        })
        .collect();
    polished
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, _, x)| x)
        .expect("at least one start")
}

/// Minimal entangled weight and its pure part, or the best infeasible guess.
fn solve<T: Amplitude>(rho: &C4, opts: &LsOptions) -> Result<std::result::Result<(f64, [Complex64; 4]), [Complex64; 4]>> {
    let kernel = Kernel::<T>::new(rho)?;
    let x = search(&kernel, rho, opts);
    Ok(match kernel.evaluate(&x) {
        Outcome::Feasible { t, psi } => Ok((t, [0, 1, 2, 3].map(|k| psi[k].to_complex()))),
        Outcome::Infeasible { .. } => {
            let top = T::vector(&eigen_starts::<T>(rho)[0]);
            Err([0, 1, 2, 3].map(|k| top[k].to_complex()))
        }
    })
}

fn det2(m: [Complex64; 4]) -> Complex64 {
    m[0] * m[3] - m[1] * m[2]
}

/// Optimal decomposition of a rank-two `ρ`, or `None` for higher rank.
fn rank_two(rho: &C4) -> Option<(f64, [Complex64; 4])> {
    let eig = SymmetricEigen::new((rho + rho.adjoint()) * Complex64::new(0.5, 0.0));
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    if eig.eigenvalues[order[2]] > RANK_TOL || eig.eigenvalues[order[1]] <= RANK_TOL {
        return None;
    }
    let mu = [eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]];
    let v: Vec<Vector4<Complex64>> = order[..2].iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect();

    // x = c0 v0 + c1 v1 is a product vector iff det of its 2×2 reshape vanishes:
    // c0² d0 + c0 c1 m + c1² d1 = 0.
    let shape = |x: &Vector4<Complex64>| [x[0], x[1], x[2], x[3]];
    let (d0, d1) = (det2(shape(&v[0])), det2(shape(&v[1])));
    let m = det2(shape(&(v[0] + v[1]))) - d0 - d1;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let scale = d0.norm().max(d1.norm()).max(m.norm());
    if scale < 1e-14 {
        return None;
    }
    let coords: Vec<[Complex64; 2]> = if d0.norm() >= d1.norm() && d0.norm() > 1e-14 * scale {
        let disc = (m * m - d0 * d1 * 4.0).sqrt();
        [(-m + disc) / (d0 * 2.0), (-m - disc) / (d0 * 2.0)].iter().map(|&z| [z, one]).collect()
    } else if d1.norm() > 1e-14 * scale {
        let disc = (m * m - d0 * d1 * 4.0).sqrt();
        [(-m + disc) / (d1 * 2.0), (-m - disc) / (d1 * 2.0)].iter().map(|&z| [one, z]).collect()
    } else {
        vec![[one, zero], [zero, one]]
    };

    // Whitened coordinates: the separable weight p₁ + p₂ is maximal subject to
    // I − p₁ q₁q₁† − p₂ q₂q₂† ⪰ 0, with c_k normalized.
    let q: Vec<[Complex64; 2]> = coords
        .iter()
        .map(|c| {
            let n = (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
            [c[0] / n / mu[0].sqrt(), c[1] / n / mu[1].sqrt()]
        })
        .collect();
    let alpha = q[0][0].norm_sqr() + q[0][1].norm_sqr();
    let beta = q[1][0].norm_sqr() + q[1][1].norm_sqr();
    let overlap = (q[0][0].conj() * q[1][0] + q[0][1].conj() * q[1][1]).norm();
    let gamma = alpha * beta - overlap * overlap;
    let mut candidates = vec![(1.0 / alpha, 0.0), (0.0, 1.0 / beta)];
    if gamma > 1e-14 * alpha * beta {
        let p1 = ((beta - overlap) / gamma).clamp(0.0, 1.0 / alpha);
        let p2 = (1.0 - alpha * p1) / (beta - gamma * p1);
        if p2 >= 0.0 {
            candidates.push((p1, p2));
        }
    }
    let (p1, p2) = candidates.into_iter().max_by(|a, b| (a.0 + a.1).total_cmp(&(b.0 + b.1)))?;

    // Rank-one remainder in the range of ρ.
    let mut rem = nalgebra::Matrix2::<Complex64>::new(
        Complex64::new(mu[0], 0.0),
        zero,
        zero,
        Complex64::new(mu[1], 0.0),
    );
    for (c, p) in coords.iter().zip([p1, p2]) {
        let n2 = c[0].norm_sqr() + c[1].norm_sqr();
        let cv = nalgebra::Vector2::new(c[0], c[1]);
        rem -= cv * cv.adjoint() * Complex64::new(p / n2, 0.0);
    }
    let re = SymmetricEigen::new(rem);
    let top = re.eigenvalues.imax();
    let t = re.eigenvalues[top].max(0.0);
    let e = re.eigenvectors.column(top);
    let psi = v[0] * e[0] + v[1] * e[1];
    let psi = psi.unscale(psi.norm());
    Some((t, [psi[0], psi[1], psi[2], psi[3]]))
}

/// [`ls_decompose_with`] under default options.
pub fn ls_decompose(rho: &TwoQubitDensityMatrix) -> Result<LsDecomposition> {
    ls_decompose_with(rho, &LsOptions::default())
}

/// Maximizes the separable weight `Λ`.
///
/// Fails with [`Error::Certificate`] when no feasible pure part is found, or
/// when the optimum violates `|C(ρ) − (1 − Λ) C(ρ_e)| ≤ opts.cert_tol`
/// although [`LsDecomposition::certificate_applies`].
pub fn ls_decompose_with(rho: &TwoQubitDensityMatrix, opts: &LsOptions) -> Result<LsDecomposition> {
    rho.validate()?;
    let c_rho = concurrence(rho)?;
    if c_rho < SEPARABLE_CONCURRENCE {
        return Ok(LsDecomposition {
            lambda: 1.0,
            bell: None,
            rho_s: Some(rho.clone()),
            c_rho,
            c_rho_e: None,
            separable: true,
        });
    }

    let complex = opts.mode == BellMode::Complex || rho.max_imaginary() > CLAMP_TOL;
    let solved = if let Some(found) = rank_two(&rho.elements) {
        Ok(found)
    } else if complex {
        solve::<Complex64>(&rho.elements, opts)?
    } else {
        solve::<f64>(&rho.elements, opts)?
    };

    let (t, psi) = match solved {
        Ok(found) => found,
        Err(guess) => {
            let bell = BellCoefficients::from_state(&guess)?;
            let best = LsDecomposition {
                lambda: 0.0,
                bell: Some(bell),
                rho_s: None,
                c_rho,
                c_rho_e: Some(bell.concurrence()),
                separable: false,
            };
            let gap = best.certificate_gap();
            return Err(Error::Certificate { best: Box::new(best), gap });
        }
    };

    let t = t.clamp(0.0, 1.0);
    let lambda = 1.0 - t;
    let bell = BellCoefficients::from_state(&psi)?;
    let rho_s = (lambda > 1e-12).then(|| {
        let pure = TwoQubitDensityMatrix::pure(&psi).elements;
        let m = (rho.elements - pure * Complex64::new(t, 0.0)) / Complex64::new(lambda, 0.0);
        TwoQubitDensityMatrix::from_matrix(m, rho.site_pair)
    });
    let decomposition =
        LsDecomposition { lambda, bell: Some(bell), rho_s, c_rho, c_rho_e: Some(bell.concurrence()), separable: false };
    let gap = decomposition.certificate_gap();
    if gap > opts.cert_tol && decomposition.certificate_applies() {
        return Err(Error::Certificate { best: Box::new(decomposition), gap });
    }
    Ok(decomposition)
}

//! Infinite-system DMRG for the open chain.
//!
//! Each step enlarges a left and a right block by one site, diagonalizes the
//! superblock `L • s s • R` with the Lanczos kernel, and truncates each
//! enlarged block to its `kept_states` dominant reduced-density-matrix
//! eigenvectors. The two blocks are grown separately because the staggered
//! pin breaks the left/right reflection symmetry.

use nalgebra::{DMatrix, Matrix4, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lanczos::{self, LanczosConfig};
use crate::error::{Error, Result};
use crate::observables::TwoQubitDensityMatrix;
use crate::spin_model::{ModelParams, XyzCouplings};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmrgConfig {
    /// Block states kept after truncation (m).
    pub kept_states: usize,
    /// Maximum number of growth steps.
    pub max_iterations: usize,
    /// Convergence threshold on the change of energy per site.
    pub energy_tol: f64,
    /// Residual tolerance of the superblock Lanczos solve.
    pub lanczos_tol: f64,
    pub seed: u64,
}

impl Default for DmrgConfig {
    fn default() -> Self {
        Self { kept_states: 64, max_iterations: 1000, energy_tol: 1e-9, lanczos_tol: 1e-10, seed: 0 }
    }
}

pub const MAX_KEPT_STATES: usize = 256;
const CONVERGED_STEPS: usize = 3;

impl DmrgConfig {
    pub fn with_kept_states(mut self, m: usize) -> Self {
        self.kept_states = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kept_states < 4 || self.kept_states > MAX_KEPT_STATES {
            return Err(Error::InvalidParams(format!(
                "kept_states must lie in [4, {MAX_KEPT_STATES}], got {}",
                self.kept_states
            )));
        }
        if !(self.energy_tol > 0.0) {
            return Err(Error::InvalidParams("energy_tol must be positive".into()));
        }
        if self.max_iterations < CONVERGED_STEPS + 2 {
            return Err(Error::InvalidParams("max_iterations too small".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IdmrgResult {
    pub energy_per_site: f64,
    /// Reduced density matrix of the two central sites.
    pub central_rdm: TwoQubitDensityMatrix,
    /// Largest discarded weight over the last converged steps.
    pub truncated_weight: f64,
    /// Number of growth steps performed.
    pub steps: usize,
    /// Total chain length of the final superblock.
    pub chain_length: usize,
    pub warnings: Vec<String>,
}

/// Spin operators in the real representation; `isy` is `i·Sy`.
struct SiteOps {
    sx: DMatrix<f64>,
    isy: DMatrix<f64>,
    sz: DMatrix<f64>,
}

impl SiteOps {
    fn new() -> Self {
        Self {
            sx: DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]),
            isy: DMatrix::from_row_slice(2, 2, &[0.0, 0.5, -0.5, 0.0]),
            sz: DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -0.5]),
        }
    }
}

#[derive(Clone)]
struct Block {
    h: DMatrix<f64>,
    /// Operators of the site at the inner edge of the block.
    sx: DMatrix<f64>,
    isy: DMatrix<f64>,
    sz: DMatrix<f64>,
}

impl Block {
    fn dim(&self) -> usize {
        self.h.nrows()
    }

    fn single(site_h: &DMatrix<f64>, ops: &SiteOps) -> Self {
        Self { h: site_h.clone(), sx: ops.sx.clone(), isy: ops.isy.clone(), sz: ops.sz.clone() }
    }

    /// Block ⊗ site with the new site at the inner edge; index `b * 2 + s`.
    fn enlarge(&self, site_h: &DMatrix<f64>, ops: &SiteOps, j: &XyzCouplings) -> Self {
        let id_b = DMatrix::<f64>::identity(self.dim(), self.dim());
        let id_s = DMatrix::<f64>::identity(2, 2);
        let mut h = self.h.kronecker(&id_s) + id_b.kronecker(site_h);
        h += j.jx * self.sx.kronecker(&ops.sx);
        h -= j.jy * self.isy.kronecker(&ops.isy);
        h += j.jz * self.sz.kronecker(&ops.sz);
        Self {
            h,
            sx: id_b.kronecker(&ops.sx),
            isy: id_b.kronecker(&ops.isy),
            sz: id_b.kronecker(&ops.sz),
        }
    }

    fn project(&self, o: &DMatrix<f64>) -> Self {
        let ot = o.transpose();
        Self {
            h: &ot * &self.h * o,
            sx: &ot * &self.sx * o,
            isy: &ot * &self.isy * o,
            sz: &ot * &self.sz * o,
        }
    }
}

/// Onsite term `-h Sx + c Sz` with `c = -ε(-1)^i`.
fn site_hamiltonian(h: f64, c: f64, ops: &SiteOps) -> DMatrix<f64> {
    -h * &ops.sx + c * &ops.sz
}

/// Dominant eigenvectors of a density matrix and the discarded weight.
fn truncation(rho: DMatrix<f64>, m: usize) -> (DMatrix<f64>, f64) {
    let d = rho.nrows();
    let eig = SymmetricEigen::new(rho);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let keep = m.min(d);
    let mut o = DMatrix::zeros(d, keep);
    for (k, &i) in order.iter().take(keep).enumerate() {
        o.set_column(k, &eig.eigenvectors.column(i));
    }
    let kept: f64 = order.iter().take(keep).map(|&i| eig.eigenvalues[i]).sum();
    (o, (1.0 - kept).max(0.0))
}

/// RDM of the two inner-edge sites for a superblock wavefunction with rows
/// `bL*2 + sL` and columns `bR*2 + sR`.
fn central_rdm(psi: &DMatrix<f64>, left_site: usize) -> TwoQubitDensityMatrix {
    let dl = psi.nrows() / 2;
    let dr = psi.ncols() / 2;
    let mut rho = Matrix4::<Complex64>::zeros();
    for a in 0..4 {
        for b in 0..4 {
            let (sl, sr) = (a / 2, a % 2);
            let (tl, tr) = (b / 2, b % 2);
            let mut acc = 0.0;
            for bl in 0..dl {
                for br in 0..dr {
                    acc += psi[(bl * 2 + sl, br * 2 + sr)] * psi[(bl * 2 + tl, br * 2 + tr)];
                }
            }
            rho[(a, b)] = Complex64::new(acc, 0.0);
        }
    }
    TwoQubitDensityMatrix::from_matrix(rho, (left_site, left_site + 1))
}

struct Superblock<'a> {
    left: &'a Block,
    right: &'a Block,
    j: XyzCouplings,
}

impl Superblock<'_> {
    /// `y = H x` with `x` the column-major flattening of Ψ (dL × dR).
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (dl, dr) = (self.left.dim(), self.right.dim());
        let psi = DMatrix::from_column_slice(dl, dr, x);
        let mut out = &self.left.h * &psi + &psi * &self.right.h;
        out += self.j.jx * (&self.left.sx * &psi * self.right.sx.transpose());
        out -= self.j.jy * (&self.left.isy * &psi * self.right.isy.transpose());
        out += self.j.jz * (&self.left.sz * &psi * self.right.sz.transpose());
        y.copy_from_slice(out.as_slice());
    }
}

/// Runs infinite-system DMRG and returns the bulk energy per site together
/// with the RDM of the central bond.
///
/// The reported bond always has an even (1-based) left site, matching the
/// central bond `(N/2, N/2 + 1)` of an open chain with `N ≡ 0 mod 4`.
pub fn idmrg_ground_state(params: &ModelParams, cfg: &DmrgConfig) -> Result<IdmrgResult> {
    params.validate()?;
    cfg.validate()?;
    let j = params.couplings();
    let ops = SiteOps::new();
    let eps = params.pin_eps;
    // Left site p (1-based from the left end) gets c = -ε(-1)^p; the right
    // site q from the right end gets c = +ε(-1)^q.
    let left_c = |p: usize| if p % 2 == 0 { -eps } else { eps };
    let right_c = |q: usize| -left_c(q);
    let lanczos_cfg = LanczosConfig { tol: cfg.lanczos_tol, ..Default::default() };

    let mut left = Block::single(&site_hamiltonian(params.h, left_c(1), &ops), &ops);
    let mut right = Block::single(&site_hamiltonian(params.h, right_c(1), &ops), &ops);
    let mut k = 1usize; // sites per block

    let mut prev_energy: Option<f64> = None;
    let mut prev_e_site: Option<f64> = None;
    let mut quiet_steps = 0usize;
    let mut last_delta = f64::INFINITY;
    let mut max_trunc_recent = 0.0f64;
    let mut warnings = Vec::new();

    for step in 1..=cfg.max_iterations {
        let left_big = left.enlarge(&site_hamiltonian(params.h, left_c(k + 1), &ops), &ops, &j);
        let right_big = right.enlarge(&site_hamiltonian(params.h, right_c(k + 1), &ops), &ops, &j);
        let sb = Superblock { left: &left_big, right: &right_big, j };
        let dim = left_big.dim() * right_big.dim();
        let start = lanczos::random_start(dim, cfg.seed.wrapping_add(step as u64), &[]);
        let ground = lanczos::lowest_eigenpair(dim, |x, y| sb.apply(x, y), start, &[], &lanczos_cfg)?;
        let psi = DMatrix::from_column_slice(left_big.dim(), right_big.dim(), &ground.vector);
        let chain_length = 2 * k + 2;

        let e_site = prev_energy.map(|e| 0.5 * (ground.value - e));
        prev_energy = Some(ground.value);
        if let (Some(e), Some(p)) = (e_site, prev_e_site) {
            last_delta = (e - p).abs();
            if last_delta < cfg.energy_tol {
                quiet_steps += 1;
            } else {
                quiet_steps = 0;
                max_trunc_recent = 0.0;
            }
        }
        prev_e_site = e_site.or(prev_e_site);

        let rho_l = &psi * psi.transpose();
        let rho_r = psi.transpose() * &psi;
        let (ol, wl) = truncation(rho_l, cfg.kept_states);
        let (or, wr) = truncation(rho_r, cfg.kept_states);
        max_trunc_recent = max_trunc_recent.max(wl).max(wr);

        // Left center site index k + 1 (1-based) must be even.
        let left_center_even = (k + 1) % 2 == 0;
        if quiet_steps >= CONVERGED_STEPS && left_center_even {
            if max_trunc_recent > cfg.energy_tol {
                warnings.push(format!(
                    "discarded weight {max_trunc_recent:.2e} exceeds energy_tol {:.0e}; increase kept_states",
                    cfg.energy_tol
                ));
            }
            return Ok(IdmrgResult {
                energy_per_site: e_site.expect("converged after several steps"),
                central_rdm: central_rdm(&psi, k),
                truncated_weight: max_trunc_recent,
                steps: step,
                chain_length,
                warnings,
            });
        }

        left = left_big.project(&ol);
        right = right_big.project(&or);
        k += 1;
    }
    Err(Error::Convergence { iterations: cfg.max_iterations, residual: last_delta })
}

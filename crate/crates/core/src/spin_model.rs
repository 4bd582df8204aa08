//! Anisotropic S=1/2 Heisenberg chain in a transverse field.
//!
//! ```text
//! H = Σ_i [ J∥ (Sx_i Sx_i+1 + Sy_i Sy_i+1) + J⊥ Sz_i Sz_i+1 ]
//!     - h Σ_i Sx_i - ε Σ_i (-1)^i Sz_i
//! ```
//!
//! Spins are S = σ/2. Sites are numbered from 0 in code; the staggered sign
//! follows the 1-based convention, so site `k` carries `(-1)^(k+1)`.
//!
//! Basis states are bit strings with site 0 as the most significant bit and
//! bit value 0 meaning spin up. All matrix elements are real.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest chain handled by exact diagonalization.
pub const MAX_ED_SITES: usize = 24;
/// Largest chain that may be materialized as a dense matrix.
pub const MAX_DENSE_SITES: usize = 12;
/// Upper bound on the staggered pinning amplitude.
pub const MAX_PIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

/// Spin frame in which the chain is written.
///
/// `Lab` is the literal Hamiltonian. `Ordered` applies a π/2 rotation about
/// the field axis whenever `j_par > j_perp`, so that the antiferromagnetic
/// easy axis (y in the lab frame) becomes the Sz quantization axis. The two
/// frames are unitarily equivalent; only the measurement basis and the
/// direction of the pinning field change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    #[default]
    Lab,
    Ordered,
}

/// Couplings of the equivalent XYZ form `Σ Jx SxSx + Jy SySy + Jz SzSz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XyzCouplings {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Easy-plane exchange J∥.
    pub j_par: f64,
    /// Easy-axis exchange J⊥.
    pub j_perp: f64,
    /// Transverse field along x.
    pub h: f64,
    pub n_sites: usize,
    pub boundary: Boundary,
    /// Staggered pinning amplitude along z.
    pub pin_eps: f64,
    pub frame: Frame,
}

impl ModelParams {
    /// Open chain, no pinning, lab frame.
    pub fn new(j_par: f64, j_perp: f64, h: f64, n_sites: usize) -> Self {
        Self {
            j_par,
            j_perp,
            h,
            n_sites,
            boundary: Boundary::Open,
            pin_eps: 0.0,
            frame: Frame::Lab,
        }
    }

    pub fn ising(h: f64, n_sites: usize) -> Self {
        Self::new(0.0, 1.0, h, n_sites)
    }

    pub fn xy(h: f64, n_sites: usize) -> Self {
        Self::new(1.0, 0.0, h, n_sites)
    }

    pub fn with_pin(mut self, pin_eps: f64) -> Self {
        self.pin_eps = pin_eps;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    pub fn with_field(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.j_par, self.j_perp, self.h, self.pin_eps]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("non-finite model parameter".into()));
        }
        if self.j_par < 0.0 || self.j_perp < 0.0 {
            return Err(Error::InvalidParams(format!(
                "couplings must be non-negative (j_par={}, j_perp={})",
                self.j_par, self.j_perp
            )));
        }
        if self.h < 0.0 {
            return Err(Error::InvalidParams(format!("field must be non-negative (h={})", self.h)));
        }
        if self.n_sites < 2 {
            return Err(Error::InvalidParams(format!("need at least 2 sites, got {}", self.n_sites)));
        }
        if !(0.0..=MAX_PIN).contains(&self.pin_eps) {
            return Err(Error::InvalidParams(format!(
                "pin_eps must lie in [0, {MAX_PIN}], got {}",
                self.pin_eps
            )));
        }
        Ok(())
    }

    /// True when the `Ordered` frame actually rotates this model.
    pub fn is_rotated(&self) -> bool {
        self.frame == Frame::Ordered && self.j_par > self.j_perp
    }

    pub fn couplings(&self) -> XyzCouplings {
        if self.is_rotated() {
            // (Sx, Sy, Sz) -> (Sx, -Sz, Sy)
            XyzCouplings { jx: self.j_par, jy: self.j_perp, jz: self.j_par }
        } else {
            XyzCouplings { jx: self.j_par, jy: self.j_par, jz: self.j_perp }
        }
    }

    /// Bonds as 0-based site pairs.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.n_sites;
        let mut bonds: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        if self.boundary == Boundary::Periodic && n > 2 {
            bonds.push((n - 1, 0));
        }
        bonds
    }

    pub fn dimension(&self) -> usize {
        1usize << self.n_sites
    }
}

/// Staggered sign `(-1)^i` of 0-based site `k` (1-based `i = k + 1`).
pub fn staggered_sign(k: usize) -> f64 {
    if k % 2 == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Bit mask of 0-based site `k` in a chain of `n` sites.
#[inline]
pub fn site_mask(n: usize, k: usize) -> usize {
    1usize << (n - 1 - k)
}

/// `+1/2` for spin up (bit clear), `-1/2` for spin down.
#[inline]
pub fn sz_value(state: usize, mask: usize) -> f64 {
    if state & mask == 0 {
        0.5
    } else {
        -0.5
    }
}

#[derive(Debug, Clone, Copy)]
struct PairFlip {
    mask_i: usize,
    mask_j: usize,
    /// Amplitude when the two spins are parallel: (Jx - Jy)/4.
    parallel: f64,
    /// Amplitude when antiparallel: (Jx + Jy)/4.
    antiparallel: f64,
}

/// Real symmetric operator on the 2^N computational basis.
///
/// Stores the diagonal and a list of spin-flip generators; matrix elements
/// are produced on the fly.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    n_sites: usize,
    diagonal: Vec<f64>,
    pair_flips: Vec<PairFlip>,
    single_flips: Vec<(usize, f64)>,
}

impl SparseOperator {
    pub fn dimension(&self) -> usize {
        self.diagonal.len()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// Nonzero entries of row `r` as `(column, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let d = self.diagonal[r];
        let diag = (d != 0.0).then_some((r, d));
        let pairs = self.pair_flips.iter().filter_map(move |p| {
            let parallel = ((r & p.mask_i) == 0) == ((r & p.mask_j) == 0);
            let v = if parallel { p.parallel } else { p.antiparallel };
            (v != 0.0).then_some((r ^ p.mask_i ^ p.mask_j, v))
        });
        let singles = self
            .single_flips
            .iter()
            .filter_map(move |&(m, v)| (v != 0.0).then_some((r ^ m, v)));
        diag.into_iter().chain(pairs).chain(singles)
    }

    /// All nonzero entries `(row, col, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dimension()).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        use rayon::prelude::*;
        assert_eq!(x.len(), self.dimension());
        assert_eq!(y.len(), self.dimension());
        y.par_iter_mut().enumerate().for_each(|(r, yr)| {
            *yr = self.row(r).map(|(c, v)| v * x[c]).sum();
        });
    }

    /// Dense copy; only allowed for chains of at most [`MAX_DENSE_SITES`].
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        if self.n_sites > MAX_DENSE_SITES {
            return Err(Error::Capacity { n_sites: self.n_sites, max_sites: MAX_DENSE_SITES });
        }
        let dim = self.dimension();
        let mut m = DMatrix::zeros(dim, dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] += v;
        }
        Ok(m)
    }
}

pub fn build_hamiltonian(params: &ModelParams) -> Result<SparseOperator> {
    params.validate()?;
    let n = params.n_sites;
    if n > MAX_ED_SITES {
        return Err(Error::Capacity { n_sites: n, max_sites: MAX_ED_SITES });
    }
    let XyzCouplings { jx, jy, jz } = params.couplings();
    let bonds = params.bonds();
    let masks: Vec<usize> = (0..n).map(|k| site_mask(n, k)).collect();
    let pins: Vec<f64> = (0..n).map(|k| -params.pin_eps * staggered_sign(k)).collect();

    let dim = params.dimension();
    let diagonal = (0..dim)
        .map(|s| {
            let zz: f64 = bonds
                .iter()
                .map(|&(i, j)| jz * sz_value(s, masks[i]) * sz_value(s, masks[j]))
                .sum();
            let pin: f64 = (0..n).map(|k| pins[k] * sz_value(s, masks[k])).sum();
            zz + pin
        })
        .collect();

    let pair_flips = bonds
        .iter()
        .map(|&(i, j)| PairFlip {
            mask_i: masks[i],
            mask_j: masks[j],
            parallel: 0.25 * (jx - jy),
            antiparallel: 0.25 * (jx + jy),
        })
        .collect();
    let single_flips = masks.iter().map(|&m| (m, -0.5 * params.h)).collect();

    Ok(SparseOperator { n_sites: n, diagonal, pair_flips, single_flips })
}

/// Field at which the ground state is an exact product state.
pub fn classical_point(params: &ModelParams) -> f64 {
    (2.0 * params.j_par * (params.j_par + params.j_perp)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn spectrum(p: &ModelParams) -> Vec<f64> {
        let h = build_hamiltonian(p).unwrap().to_dense().unwrap();
        let mut e: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    #[test]
    fn two_site_ising_spectrum() {
        let e = spectrum(&ModelParams::ising(0.0, 2));
        let want = [-0.25, -0.25, 0.25, 0.25];
        for (a, b) in e.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn two_site_heisenberg_singlet() {
        let e = spectrum(&ModelParams::new(1.0, 1.0, 0.0, 2));
        assert!((e[0] + 0.75).abs() < 1e-14);
        assert!((e[1] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn hamiltonian_is_symmetric() {
        for p in [
            ModelParams::new(0.7, 0.3, 0.9, 6).with_pin(0.05),
            ModelParams::new(1.0, 0.0, 1.2, 5).with_boundary(Boundary::Periodic),
            ModelParams::xy(0.4, 6).with_frame(Frame::Ordered).with_pin(0.01),
        ] {
            let m = build_hamiltonian(&p).unwrap().to_dense().unwrap();
            assert_eq!((&m - m.transpose()).amax(), 0.0);
        }
    }

    #[test]
    fn zero_field_conserves_total_sz() {
        let p = ModelParams::new(0.8, 0.5, 0.0, 6);
        let h = build_hamiltonian(&p).unwrap();
        // Every nonzero element connects states of equal magnetization.
        for (r, c, _) in h.entries() {
            assert_eq!(r.count_ones(), c.count_ones());
        }
        let h = build_hamiltonian(&p.with_field(0.3)).unwrap();
        assert!(h.entries().any(|(r, c, _)| r.count_ones() != c.count_ones()));
    }

    #[test]
    fn sublattice_rotation_maps_afm_to_fm_ising() {
        // Flipping Sz on odd sites sends J⊥ -> -J⊥ when J∥ = 0. Build the FM
        // chain by hand since negative couplings are rejected by validation.
        let n = 6;
        let afm = spectrum(&ModelParams::ising(0.4, n));
        let dim = 1 << n;
        let mut fm = DMatrix::<f64>::zeros(dim, dim);
        for s in 0..dim {
            for k in 0..n - 1 {
                fm[(s, s)] -= sz_value(s, site_mask(n, k)) * sz_value(s, site_mask(n, k + 1));
            }
            for k in 0..n {
                fm[(s ^ site_mask(n, k), s)] -= 0.2;
            }
        }
        let mut e: Vec<f64> = SymmetricEigen::new(fm).eigenvalues.iter().copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((e[0] - afm[0]).abs() < 1e-12);
    }

    #[test]
    fn ordered_frame_is_unitarily_equivalent() {
        let lab = spectrum(&ModelParams::new(1.0, 0.3, 0.8, 6));
        let rot = spectrum(&ModelParams::new(1.0, 0.3, 0.8, 6).with_frame(Frame::Ordered));
        for (a, b) in lab.iter().zip(&rot) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pin_direction() {
        // Site 0 has 1-based index 1, so -ε(-1)^1 Sz = +ε Sz: spin down is favoured.
        let p = ModelParams::ising(0.0, 2).with_pin(0.01);
        let h = build_hamiltonian(&p).unwrap();
        let d = h.diagonal();
        // |↓↑> = bits 10 = index 2 is the unique ground state.
        let min = (0..4).min_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap()).unwrap();
        assert_eq!(min, 2);
    }

    #[test]
    fn capacity_and_validation() {
        assert!(matches!(
            build_hamiltonian(&ModelParams::ising(0.5, 25)),
            Err(Error::Capacity { .. })
        ));
        assert!(ModelParams::ising(0.5, 13).validate().is_ok());
        assert!(matches!(
            build_hamiltonian(&ModelParams::ising(0.5, 13)).unwrap().to_dense(),
            Err(Error::Capacity { .. })
        ));
        assert!(ModelParams::ising(0.5, 1).validate().is_err());
        assert!(ModelParams::ising(-0.5, 4).validate().is_err());
        assert!(ModelParams::ising(0.5, 4).with_pin(0.2).validate().is_err());
        assert!(ModelParams::new(-1.0, 1.0, 0.0, 4).validate().is_err());
    }

    #[test]
    fn classical_points() {
        assert!((classical_point(&ModelParams::xy(0.0, 2)) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(classical_point(&ModelParams::ising(0.0, 2)), 0.0);
        assert_eq!(classical_point(&ModelParams::new(1.0, 1.0, 0.0, 2)), 2.0);
    }

    proptest::proptest! {
        #[test]
        fn classical_point_is_monotone(a in 0.0..3.0f64, b in 0.0..3.0f64, da in 0.0..1.0f64, db in 0.0..1.0f64) {
            let base = classical_point(&ModelParams::new(a, b, 0.0, 2));
            proptest::prop_assert!(classical_point(&ModelParams::new(a + da, b, 0.0, 2)) >= base);
            proptest::prop_assert!(classical_point(&ModelParams::new(a, b + db, 0.0, 2)) >= base);
        }
    }
}

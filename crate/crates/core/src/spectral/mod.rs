//! Frequency-domain analysis of the linearization at the ring.
//!
//! For each `k` the Fourier block is the Hermitian matrix
//!
//! * vortex: `m_k(nu) = -nu D_k + B_k`
//! * filament: `m_k(nu) = nu^2 Q_k - 2 gamma nu D_k + B_k`
//!
//! where `D_k` is the image of `i J K` and `Q_k` that of `K^2` in the
//! coordinates of [`crate::symmetry`]. When `mu = 0` the central element
//! decouples and the coupled blocks are reduced to their peripheral part.

mod points;
mod regions;
mod stability;

pub use points::{
    bif_points, check_degeneracy, default_scan_window, filament_bif_points, scan_bif_points,
    vortex_bif_points, BifurcationPoint, PointLabel, Provenance, ScanOutcome, SymmetryLabel,
    DEFAULT_GRID,
};
pub use regions::{morse_region_classify, RegionReport};
pub use stability::{stability_window, StabilityCheck, StabilityReport};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{complex_eigenvalues, hermitian_eigenvalues};
use crate::model::{ProblemKind, ProblemParams};
use crate::symmetry::{analytic_bk, BlockShape};
use crate::C64;

/// Eigenvalues with modulus at most this are counted as kernel, not as negative.
pub const TOL_ZERO: f64 = 1e-9;

/// Coefficients of `m_k(nu) = nu^2 quad - nu lin + constant`.
#[derive(Debug, Clone)]
pub struct BlockPencil {
    pub k: usize,
    pub quad: DMatrix<C64>,
    pub lin: DMatrix<C64>,
    pub constant: DMatrix<C64>,
    /// True when the central coordinates were dropped because `mu = 0`.
    pub reduced: bool,
}

impl BlockPencil {
    pub fn eval(&self, nu: C64) -> DMatrix<C64> {
        &self.quad * (nu * nu) - &self.lin * nu + &self.constant
    }

    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    pub fn is_linear(&self) -> bool {
        self.quad.iter().all(|z| z.norm() == 0.0)
    }
}

/// `i J = [[0, -i], [i, 0]]` as the lower-right 2x2 part of `D_k`.
fn ij_into(m: &mut DMatrix<C64>, offset: usize, scale: f64) {
    m[(offset, offset + 1)] = C64::new(0.0, -scale);
    m[(offset + 1, offset)] = C64::new(0.0, scale);
}

pub fn block_pencil(k: usize, params: &ProblemParams) -> Result<BlockPencil> {
    let n = params.n;
    let shape = BlockShape::of(n, k)?;
    let mu = params.mu;
    let dim = shape.dim();
    let b = analytic_bk(params, k)?;
    let zero = C64::new(0.0, 0.0);
    let mut d = DMatrix::from_element(dim, dim, zero);
    let mut q = DMatrix::from_element(dim, dim, zero);
    let c = shape.central_dim();
    match shape {
        BlockShape::Peripheral => {}
        BlockShape::Coupled { conjugate } => {
            d[(0, 0)] = C64::new(if conjugate { -mu } else { mu }, 0.0);
            q[(0, 0)] = C64::new(mu * mu, 0.0);
        }
        BlockShape::PairCoupled => {
            ij_into(&mut d, 0, mu);
            q[(0, 0)] = C64::new(mu * mu, 0.0);
            q[(1, 1)] = C64::new(mu * mu, 0.0);
        }
    }
    ij_into(&mut d, c, 1.0);
    q[(c, c)] = C64::new(1.0, 0.0);
    q[(c + 1, c + 1)] = C64::new(1.0, 0.0);

    let (lin, quad) = match params.kind {
        ProblemKind::Vortex => (d, DMatrix::from_element(dim, dim, zero)),
        ProblemKind::Filament => (d * C64::new(2.0 * params.gamma, 0.0), q),
    };
    let mut pencil = BlockPencil { k, quad, lin, constant: b, reduced: false };
    if mu == 0.0 && c > 0 {
        let keep = dim - c;
        pencil = BlockPencil {
            k,
            quad: pencil.quad.view((c, c), (keep, keep)).into_owned(),
            lin: pencil.lin.view((c, c), (keep, keep)).into_owned(),
            constant: pencil.constant.view((c, c), (keep, keep)).into_owned(),
            reduced: true,
        };
    }
    Ok(pencil)
}

/// The Hermitian Fourier block `m_k(nu)`.
#[derive(Debug, Clone)]
pub struct SpectralBlock {
    pub k: usize,
    pub nu: f64,
    pub matrix: DMatrix<C64>,
}

impl SpectralBlock {
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn det(&self) -> f64 {
        self.matrix.determinant().re
    }
}

pub fn block_m(k: usize, nu: f64, params: &ProblemParams) -> Result<SpectralBlock> {
    let pencil = block_pencil(k, params)?;
    Ok(SpectralBlock { k, nu, matrix: pencil.eval(C64::new(nu, 0.0)) })
}

/// Negative eigenvalues (the Morse index) and near-zero eigenvalues of a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MorseIndex {
    pub negative: usize,
    pub kernel: usize,
}

pub fn morse_index(block: &SpectralBlock) -> MorseIndex {
    morse_of_eigenvalues(&block.eigenvalues())
}

pub fn morse_of_eigenvalues(ev: &[f64]) -> MorseIndex {
    MorseIndex {
        negative: ev.iter().filter(|&&l| l < -TOL_ZERO).count(),
        kernel: ev.iter().filter(|&&l| l.abs() <= TOL_ZERO).count(),
    }
}

/// Sign of `omega`, the sign of the Hessian transverse to the rotation orbit.
pub fn sigma(params: &ProblemParams) -> Result<i32> {
    let omega = params.omega();
    if omega.abs() < 1e-12 {
        return Err(Error::DegenerateParameter(format!(
            "omega = s1 + mu = 0 (mu = {})",
            params.mu
        )));
    }
    Ok(if omega > 0.0 { 1 } else { -1 })
}

/// Index jump `sigma * (n_k(nu0 - rho) - n_k(nu0 + rho))`.
///
/// With `rho = None` the probe starts at `1e-4 (1 + |nu0|)`; whenever a probe
/// meets a near-singular block the width is halved, down to `1e-10`.
pub fn eta(k: usize, nu0: f64, params: &ProblemParams, rho: Option<f64>) -> Result<i32> {
    let s = sigma(params)?;
    let pencil = block_pencil(k, params)?;
    let mut width = rho.unwrap_or(1e-4 * (1.0 + nu0.abs()));
    while width >= 1e-10 {
        let left = morse_of_eigenvalues(&hermitian_eigenvalues(&pencil.eval(C64::new(nu0 - width, 0.0))));
        let right = morse_of_eigenvalues(&hermitian_eigenvalues(&pencil.eval(C64::new(nu0 + width, 0.0))));
        if left.kernel == 0 && right.kernel == 0 {
            return Ok(s * (left.negative as i32 - right.negative as i32));
        }
        width /= 2.0;
    }
    Err(Error::ProbeWidth { nu0 })
}

/// All complex roots of `det m_k(nu)`, from the companion linearization of the pencil.
pub fn block_roots(k: usize, params: &ProblemParams) -> Result<Vec<C64>> {
    let p = block_pencil(k, params)?;
    let d = p.dim();
    if p.is_linear() {
        // (B - nu G) x = 0
        let ginv = p.lin.clone().try_inverse().ok_or_else(|| {
            Error::DegenerateParameter(format!("first-order coefficient of block {k} is singular"))
        })?;
        return Ok(complex_eigenvalues(&(ginv * &p.constant)));
    }
    let qinv = p.quad.clone().try_inverse().ok_or_else(|| {
        Error::DegenerateParameter(format!("second-order coefficient of block {k} is singular"))
    })?;
    let mut a = DMatrix::from_element(2 * d, 2 * d, C64::new(0.0, 0.0));
    for i in 0..d {
        a[(i, d + i)] = C64::new(1.0, 0.0);
    }
    a.view_mut((d, 0), (d, d)).copy_from(&(-&qinv * &p.constant));
    a.view_mut((d, d), (d, d)).copy_from(&(&qinv * &p.lin));
    Ok(complex_eigenvalues(&a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn vortex_mu0_first_block() {
        let p = ProblemParams::vortex(5, 0.0).unwrap();
        let nu = 0.7;
        let m = block_m(1, nu, &p).unwrap().matrix;
        assert_eq!(m.nrows(), 2);
        let expected = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(2.0, 0.0), C64::new(0.0, nu), C64::new(0.0, -nu), C64::new(2.0, 0.0)],
        );
        assert!(max_abs(&(&m - &expected)) < 1e-15);
        let m4 = block_m(4, nu, &p).unwrap().matrix;
        assert!(max_abs(&(m4 - expected)) < 1e-15);
    }

    #[test]
    fn explicit_vortex_first_block() {
        let (n, mu, nu) = (6usize, 0.8, 1.3);
        let p = ProblemParams::vortex(n, mu).unwrap();
        let s1 = p.s1();
        let q = (n as f64 / 2.0).sqrt() * mu;
        let c = |r: f64, i: f64| C64::new(r, i);
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(mu * (-nu + s1 + mu), 0.0), c(-q, 0.0), c(0.0, -q),
                c(-q, 0.0), c(s1 + 2.0 * mu, 0.0), c(0.0, nu),
                c(0.0, q), c(0.0, -nu), c(s1, 0.0),
            ],
        );
        assert!(max_abs(&(block_m(1, nu, &p).unwrap().matrix - expected)) < 1e-14);
    }

    #[test]
    fn explicit_filament_first_block() {
        let (n, mu, nu, g) = (5usize, -0.6, 0.9, 1.7);
        let p = ProblemParams::filament(n, mu, g).unwrap();
        let s1 = p.s1();
        let q = (n as f64 / 2.0).sqrt() * mu;
        let c = |r: f64, i: f64| C64::new(r, i);
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(mu * (mu * nu * nu - 2.0 * g * nu + s1 + mu), 0.0), c(-q, 0.0), c(0.0, -q),
                c(-q, 0.0), c(nu * nu + s1 + 2.0 * mu, 0.0), c(0.0, 2.0 * g * nu),
                c(0.0, q), c(0.0, -2.0 * g * nu), c(nu * nu + s1, 0.0),
            ],
        );
        assert!(max_abs(&(block_m(1, nu, &p).unwrap().matrix - expected)) < 1e-14);
    }

    #[test]
    fn explicit_n2_blocks_match_up_to_conjugation() {
        // the displayed n = 2 matrices use the opposite orientation of the
        // first-order term; they equal the conjugate of ours
        let (mu, nu, g) = (0.8, 1.1, 0.6);
        let s2 = std::f64::consts::SQRT_2;
        let c = |r: f64, i: f64| C64::new(r, i);
        let vortex = DMatrix::from_row_slice(
            4,
            4,
            &[
                c(mu * (mu + 2.5), 0.0), c(0.0, -nu * mu), c(-s2 * mu, 0.0), c(0.0, 0.0),
                c(0.0, nu * mu), c(mu * (mu - 1.5), 0.0), c(0.0, 0.0), c(s2 * mu, 0.0),
                c(-s2 * mu, 0.0), c(0.0, 0.0), c(2.0 * mu + 0.5, 0.0), c(0.0, -nu),
                c(0.0, 0.0), c(s2 * mu, 0.0), c(0.0, nu), c(0.5, 0.0),
            ],
        );
        let pv = ProblemParams::vortex(2, mu).unwrap();
        let ours = block_m(1, nu, &pv).unwrap().matrix;
        assert!(max_abs(&(ours.conjugate() - &vortex)) < 1e-14);

        let filament = DMatrix::from_row_slice(
            4,
            4,
            &[
                c(mu * (mu * nu * nu + mu + 2.5), 0.0), c(0.0, -2.0 * nu * g * mu), c(-s2 * mu, 0.0), c(0.0, 0.0),
                c(0.0, 2.0 * nu * g * mu), c(mu * (mu * nu * nu + mu - 1.5), 0.0), c(0.0, 0.0), c(s2 * mu, 0.0),
                c(-s2 * mu, 0.0), c(0.0, 0.0), c(nu * nu + 2.0 * mu + 0.5, 0.0), c(0.0, -2.0 * nu * g),
                c(0.0, 0.0), c(s2 * mu, 0.0), c(0.0, 2.0 * nu * g), c(nu * nu + 0.5, 0.0),
            ],
        );
        let pf = ProblemParams::filament(2, mu, g).unwrap();
        let ours = block_m(1, nu, &pf).unwrap().matrix;
        assert!(max_abs(&(ours.conjugate() - &filament)) < 1e-14);
    }

    #[test]
    fn morse_counts() {
        let diag = |v: &[f64]| SpectralBlock {
            k: 1,
            nu: 0.0,
            matrix: DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                v.len(),
                v.iter().map(|&x| C64::new(x, 0.0)),
            )),
        };
        assert_eq!(morse_index(&diag(&[1.0, -2.0, 3.0])).negative, 1);
        assert_eq!(morse_index(&diag(&[1.0, 1.0, 1.0])).negative, 0);
        let m = morse_index(&diag(&[1.0, 1e-12, -1.0]));
        assert_eq!((m.negative, m.kernel), (1, 1));
        let p = ProblemParams::vortex(5, 3.0).unwrap();
        assert_eq!(morse_index(&block_m(1, -10.0, &p).unwrap()).negative, 1);
    }

    #[test]
    fn sigma_signs() {
        assert_eq!(sigma(&ProblemParams::vortex(4, 0.0).unwrap()).unwrap(), 1);
        assert_eq!(sigma(&ProblemParams::vortex(3, -5.0).unwrap()).unwrap(), -1);
        assert!(matches!(
            sigma(&ProblemParams::vortex(5, -2.0).unwrap()),
            Err(Error::DegenerateParameter(_))
        ));
    }

    #[test]
    fn eta_examples() {
        let p = ProblemParams::vortex(4, 0.0).unwrap();
        assert_eq!(eta(2, 2f64.sqrt(), &p, None).unwrap(), -1);
        assert_eq!(eta(2, 0.9, &p, None).unwrap(), 0);

        let f = ProblemParams::filament(4, 0.0, 2.0).unwrap();
        let (om, omk, g) = (1.5, 1.0, 2.0f64);
        let b = 2.0 * g * g - om;
        let disc = (b * b - 4.0 * omk * (om - omk)).sqrt();
        assert_eq!(eta(2, (b - disc).sqrt(), &f, None).unwrap(), -1);
        assert_eq!(eta(2, (b + disc).sqrt(), &f, None).unwrap(), 1);
    }

    #[test]
    fn conjugate_symmetry_of_blocks() {
        for n in 3..=8 {
            for kind in [ProblemKind::Vortex, ProblemKind::Filament] {
                let p = ProblemParams::new(n, 0.7, 1.2, kind).unwrap();
                for k in 1..n {
                    for &nu in &[-2.3, 0.4, 1.9] {
                        let a = block_m(n - k, nu, &p).unwrap().matrix;
                        let b = block_m(k, -nu, &p).unwrap().matrix.conjugate();
                        assert!(max_abs(&(a - b)) < 1e-12, "n={n} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn roots_annihilate_determinant() {
        for kind in [ProblemKind::Vortex, ProblemKind::Filament] {
            let p = ProblemParams::new(5, 0.7, 1.4, kind).unwrap();
            let pencil = block_pencil(1, &p).unwrap();
            for r in block_roots(1, &p).unwrap() {
                let det = pencil.eval(r).determinant();
                assert!(det.norm() < 1e-8, "{kind} root {r} det {det}");
            }
        }
    }
}

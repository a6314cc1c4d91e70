//! Symmetry-adapted coordinates for the ring.
//!
//! The complexified configuration space splits into the isotypic pieces `W_k`,
//! `k = 1..=n`, on which the ring generator `(zeta, zeta)` acts as `e^{i k zeta}`.
//! A vector `w` in `C^2` is spread over the peripheral elements as
//! `n^{-1/2} e^{i k j zeta} R(j zeta) w`, so its first component is radial and
//! its second tangential. For `k = 1` and `k = n - 1` the central element joins
//! through `v_1 = (1, i)/sqrt 2` and `v_{n-1} = (1, -i)/sqrt 2`. For `n = 2`
//! every vector `(v, w, w)` lies in `W_1`, which is then four dimensional.
//!
//! Inner products are conjugate-linear in the first slot.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::to_complex;
use crate::model::{rotation, ProblemParams};
use crate::C64;

/// Shape of the block attached to the index `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockShape {
    /// Peripheral elements only, `C^2`.
    Peripheral,
    /// Central element through `v_1` (`k = 1`) or `v_{n-1}` (`k = n - 1`), `C^3`.
    Coupled { conjugate: bool },
    /// `n = 2`, `k = 1`: the full central plane and `w` on both peripheral elements, `C^4`.
    PairCoupled,
}

impl BlockShape {
    pub fn of(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::IndexOutOfRange { k, n });
        }
        Ok(if n == 2 && k == 1 {
            BlockShape::PairCoupled
        } else if n >= 3 && k == 1 {
            BlockShape::Coupled { conjugate: false }
        } else if n >= 3 && k == n - 1 {
            BlockShape::Coupled { conjugate: true }
        } else {
            BlockShape::Peripheral
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            BlockShape::Peripheral => 2,
            BlockShape::Coupled { .. } => 3,
            BlockShape::PairCoupled => 4,
        }
    }

    /// Number of leading block coordinates that belong to the central element.
    pub fn central_dim(&self) -> usize {
        self.dim() - 2
    }
}

pub fn block_dim(n: usize, k: usize) -> Result<usize> {
    Ok(BlockShape::of(n, k)?.dim())
}

/// Orthonormal basis of `W_k`; the columns are the images of the standard
/// basis vectors under `T_k`.
#[derive(Debug, Clone)]
pub struct IrrepBasis {
    pub n: usize,
    pub k: usize,
    pub shape: BlockShape,
    pub columns: DMatrix<C64>,
}

impl IrrepBasis {
    /// `T_k(w)`.
    pub fn apply(&self, w: &DVector<C64>) -> DVector<C64> {
        &self.columns * w
    }

    /// Coordinates of `x` in this basis (orthogonal projection).
    pub fn coordinates(&self, x: &DVector<C64>) -> DVector<C64> {
        self.columns.adjoint() * x
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }
}

fn peripheral_column(n: usize, k: usize, a: usize) -> DVector<C64> {
    let zeta = 2.0 * std::f64::consts::PI / n as f64;
    let scale = 1.0 / (n as f64).sqrt();
    let mut col = DVector::from_element(2 * (n + 1), C64::new(0.0, 0.0));
    for j in 1..=n {
        let phase = C64::from_polar(scale, (k * j) as f64 * zeta);
        let r = rotation(j as f64 * zeta);
        col[2 * j] = phase * r[(0, a)];
        col[2 * j + 1] = phase * r[(1, a)];
    }
    col
}

pub fn irrep_basis(n: usize, k: usize) -> Result<IrrepBasis> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n = {n}, need n >= 2")));
    }
    let shape = BlockShape::of(n, k)?;
    let dim = 2 * (n + 1);
    let zero = C64::new(0.0, 0.0);
    let mut cols = Vec::with_capacity(shape.dim());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match shape {
        BlockShape::Coupled { conjugate } => {
            let mut c = DVector::from_element(dim, zero);
            c[0] = C64::new(h, 0.0);
            c[1] = C64::new(0.0, if conjugate { -h } else { h });
            cols.push(c);
        }
        BlockShape::PairCoupled => {
            for a in 0..2 {
                let mut c = DVector::from_element(dim, zero);
                c[a] = C64::new(1.0, 0.0);
                cols.push(c);
            }
        }
        BlockShape::Peripheral => {}
    }
    cols.push(peripheral_column(n, k, 0));
    cols.push(peripheral_column(n, k, 1));
    Ok(IrrepBasis { n, k, shape, columns: DMatrix::from_columns(&cols) })
}

/// Column offset of each block inside [`assemble_p`], indexed by `k - 1`.
pub fn block_offsets(n: usize) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(n);
    let mut acc = 0;
    for k in 1..=n {
        offsets.push(acc);
        acc += block_dim(n, k).expect("k in range");
    }
    offsets
}

/// The unitary change of variables `P`, columns grouped by `k = 1..=n`.
pub fn assemble_p(n: usize) -> Result<DMatrix<C64>> {
    let mut cols = Vec::with_capacity(2 * (n + 1));
    for k in 1..=n {
        let b = irrep_basis(n, k)?;
        cols.extend(b.columns.column_iter().map(|c| c.into_owned()));
    }
    Ok(DMatrix::from_columns(&cols))
}

#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub n: usize,
    /// `blocks[k - 1] = B_k`.
    pub blocks: Vec<DMatrix<C64>>,
    /// Frobenius norm of the off-block part of `P* H P`.
    pub residual: f64,
}

impl BlockDecomposition {
    pub fn block(&self, k: usize) -> &DMatrix<C64> {
        &self.blocks[k - 1]
    }
}

/// Projects a real symmetric matrix onto the symmetry-adapted blocks.
pub fn decompose_hessian(h: &DMatrix<f64>, n: usize) -> Result<BlockDecomposition> {
    let dim = 2 * (n + 1);
    if h.nrows() != dim || h.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: h.nrows().max(h.ncols()) });
    }
    let p = assemble_p(n)?;
    let full = p.adjoint() * to_complex(h) * &p;
    let offsets = block_offsets(n);
    let mut off = full.clone();
    let mut blocks = Vec::with_capacity(n);
    for k in 1..=n {
        let d = block_dim(n, k)?;
        let o = offsets[k - 1];
        blocks.push(full.view((o, o), (d, d)).into_owned());
        off.view_mut((o, o), (d, d)).fill(C64::new(0.0, 0.0));
    }
    Ok(BlockDecomposition { n, blocks, residual: off.norm() })
}

/// Closed-form block `B_k` of the Hessian at the ring.
pub fn analytic_bk(params: &ProblemParams, k: usize) -> Result<DMatrix<C64>> {
    let n = params.n;
    let shape = BlockShape::of(n, k)?;
    let mu = params.mu;
    let s1 = params.s1();
    let c = |re: f64| C64::new(re, 0.0);
    Ok(match shape {
        BlockShape::Peripheral => {
            let sk = params.s_k(k);
            DMatrix::from_diagonal(&DVector::from_vec(vec![c(2.0 * (mu + s1) - sk), c(sk)]))
        }
        BlockShape::Coupled { conjugate } => {
            let q = (n as f64 / 2.0).sqrt() * mu;
            let im = if conjugate { q } else { -q };
            DMatrix::from_row_slice(
                3,
                3,
                &[
                    c(mu * (s1 + mu)),
                    c(-q),
                    C64::new(0.0, im),
                    c(-q),
                    c(s1 + 2.0 * mu),
                    c(0.0),
                    C64::new(0.0, -im),
                    c(0.0),
                    c(s1),
                ],
            )
        }
        BlockShape::PairCoupled => {
            let r = std::f64::consts::SQRT_2 * mu;
            DMatrix::from_row_slice(
                4,
                4,
                &[
                    c(mu * (mu + 2.5)),
                    c(0.0),
                    c(-r),
                    c(0.0),
                    c(0.0),
                    c(mu * (mu - 1.5)),
                    c(0.0),
                    c(r),
                    c(-r),
                    c(0.0),
                    c(2.0 * mu + 0.5),
                    c(0.0),
                    c(0.0),
                    c(r),
                    c(0.0),
                    c(0.5),
                ],
            )
        }
    })
}

/// Values of `mu` at which some `B_k` (`k < n`) is singular: `mu_1 = s1^2` and
/// `mu_k = s_k/2 - s1` for `k = 2..=n/2`. Empty for `n = 2`, whose singular
/// values are handled by the spectral module.
pub fn degenerate_mus(n: usize) -> Vec<(usize, f64)> {
    if n < 3 {
        return Vec::new();
    }
    let s1 = (n as f64 - 1.0) / 2.0;
    let mut out = vec![(1, s1 * s1)];
    for k in 2..=n / 2 {
        out.push((k, crate::model::s_k(n, k) / 2.0 - s1));
    }
    out
}
